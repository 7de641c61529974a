#include "difd/forgery.hpp"

#include "difd/error.hpp"
#include "difd/kernels.hpp"

#include <cmath>
#include <cstdio>

namespace difd {

RegionSpec RegionSpec::rect(int x, int y, int w, int h) {
    RegionSpec r;
    r.is_rect = true;
    r.x = x;
    r.y = y;
    r.w = w;
    r.h = h;
    return r;
}

RegionSpec RegionSpec::mask(Image mask) {
    RegionSpec r;
    r.is_rect = false;
    r.mask_image = std::move(mask);
    return r;
}

Image RegionSpec::rasterize(int width, int height) const {
    Image out(width, height, 1);
    std::size_t region_pixels = 0;
    if (is_rect) {
        if (w < 1 || h < 1 || x < 0 || y < 0 || x + w > width || y + h > height)
            throw ParamError("region rectangle out of image bounds");
        for (int yy = y; yy < y + h; ++yy) {
            float* row = out.row(0, yy);
            for (int xx = x; xx < x + w; ++xx)
                row[xx] = 1.0f;
        }
        region_pixels = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    } else {
        if (mask_image.channels() != 1 || mask_image.width() != width ||
            mask_image.height() != height)
            throw ParamError("region mask must be single-channel and match the image size");
        const float* src = mask_image.plane(0);
        float* dst = out.plane(0);
        for (std::size_t i = 0; i < out.plane_size(); ++i) {
            dst[i] = src[i] != 0.0f ? 1.0f : 0.0f;
            region_pixels += dst[i] != 0.0f;
        }
    }
    if (region_pixels == 0)
        throw ParamError("region is empty");
    if (region_pixels == out.plane_size())
        throw ParamError("region covers the entire image (nothing left to analyze)");
    return out;
}

SplitImage split(const Image& p, const RegionSpec& region) {
    SplitImage s;
    s.region_mask = region.rasterize(p.width(), p.height());

    s.valid_mask = Image(p.width(), p.height(), 1);
    const float* rm = s.region_mask.plane(0);
    float* vm = s.valid_mask.plane(0);
    for (std::size_t i = 0; i < s.valid_mask.plane_size(); ++i) {
        vm[i] = rm[i] != 0.0f ? 0.0f : 1.0f;
        s.region_count += rm[i] != 0.0f;
    }
    s.valid_count = s.valid_mask.plane_size() - s.region_count;

    s.analysis = Image(p.width(), p.height(), p.channels());
    s.query = Image(p.width(), p.height(), p.channels());
    const auto& kn = kernels::ops();
    for (int c = 0; c < p.channels(); ++c) {
        kn.mul(p.plane(c), vm, s.analysis.plane(c), p.plane_size());
        kn.mul(p.plane(c), rm, s.query.plane(c), p.plane_size());
    }
    return s;
}

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::consistent:
        return "consistent";
    case Verdict::inconsistent:
        return "inconsistent";
    case Verdict::insufficient_evidence:
        return "insufficient-evidence";
    }
    return "?";
}

namespace {

struct Chroma {
    double r = 0.0;
    double g = 0.0;
    std::size_t support = 0;
};

// Mean of per-pixel chromaticities (R,G)/(R+G+B) over mask pixels with a
// nonzero brightness sum.
Chroma mean_chroma(const Image& img, const Image& mask) {
    Chroma ch;
    const float* m = mask.plane(0);
    const float* pr = img.plane(0);
    const float* pg = img.plane(1);
    const float* pb = img.plane(2);
    double sum_r = 0.0, sum_g = 0.0;
    for (std::size_t i = 0; i < img.plane_size(); ++i) {
        if (m[i] == 0.0f)
            continue;
        const double total = static_cast<double>(pr[i]) + pg[i] + pb[i];
        if (total <= 0.0)
            continue;
        sum_r += pr[i] / total;
        sum_g += pg[i] / total;
        ++ch.support;
    }
    if (ch.support > 0) {
        ch.r = sum_r / static_cast<double>(ch.support);
        ch.g = sum_g / static_cast<double>(ch.support);
    }
    return ch;
}

} // namespace

ConsistencyReport forgery_score(const Image& p, const Image& p_r, const RegionSpec& region,
                                const AnalysisParams& params, double evidence_threshold,
                                double tau, double min_support) {
    params.validate();
    if (p.channels() != 3)
        throw ParamError("forgery check requires 3-channel images (chromaticity metric)");
    if (!p.same_shape(p_r))
        throw ShapeError("scene and reference shapes differ");
    if (!(evidence_threshold > 0.0 && evidence_threshold <= 1.0))
        throw ParamError("evidence threshold must lie in (0, 1]");
    if (!(tau >= 0.0) || !(min_support >= 0.0))
        throw ParamError("tau and min-support must be >= 0");

    SplitImage parts = split(p, region);

    ConsistencyReport report;
    report.evidence_threshold = evidence_threshold;
    report.tau = tau;
    report.min_support = min_support;
    report.sigma = params.sigma;

    // Mask-aware difference analysis of p' against the reference. The
    // difference is taken on the full frames and the region is excluded via
    // the validity mask, so the forged pixels never touch the evidence.
    Image d = subtract(p, p_r);
    Image filtered;
    if (params.sigma > 0.0) {
        filtered = spatial_filter_masked(d, parts.valid_mask, build_kernel(params));
    } else {
        filtered = Image(d.width(), d.height(), d.channels());
        const auto& kn = kernels::ops();
        for (int c = 0; c < d.channels(); ++c)
            kn.mul(d.plane(c), parts.valid_mask.plane(0), filtered.plane(c), d.plane_size());
    }
    report.amplified = amplify_split_masked(filtered, parts.valid_mask, params.zero_floor);
    report.degenerate = report.amplified.degenerate_plus;

    // Evidence support: valid pixels whose strongest channel clears the
    // threshold.
    report.evidence_mask = Image(p.width(), p.height(), 1);
    std::size_t evidence_pixels = 0;
    {
        const Image& dp = report.amplified.d_plus;
        const float* vm = parts.valid_mask.plane(0);
        const float* r = dp.plane(0);
        const float* g = dp.plane(1);
        const float* b = dp.plane(2);
        float* em = report.evidence_mask.plane(0);
        const float thr = static_cast<float>(evidence_threshold);
        for (std::size_t i = 0; i < dp.plane_size(); ++i) {
            const float peak = std::max(r[i], std::max(g[i], b[i]));
            if (vm[i] != 0.0f && peak >= thr) {
                em[i] = 1.0f;
                ++evidence_pixels;
            }
        }
    }
    report.evidence_mask_fraction =
        parts.valid_count == 0
            ? 0.0
            : static_cast<double>(evidence_pixels) / static_cast<double>(parts.valid_count);

    if (report.degenerate || report.evidence_mask_fraction < min_support) {
        report.verdict = Verdict::insufficient_evidence;
        return report;
    }

    const Chroma evidence = mean_chroma(report.amplified.d_plus, report.evidence_mask);
    const Chroma query = mean_chroma(parts.query, parts.region_mask);
    if (evidence.support == 0 || query.support == 0) {
        report.verdict = Verdict::insufficient_evidence;
        return report;
    }

    report.evidence_chroma_r = evidence.r;
    report.evidence_chroma_g = evidence.g;
    report.query_chroma_r = query.r;
    report.query_chroma_g = query.g;
    report.chroma_distance = std::hypot(evidence.r - query.r, evidence.g - query.g);
    report.verdict =
        report.chroma_distance > tau ? Verdict::inconsistent : Verdict::consistent;
    return report;
}

std::string format_consistency_report(const ConsistencyReport& report) {
    char buf[512];
    std::string out;
    out += "verdict: ";
    out += to_string(report.verdict);
    out += '\n';
    std::snprintf(buf, sizeof buf,
                  "chroma_distance: %.9g\n"
                  "evidence_chroma_r: %.9g\n"
                  "evidence_chroma_g: %.9g\n"
                  "query_chroma_r: %.9g\n"
                  "query_chroma_g: %.9g\n"
                  "evidence_mask_fraction: %.9g\n"
                  "degenerate: %d\n"
                  "gain_plus: %.9g\n"
                  "evidence_threshold: %.9g\n"
                  "tau: %.9g\n"
                  "min_support: %.9g\n"
                  "sigma: %.9g\n",
                  report.chroma_distance, report.evidence_chroma_r, report.evidence_chroma_g,
                  report.query_chroma_r, report.query_chroma_g, report.evidence_mask_fraction,
                  report.degenerate ? 1 : 0, report.amplified.gain_plus,
                  report.evidence_threshold, report.tau, report.min_support, report.sigma);
    out += buf;
    return out;
}

} // namespace difd

#include "difd/pipeline.hpp"

#include "difd/error.hpp"
#include "difd/kernels.hpp"

#include <cmath>
#include <vector>

namespace difd {

namespace {

// Symmetric (edge-repeating) mirror: ... c b a | a b c ... | c b a ...
// Folds repeatedly, so the radius may exceed the axis length.
int mirror_index(int i, int n) {
    if (n == 1)
        return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - 1 - i;
}

void build_mirror_padded(const float* row, int w, int radius, float* pad) {
    for (int x = 0; x < radius; ++x)
        pad[x] = row[mirror_index(x - radius, w)];
    for (int x = 0; x < w; ++x)
        pad[radius + x] = row[x];
    for (int x = 0; x < radius; ++x)
        pad[radius + w + x] = row[mirror_index(w + x, w)];
}

// Horizontal then vertical 1D pass over one plane. Each output row is
// independent, so the loops parallelize with bit-identical results.
void filter_plane(const float* src, float* dst, int w, int h, const GaussianKernel& k) {
    const int r = k.radius;
    const int taps = k.taps();
    const double* wts = k.weights.data();
    const auto& kn = kernels::ops();

    std::vector<float> horiz(static_cast<std::size_t>(w) * h);

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<float> pad(static_cast<std::size_t>(w) + 2 * r);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int y = 0; y < h; ++y) {
            build_mirror_padded(src + static_cast<std::size_t>(y) * w, w, r, pad.data());
            kn.conv1d(pad.data(), wts, taps, horiz.data() + static_cast<std::size_t>(y) * w,
                      static_cast<std::size_t>(w));
        }
    }

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<double> acc(static_cast<std::size_t>(w));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int y = 0; y < h; ++y) {
            const float* row0 = horiz.data() + static_cast<std::size_t>(mirror_index(y - r, h)) * w;
            kn.mul_f64(row0, wts[0], acc.data(), static_cast<std::size_t>(w));
            for (int j = 1; j < taps; ++j) {
                const float* rowj =
                    horiz.data() + static_cast<std::size_t>(mirror_index(y - r + j, h)) * w;
                kn.axpy_f64(rowj, wts[j], acc.data(), static_cast<std::size_t>(w));
            }
            kn.scale_f64_to_f32(acc.data(), 1.0, dst + static_cast<std::size_t>(y) * w,
                                static_cast<std::size_t>(w));
        }
    }
}

} // namespace

GaussianKernel build_kernel(const AnalysisParams& params) {
    params.validate();
    if (!(params.sigma > 0.0))
        throw ParamError("build_kernel requires sigma > 0");

    GaussianKernel k;
    k.sigma = params.sigma;
    k.radius = params.effective_radius();
    k.weights.resize(static_cast<std::size_t>(k.taps()));

    const double inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);
    double sum = 0.0;
    for (int j = -k.radius; j <= k.radius; ++j) {
        double wj = std::exp(-static_cast<double>(j) * j * inv_two_sigma_sq);
        k.weights[static_cast<std::size_t>(j + k.radius)] = wj;
        sum += wj;
    }
    for (double& wj : k.weights)
        wj /= sum;
    return k;
}

Image spatial_filter(const Image& d, const GaussianKernel& kernel) {
    if (kernel.radius < 1 || kernel.weights.size() != static_cast<std::size_t>(kernel.taps()))
        throw ParamError("malformed Gaussian kernel");
    Image out(d.width(), d.height(), d.channels());
    for (int c = 0; c < d.channels(); ++c)
        filter_plane(d.plane(c), out.plane(c), d.width(), d.height(), kernel);
    return out;
}

Image spatial_filter_masked(const Image& d, const Image& valid, const GaussianKernel& kernel) {
    if (valid.channels() != 1 || valid.width() != d.width() || valid.height() != d.height())
        throw ShapeError("valid mask must be single-channel and match the image size");

    const std::size_t plane = d.plane_size();
    const auto& kn = kernels::ops();

    Image filtered_mask = spatial_filter(valid, kernel);

    Image out(d.width(), d.height(), d.channels());
    Image masked(d.width(), d.height(), 1);
    Image num(d.width(), d.height(), 1);
    for (int c = 0; c < d.channels(); ++c) {
        kn.mul(d.plane(c), valid.plane(0), masked.plane(0), plane);
        filter_plane(masked.plane(0), num.plane(0), d.width(), d.height(), kernel);
        kn.div_masked(num.plane(0), filtered_mask.plane(0), 1e-12f, out.plane(c), plane);
        // invalid pixels carry no evidence; zero them out
        kn.mul(out.plane(c), valid.plane(0), out.plane(c), plane);
    }
    return out;
}

namespace {

AmplifiedPair amplify_from_extremes(const Image& filtered, MinMax mm, double zero_floor) {
    const auto& kn = kernels::ops();
    AmplifiedPair pair;
    pair.d_plus = Image(filtered.width(), filtered.height(), filtered.channels());
    pair.d_minus = Image(filtered.width(), filtered.height(), filtered.channels());

    if (static_cast<double>(mm.max) <= zero_floor) {
        pair.degenerate_plus = true;
    } else {
        pair.gain_plus = 1.0 / static_cast<double>(mm.max);
        kn.div_relu(filtered.samples().data(), mm.max, pair.d_plus.samples().data(),
                    filtered.sample_count());
    }

    const float neg_mag = 0.0f - mm.min;
    if (static_cast<double>(neg_mag) <= zero_floor) {
        pair.degenerate_minus = true;
    } else {
        pair.gain_minus = 1.0 / static_cast<double>(neg_mag);
        kn.div_relu_neg(filtered.samples().data(), neg_mag, pair.d_minus.samples().data(),
                        filtered.sample_count());
    }
    return pair;
}

} // namespace

AmplifiedPair amplify_split(const Image& filtered, double zero_floor) {
    if (!all_finite(filtered))
        throw DataError("amplify_split: non-finite samples in input");
    return amplify_from_extremes(filtered, sample_min_max(filtered), zero_floor);
}

AmplifiedPair amplify_split_masked(const Image& filtered, const Image& valid,
                                   double zero_floor) {
    if (!all_finite(filtered))
        throw DataError("amplify_split: non-finite samples in input");
    if (valid.channels() != 1 || valid.width() != filtered.width() ||
        valid.height() != filtered.height())
        throw ShapeError("valid mask must be single-channel and match the image size");

    // Invalid pixels are zero in `filtered` (spatial_filter_masked guarantees
    // it), so zeros only ever pull the extremes toward the degenerate case,
    // which is the wanted masked semantics.
    return amplify_from_extremes(filtered, sample_min_max(filtered), zero_floor);
}

AmplifiedPair analyze_pair(const Image& p, const Image& p_r, const AnalysisParams& params) {
    params.validate();
    Image d = subtract(p, p_r);
    if (params.sigma > 0.0) {
        GaussianKernel k = build_kernel(params);
        d = spatial_filter(d, k);
    }
    return amplify_split(d, params.zero_floor);
}

} // namespace difd

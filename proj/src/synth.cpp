#include "difd/synth.hpp"

#include "difd/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace difd {

namespace {

constexpr std::uint64_t kStreamReferenceNoise = 1;
constexpr std::uint64_t kStreamSceneNoise = 2;
constexpr std::uint64_t kStreamTexture = 3;
constexpr std::uint64_t kStreamFrameNoiseBase = 1000;

constexpr double kMaxPeak = 8.0 / 255.0; // sub-perceptual regime by construction

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(stream ^ splitmix64(index)));
}

double uniform_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return static_cast<double>(hash_counter(seed, stream, index) >> 11) * 0x1.0p-53;
}

double gaussian_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // Box-Muller on two counter draws; u1 in (0,1] keeps the log finite.
    const double u1 =
        (static_cast<double>(hash_counter(seed, stream, 2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform_sample(seed, stream, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---- evidence fields -------------------------------------------------------

namespace {

double taper(double t, double plateau) {
    if (t >= 1.0)
        return 0.0;
    if (t <= plateau)
        return 1.0;
    const double s = (t - plateau) / (1.0 - plateau);
    return 0.5 * (1.0 + std::cos(std::numbers::pi * s));
}

} // namespace

double EvidenceField::profile_at(double x, double y) const {
    if (shape == Shape::ellipse) {
        const double u = (x - cx) / rx;
        const double v = (y - cy) / ry;
        return taper(std::sqrt(u * u + v * v), plateau);
    }
    const double u = std::abs(x - cx) / rx;
    const double v = std::abs(y - cy) / ry;
    return taper(u, plateau) * taper(v, plateau);
}

void EvidenceField::validate(int channels) const {
    if (!(rx > 0.0) || !(ry > 0.0))
        throw ParamError("evidence field extents must be positive");
    if (!(peak > 0.0))
        throw ParamError("evidence field peak amplitude must be positive");
    if (peak > kMaxPeak)
        throw ParamError("evidence field peak amplitude exceeds the sub-perceptual bound 8/255");
    if (!(plateau >= 0.0) || plateau >= 1.0)
        throw ParamError("field plateau must lie in [0, 1)");
    double sum = 0.0;
    for (double c : chroma) {
        if (c < 0.0)
            throw ParamError("field chroma components must be nonnegative");
        sum += c;
    }
    if (!(sum > 0.0))
        throw ParamError("field chroma must have a positive sum");
    (void)channels;
}

// ---- scene construction ----------------------------------------------------

void SceneSpec::validate() const {
    if (width < 1 || height < 1)
        throw ParamError("scene dimensions must be at least 1x1");
    if (channels != 1 && channels != 3)
        throw ParamError("scene channel count must be 1 or 3");
    if (!(noise_std >= 0.0))
        throw ParamError("noise std must be >= 0");
    if (base == Base::constant) {
        if (!(base_level >= 0.0 && base_level <= 1.0))
            throw ParamError("base level must lie in [0,1]");
    } else {
        if (!(base_lo >= 0.0 && base_hi <= 1.0 && base_lo <= base_hi))
            throw ParamError("base range must satisfy 0 <= lo <= hi <= 1");
    }
    if (frames < 0 || entry_frame < 0)
        throw ParamError("frames and entry_frame must be >= 0");
    for (const EvidenceField& f : evidence)
        f.validate(channels);
}

namespace {

// Seeded value noise: random grid values, cosine-smoothed bilinear blend.
double textured_base(const SceneSpec& spec, int x, int y) {
    constexpr int kGrid = 16;
    const int gx = x / kGrid;
    const int gy = y / kGrid;
    const double fx = static_cast<double>(x % kGrid) / kGrid;
    const double fy = static_cast<double>(y % kGrid) / kGrid;
    const int stride = spec.width / kGrid + 2;

    auto node = [&](int ix, int iy) {
        const std::uint64_t id = static_cast<std::uint64_t>(iy) * stride + ix;
        return uniform_sample(spec.seed, kStreamTexture, id);
    };
    auto smooth = [](double t) { return 0.5 * (1.0 - std::cos(std::numbers::pi * t)); };

    const double sx = smooth(fx);
    const double sy = smooth(fy);
    const double top = node(gx, gy) * (1.0 - sx) + node(gx + 1, gy) * sx;
    const double bottom = node(gx, gy + 1) * (1.0 - sx) + node(gx + 1, gy + 1) * sx;
    const double v = top * (1.0 - sy) + bottom * sy;
    return spec.base_lo + (spec.base_hi - spec.base_lo) * v;
}

double base_value(const SceneSpec& spec, int x, int y) {
    switch (spec.base) {
    case SceneSpec::Base::constant:
        return spec.base_level;
    case SceneSpec::Base::gradient:
        return spec.width == 1 ? spec.base_lo
                               : spec.base_lo + (spec.base_hi - spec.base_lo) *
                                                    (static_cast<double>(x) / (spec.width - 1));
    case SceneSpec::Base::textured:
        return textured_base(spec, x, y);
    }
    return 0.0;
}

// base + signed evidence, one channel; also the spec-rejection check input
Image render_clean(const SceneSpec& spec, bool with_evidence) {
    Image img(spec.width, spec.height, spec.channels);
    for (int c = 0; c < spec.channels; ++c) {
        float* plane = img.plane(c);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                double v = base_value(spec, x, y);
                if (with_evidence) {
                    for (const EvidenceField& f : spec.evidence) {
                        const double weight =
                            spec.channels == 1 ? 1.0 : f.chroma[static_cast<std::size_t>(c)];
                        const double magnitude = f.peak * weight * f.profile_at(x, y);
                        v += f.kind == EvidenceField::Kind::reflection ? magnitude : -magnitude;
                    }
                }
                plane[static_cast<std::size_t>(y) * spec.width + x] = static_cast<float>(v);
            }
        }
    }
    return img;
}

void add_noise(Image& img, const SceneSpec& spec, std::uint64_t stream) {
    if (spec.noise_std <= 0.0)
        return;
    const std::size_t plane = img.plane_size();
    for (int c = 0; c < img.channels(); ++c) {
        float* p = img.plane(c);
        const std::uint64_t base_index = static_cast<std::uint64_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i)
            p[i] = static_cast<float>(
                p[i] + spec.noise_std * gaussian_sample(spec.seed, stream, base_index + i));
    }
}

std::vector<FieldTruth> field_truths(const SceneSpec& spec) {
    std::vector<FieldTruth> truths;
    truths.reserve(spec.evidence.size());
    for (const EvidenceField& f : spec.evidence) {
        FieldTruth t;
        t.kind = f.kind;
        double sum = f.chroma[0] + f.chroma[1] + f.chroma[2];
        t.chroma = {f.chroma[0] / sum, f.chroma[1] / sum, f.chroma[2] / sum};
        t.mask = Image(spec.width, spec.height, 1);
        float* m = t.mask.plane(0);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                m[static_cast<std::size_t>(y) * spec.width + x] =
                    f.profile_at(x, y) > 0.0 ? 1.0f : 0.0f;
        truths.push_back(std::move(t));
    }
    return truths;
}

void reject_if_out_of_range(const Image& clean, const char* what) {
    const MinMax mm = sample_min_max(clean);
    if (mm.min < 0.0f || mm.max > 1.0f)
        throw ParamError(std::string("scene spec rejected: ") + what +
                         " leaves [0,1]; adjust base level or field amplitudes");
}

} // namespace

ScenePair generate_pair(const SceneSpec& spec) {
    spec.validate();

    ScenePair pair;
    pair.reference = render_clean(spec, false);
    pair.scene = render_clean(spec, true);
    reject_if_out_of_range(pair.reference, "base");
    reject_if_out_of_range(pair.scene, "base plus evidence");
    add_noise(pair.reference, spec, kStreamReferenceNoise);
    add_noise(pair.scene, spec, kStreamSceneNoise);
    pair.truth = field_truths(spec);
    return pair;
}

SceneStream generate_stream(const SceneSpec& spec, int frames, int entry_frame) {
    spec.validate();
    if (frames < 1)
        throw ParamError("stream needs at least one frame");
    // entry_frame == frames is allowed: the empty evidence clip
    if (entry_frame < 0 || entry_frame > frames)
        throw ParamError("entry frame must lie in [0, frames]");

    const Image clean_base = render_clean(spec, false);
    const Image clean_evidence = render_clean(spec, true);
    reject_if_out_of_range(clean_base, "base");
    reject_if_out_of_range(clean_evidence, "base plus evidence");

    SceneStream out;
    out.entry_frame = entry_frame;
    out.stream = FrameStream(spec.fps);
    for (int i = 0; i < frames; ++i) {
        Image frame = i >= entry_frame ? clean_evidence : clean_base;
        add_noise(frame, spec, kStreamFrameNoiseBase + static_cast<std::uint64_t>(i));
        out.stream.append(i, std::move(frame));
    }
    out.truth = field_truths(spec);
    return out;
}

// ---- recovery metrics ------------------------------------------------------

RecoveryMetrics evaluate_recovery(const AmplifiedPair& pair, const Image& truth_mask,
                                  double threshold,
                                  std::optional<std::array<double, 2>> expected_chroma) {
    const Image& dp = pair.d_plus;
    if (truth_mask.channels() != 1 || truth_mask.width() != dp.width() ||
        truth_mask.height() != dp.height())
        throw ShapeError("truth mask must be single-channel and match the result size");

    const float* tm = truth_mask.plane(0);
    const std::size_t plane = dp.plane_size();
    std::size_t truth_pixels = 0;
    for (std::size_t i = 0; i < plane; ++i)
        truth_pixels += tm[i] != 0.0f;
    if (truth_pixels == 0)
        throw ParamError("truth mask is empty");

    RecoveryMetrics metrics;

    std::size_t inter = 0, uni = 0;
    const float thr = static_cast<float>(threshold);
    for (std::size_t i = 0; i < plane; ++i) {
        float peak = dp.plane(0)[i];
        for (int c = 1; c < dp.channels(); ++c)
            peak = std::max(peak, dp.plane(c)[i]);
        const bool detected = !pair.degenerate_plus && peak >= thr;
        const bool truth = tm[i] != 0.0f;
        inter += detected && truth;
        uni += detected || truth;
    }
    metrics.iou = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);

    if (!pair.degenerate_plus) {
        const SampleLoc loc = argmax_sample(dp);
        metrics.argmax_hit =
            tm[static_cast<std::size_t>(loc.y) * dp.width() + loc.x] != 0.0f;
    }

    if (expected_chroma && dp.channels() == 3 && !pair.degenerate_plus) {
        double sum_r = 0.0, sum_g = 0.0;
        std::size_t support = 0;
        for (std::size_t i = 0; i < plane; ++i) {
            if (tm[i] == 0.0f)
                continue;
            const double total = static_cast<double>(dp.plane(0)[i]) + dp.plane(1)[i] +
                                 dp.plane(2)[i];
            if (total <= 0.0)
                continue;
            sum_r += dp.plane(0)[i] / total;
            sum_g += dp.plane(1)[i] / total;
            ++support;
        }
        if (support > 0) {
            const double mr = sum_r / static_cast<double>(support);
            const double mg = sum_g / static_cast<double>(support);
            metrics.chroma_error =
                std::hypot(mr - (*expected_chroma)[0], mg - (*expected_chroma)[1]);
            metrics.has_chroma_error = true;
        }
    }
    return metrics;
}

std::array<double, 2> chroma_rg(const std::array<double, 3>& rgb) {
    const double sum = rgb[0] + rgb[1] + rgb[2];
    if (!(sum > 0.0))
        throw ParamError("chromaticity of a nonpositive color");
    return {rgb[0] / sum, rgb[1] / sum};
}

// ---- spec file parsing -----------------------------------------------------

namespace {

double parse_real(const std::string& token) {
    const std::size_t slash = token.find('/');
    try {
        if (slash != std::string::npos) {
            const double num = std::stod(token.substr(0, slash));
            const double den = std::stod(token.substr(slash + 1));
            if (den == 0.0)
                throw ParamError("division by zero in '" + token + "'");
            return num / den;
        }
        return std::stod(token);
    } catch (const std::invalid_argument&) {
        throw ParamError("cannot parse number '" + token + "'");
    } catch (const std::out_of_range&) {
        throw ParamError("number out of range: '" + token + "'");
    }
}

EvidenceField parse_field(const std::string& value, int channels) {
    std::istringstream in(value);
    std::string kind, shape;
    if (!(in >> kind >> shape))
        throw ParamError("field needs '<kind> <shape> ...'");

    EvidenceField f;
    if (kind == "reflection")
        f.kind = EvidenceField::Kind::reflection;
    else if (kind == "occlusion")
        f.kind = EvidenceField::Kind::occlusion;
    else
        throw ParamError("field kind must be 'reflection' or 'occlusion'");

    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok)
        tokens.push_back(tok);

    const std::size_t chroma_count = channels == 3 ? 3 : 0;
    if (tokens.size() != 5 + chroma_count && tokens.size() != 6 + chroma_count)
        throw ParamError("field needs <geometry x4> <peak>" +
                         std::string(channels == 3 ? " <r> <g> <b>" : "") + " [plateau]");

    const double g0 = parse_real(tokens[0]);
    const double g1 = parse_real(tokens[1]);
    const double g2 = parse_real(tokens[2]);
    const double g3 = parse_real(tokens[3]);
    if (shape == "ellipse") {
        f.shape = EvidenceField::Shape::ellipse;
        f.cx = g0;
        f.cy = g1;
        f.rx = g2;
        f.ry = g3;
    } else if (shape == "rect") {
        f.shape = EvidenceField::Shape::rectangle;
        f.cx = g0 + g2 / 2.0; // x y w h -> center + half extents
        f.cy = g1 + g3 / 2.0;
        f.rx = g2 / 2.0;
        f.ry = g3 / 2.0;
    } else {
        throw ParamError("field shape must be 'ellipse' or 'rect'");
    }

    f.peak = parse_real(tokens[4]);
    if (channels == 3)
        f.chroma = {parse_real(tokens[5]), parse_real(tokens[6]), parse_real(tokens[7])};
    else
        f.chroma = {1.0, 0.0, 0.0};
    if (tokens.size() == 6 + chroma_count)
        f.plateau = parse_real(tokens[5 + chroma_count]);
    return f;
}

} // namespace

SceneSpec parse_scene_spec(const std::string& text) {
    SceneSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<std::string> field_lines; // parsed last, needs `channels`
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        const std::size_t colon = line.find(':');
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        if (colon == std::string::npos)
            throw ParamError("scene spec line " + std::to_string(lineno) +
                             ": expected 'key: value'");

        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (value.empty())
            throw ParamError("scene spec line " + std::to_string(lineno) + ": missing value");

        if (key == "width")
            spec.width = static_cast<int>(parse_real(value));
        else if (key == "height")
            spec.height = static_cast<int>(parse_real(value));
        else if (key == "channels")
            spec.channels = static_cast<int>(parse_real(value));
        else if (key == "base") {
            if (value == "constant")
                spec.base = SceneSpec::Base::constant;
            else if (value == "gradient")
                spec.base = SceneSpec::Base::gradient;
            else if (value == "textured")
                spec.base = SceneSpec::Base::textured;
            else
                throw ParamError("base must be constant|gradient|textured");
        } else if (key == "base_level")
            spec.base_level = parse_real(value);
        else if (key == "base_lo")
            spec.base_lo = parse_real(value);
        else if (key == "base_hi")
            spec.base_hi = parse_real(value);
        else if (key == "noise_std")
            spec.noise_std = parse_real(value);
        else if (key == "seed")
            spec.seed = static_cast<std::uint64_t>(std::stoull(value));
        else if (key == "frames")
            spec.frames = static_cast<int>(parse_real(value));
        else if (key == "entry_frame")
            spec.entry_frame = static_cast<int>(parse_real(value));
        else if (key == "fps")
            spec.fps = parse_real(value);
        else if (key == "field")
            field_lines.push_back(value);
        else
            throw ParamError("scene spec line " + std::to_string(lineno) + ": unknown key '" +
                             key + "'");
    }
    for (const std::string& fl : field_lines)
        spec.evidence.push_back(parse_field(fl, spec.channels));
    spec.validate();
    return spec;
}

SceneSpec read_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open scene spec '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scene_spec(buffer.str());
}

} // namespace difd

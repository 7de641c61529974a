#include "difd/image.hpp"

#include "difd/error.hpp"
#include "difd/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace difd {

Image::Image(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1)
        throw ParamError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3)
        throw ParamError("channel count must be 1 or 3, got " + std::to_string(channels));
    samples_.assign(plane_size() * static_cast<std::size_t>(channels), 0.0f);
}

Image Image::constant(int width, int height, int channels, float value) {
    Image img(width, height, channels);
    for (float& s : img.samples_)
        s = value;
    return img;
}

int AnalysisParams::effective_radius() const {
    if (truncation_radius > 0)
        return truncation_radius;
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    return r < 1 ? 1 : r;
}

void AnalysisParams::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw ParamError("sigma must be finite and >= 0");
    if (truncation_radius < 0)
        throw ParamError("truncation radius must be >= 1 (or 0 for the default)");
    if (temporal_window < 1 || temporal_window % 2 == 0)
        throw ParamError("temporal window must be an odd positive integer");
    if (!(zero_floor >= 0.0))
        throw ParamError("zero floor must be >= 0");
}

namespace {

template <typename T>
Image decode_impl(std::span<const T> raw, int width, int height, int channels,
                  float full_scale) {
    if (channels != 1 && channels != 3)
        throw FormatError("unsupported channel count " + std::to_string(channels));
    Image img(width, height, channels);
    const std::size_t pixels = img.plane_size();
    if (raw.size() != pixels * static_cast<std::size_t>(channels))
        throw FormatError("raw buffer size does not match dimensions");
    // true division: the correctly rounded v / (2^bits - 1)
    for (int c = 0; c < channels; ++c) {
        float* dst = img.plane(c);
        const T* src = raw.data() + c;
        for (std::size_t i = 0; i < pixels; ++i)
            dst[i] = static_cast<float>(src[i * channels]) / full_scale;
    }
    return img;
}

} // namespace

Image decode_to_float(std::span<const std::uint8_t> raw, int width, int height,
                      int channels) {
    return decode_impl(raw, width, height, channels, 255.0f);
}

Image decode_to_float(std::span<const std::uint16_t> raw, int width, int height,
                      int channels) {
    return decode_impl(raw, width, height, channels, 65535.0f);
}

Image subtract(const Image& p, const Image& p_r) {
    if (!p.same_shape(p_r))
        throw ShapeError("subtract: shape mismatch " + std::to_string(p.width()) + "x" +
                         std::to_string(p.height()) + "x" + std::to_string(p.channels()) +
                         " vs " + std::to_string(p_r.width()) + "x" +
                         std::to_string(p_r.height()) + "x" + std::to_string(p_r.channels()));
    Image d(p.width(), p.height(), p.channels());
    kernels::ops().subtract(p.samples().data(), p_r.samples().data(), d.samples().data(),
                            p.sample_count());
    return d;
}

MinMax sample_min_max(const Image& img) {
    if (img.empty())
        throw ParamError("sample_min_max: empty image");
    MinMax mm{};
    kernels::ops().min_max(img.samples().data(), img.sample_count(), &mm.min, &mm.max);
    return mm;
}

SampleLoc argmax_sample(const Image& img) {
    SampleLoc loc;
    float best = -std::numeric_limits<float>::infinity();
    for (int c = 0; c < img.channels(); ++c) {
        const float* p = img.plane(c);
        for (std::size_t i = 0; i < img.plane_size(); ++i) {
            if (p[i] > best) {
                best = p[i];
                loc.channel = c;
                loc.x = static_cast<int>(i % static_cast<std::size_t>(img.width()));
                loc.y = static_cast<int>(i / static_cast<std::size_t>(img.width()));
            }
        }
    }
    return loc;
}

bool all_finite(const Image& img) {
    return kernels::ops().all_finite(img.samples().data(), img.sample_count());
}

} // namespace difd

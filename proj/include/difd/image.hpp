#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace difd {

// Planar float image: channel c occupies samples [c*W*H, (c+1)*W*H), rows
// top to bottom. Decoded images live in [0,1]; difference images may be
// signed. Planar layout keeps every per-channel loop stride-1 for the
// kernels; io converts to/from interleaved at the boundary.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels);

    static Image constant(int width, int height, int channels, float value);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return samples_.empty(); }

    std::size_t plane_size() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    std::size_t sample_count() const { return samples_.size(); }

    float* plane(int c) { return samples_.data() + plane_size() * static_cast<std::size_t>(c); }
    const float* plane(int c) const {
        return samples_.data() + plane_size() * static_cast<std::size_t>(c);
    }
    float* row(int c, int y) { return plane(c) + static_cast<std::size_t>(y) * width_; }
    const float* row(int c, int y) const {
        return plane(c) + static_cast<std::size_t>(y) * width_;
    }

    float& at(int c, int x, int y) { return *(row(c, y) + x); }
    float at(int c, int x, int y) const { return *(row(c, y) + x); }

    std::span<float> samples() { return samples_; }
    std::span<const float> samples() const { return samples_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> samples_;
};

// Shared analysis parameters. sigma == 0 disables spatial filtering;
// truncation_radius == 0 means the default ceil(3*sigma).
struct AnalysisParams {
    double sigma = 9.0;
    int truncation_radius = 0;
    int temporal_window = 11;
    double zero_floor = 1e-9;

    int effective_radius() const;
    void validate() const;
};

// Integer raster -> [0,1] floats; v maps to v / (2^bits - 1). Input is
// row-major and channel-interleaved, as decoders produce it.
Image decode_to_float(std::span<const std::uint8_t> raw, int width, int height,
                      int channels);
Image decode_to_float(std::span<const std::uint16_t> raw, int width, int height,
                      int channels);

// d = p - p_r, element-wise. Shapes must match exactly; no resampling.
Image subtract(const Image& p, const Image& p_r);

struct MinMax {
    float min;
    float max;
};
MinMax sample_min_max(const Image& img);

struct SampleLoc {
    int channel = -1;
    int x = -1;
    int y = -1;
};
// Global argmax over all samples; first hit in (channel, row, column) scan
// order wins ties.
SampleLoc argmax_sample(const Image& img);

bool all_finite(const Image& img);

} // namespace difd

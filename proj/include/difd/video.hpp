#pragma once

#include "difd/image.hpp"
#include "difd/pipeline.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace difd {

// Ordered frame provider. Positions are 0-based stream slots; indices are
// the (strictly increasing) frame numbers attached to them.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual int count() const = 0;
    virtual int index_at(int position) const = 0;
    virtual Image load(int position) = 0;

    // position of the frame with this index, or -1
    int position_of(int index) const;
};

// In-memory stream; all frames share one shape.
class FrameStream : public FrameSource {
public:
    FrameStream() = default;
    explicit FrameStream(double fps) : fps_(fps) {}

    void append(int index, Image frame);

    int count() const override { return static_cast<int>(frames_.size()); }
    int index_at(int position) const override { return indices_[static_cast<std::size_t>(position)]; }
    Image load(int position) override { return frames_[static_cast<std::size_t>(position)]; }
    const Image& frame(int position) const { return frames_[static_cast<std::size_t>(position)]; }

    double fps() const { return fps_; }

private:
    std::vector<int> indices_;
    std::vector<Image> frames_;
    double fps_ = 0.0;
};

struct IndexRange {
    int start = 0;
    int end = 0; // inclusive
};

struct ReferenceSpec {
    enum class Mode { frame_range_average, external_image, adjacent_frame };

    Mode mode = Mode::frame_range_average;
    IndexRange range{};    // frame_range_average
    Image external_frame;  // external_image
    int lag = 1;           // adjacent_frame

    static ReferenceSpec frame_range(int start, int end);
    static ReferenceSpec external(Image reference);
    static ReferenceSpec adjacent(int lag = 1);
};

struct VideoFrameResult {
    int frame_index = 0;
    AmplifiedPair pair;
    double energy = 0.0; // mean of max(D,0) before amplification
};

struct VideoResult {
    std::vector<int> frame_indices;
    std::vector<AmplifiedPair> per_frame;
    std::vector<double> energy;
    Image reference_used; // empty in adjacent-frame mode
};

// Per-sample mean of the frames whose index falls in `range` (inclusive).
Image temporal_average(FrameSource& source, IndexRange range);

// Centered uniform (box) mean; the window shrinks symmetrically near the
// sequence ends, so output length equals input length.
std::vector<Image> temporal_filter(const std::vector<Image>& seq, int window);

// Full §-by-§ pipeline: per-frame difference against the resolved reference,
// temporal box filtering of the difference sequence, then spatial filtering
// and amplification per frame. The sink runs in frame order; only a window
// of difference frames is resident at a time.
void analyze_video_stream(FrameSource& source, const ReferenceSpec& ref,
                          const AnalysisParams& params, std::optional<IndexRange> analyze,
                          const std::function<void(VideoFrameResult&&)>& sink);

VideoResult analyze_video(FrameSource& source, const ReferenceSpec& ref,
                          const AnalysisParams& params,
                          std::optional<IndexRange> analyze = std::nullopt);

// Resolved reference for non-adjacent modes (what analyze_video used).
Image resolve_reference(FrameSource& source, const ReferenceSpec& ref);

double frame_energy(const Image& filtered_difference);

} // namespace difd

#include "difd/video.hpp"

#include "difd/error.hpp"
#include "difd/kernels.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace difd {

int FrameSource::position_of(int index) const {
    for (int pos = 0; pos < count(); ++pos)
        if (index_at(pos) == index)
            return pos;
    return -1;
}

void FrameStream::append(int index, Image frame) {
    if (!indices_.empty()) {
        if (index <= indices_.back())
            throw ParamError("frame indices must be strictly increasing");
        if (!frame.same_shape(frames_.front()))
            throw ShapeError("all frames in a stream must share one shape");
    }
    indices_.push_back(index);
    frames_.push_back(std::move(frame));
}

ReferenceSpec ReferenceSpec::frame_range(int start, int end) {
    ReferenceSpec spec;
    spec.mode = Mode::frame_range_average;
    spec.range = {start, end};
    return spec;
}

ReferenceSpec ReferenceSpec::external(Image reference) {
    ReferenceSpec spec;
    spec.mode = Mode::external_image;
    spec.external_frame = std::move(reference);
    return spec;
}

ReferenceSpec ReferenceSpec::adjacent(int lag) {
    if (lag < 1)
        throw ParamError("adjacent-frame lag must be >= 1");
    ReferenceSpec spec;
    spec.mode = Mode::adjacent_frame;
    spec.lag = lag;
    return spec;
}

namespace {

// positions of frames whose index lies in [range.start, range.end]
std::pair<int, int> positions_in_range(const FrameSource& source, IndexRange range) {
    if (range.end < range.start)
        throw ParamError("frame range end must be >= start");
    int first = -1, last = -1;
    for (int pos = 0; pos < source.count(); ++pos) {
        const int idx = source.index_at(pos);
        if (idx >= range.start && idx <= range.end) {
            if (first < 0)
                first = pos;
            last = pos;
        }
    }
    if (first < 0)
        throw ParamError("frame range [" + std::to_string(range.start) + ", " +
                         std::to_string(range.end) + "] selects no frames");
    return {first, last};
}

// Uniform mean of frames from_pos..to_pos (inclusive), double accumulation
// in ascending position order so results never depend on buffering.
template <typename FrameAt>
Image box_mean(FrameAt&& frame_at, int from_pos, int to_pos) {
    const Image& first = frame_at(from_pos);
    const std::size_t n = first.sample_count();
    std::vector<double> acc(n);
    const auto& kn = kernels::ops();
    kn.mul_f64(first.samples().data(), 1.0, acc.data(), n);
    for (int pos = from_pos + 1; pos <= to_pos; ++pos)
        kn.axpy_f64(frame_at(pos).samples().data(), 1.0, acc.data(), n);

    Image out(first.width(), first.height(), first.channels());
    kn.scale_f64_to_f32(acc.data(), 1.0 / (to_pos - from_pos + 1), out.samples().data(), n);
    return out;
}

const Image& deque_frame(const std::deque<std::pair<int, Image>>& buffer, int pos) {
    for (const auto& [p, img] : buffer)
        if (p == pos)
            return img;
    throw Error("internal: temporal window fell out of the buffer");
}

} // namespace

Image temporal_average(FrameSource& source, IndexRange range) {
    auto [first, last] = positions_in_range(source, range);

    Image frame = source.load(first);
    const std::size_t n = frame.sample_count();
    std::vector<double> acc(n);
    const auto& kn = kernels::ops();
    kn.mul_f64(frame.samples().data(), 1.0, acc.data(), n);

    for (int pos = first + 1; pos <= last; ++pos) {
        Image next = source.load(pos);
        if (!next.same_shape(frame))
            throw ShapeError("all frames in a stream must share one shape");
        kn.axpy_f64(next.samples().data(), 1.0, acc.data(), n);
    }

    Image out(frame.width(), frame.height(), frame.channels());
    kn.scale_f64_to_f32(acc.data(), 1.0 / (last - first + 1), out.samples().data(), n);
    return out;
}

std::vector<Image> temporal_filter(const std::vector<Image>& seq, int window) {
    if (window < 1 || window % 2 == 0)
        throw ParamError("temporal window must be an odd positive integer");
    if (static_cast<std::size_t>(window) > seq.size())
        throw ParamError("temporal window exceeds sequence length");
    if (window == 1)
        return seq;

    const int n = static_cast<int>(seq.size());
    const int half = window / 2;
    const auto frame_at = [&seq](int pos) -> const Image& {
        return seq[static_cast<std::size_t>(pos)];
    };

    std::vector<Image> out;
    out.reserve(seq.size());
    for (int i = 0; i < n; ++i) {
        const int k = std::min({half, i, n - 1 - i});
        out.push_back(box_mean(frame_at, i - k, i + k));
    }
    return out;
}

Image resolve_reference(FrameSource& source, const ReferenceSpec& ref) {
    switch (ref.mode) {
    case ReferenceSpec::Mode::frame_range_average:
        return temporal_average(source, ref.range);
    case ReferenceSpec::Mode::external_image:
        if (ref.external_frame.empty())
            throw ParamError("external reference image is empty");
        return ref.external_frame;
    case ReferenceSpec::Mode::adjacent_frame:
        throw ParamError("adjacent-frame mode has no single reference image");
    }
    throw ParamError("unknown reference mode");
}

void analyze_video_stream(FrameSource& source, const ReferenceSpec& ref,
                          const AnalysisParams& params, std::optional<IndexRange> analyze,
                          const std::function<void(VideoFrameResult&&)>& sink) {
    params.validate();
    if (source.count() == 0)
        throw ParamError("empty frame stream");

    int first = 0;
    int last = source.count() - 1;
    if (analyze) {
        auto [a, b] = positions_in_range(source, *analyze);
        first = a;
        last = b;
    }

    const bool adjacent = ref.mode == ReferenceSpec::Mode::adjacent_frame;
    if (adjacent && first - ref.lag < 0)
        throw ParamError("adjacent-frame mode: analysis range must start at or after lag " +
                         std::to_string(ref.lag));

    Image reference;
    if (!adjacent)
        reference = resolve_reference(source, ref);

    const int n = last - first + 1;
    const int window = params.temporal_window;
    if (window > n)
        throw ParamError("temporal window exceeds the analyzed frame count");
    const int half = window / 2;

    GaussianKernel kernel;
    if (params.sigma > 0.0)
        kernel = build_kernel(params);

    // Sliding difference buffer keyed by analyzed position (0-based within
    // the range); at most window + 1 frames resident.
    std::deque<std::pair<int, Image>> diffs;
    auto load_diff = [&](int t) {
        Image frame = source.load(first + t);
        if (adjacent) {
            Image prev = source.load(first + t - ref.lag);
            return subtract(frame, prev);
        }
        if (!frame.same_shape(reference))
            throw ShapeError("frame shape does not match the reference");
        return subtract(frame, reference);
    };

    int loaded = 0;
    for (int t = 0; t < n; ++t) {
        const int k = std::min({half, t, n - 1 - t});
        while (loaded <= std::min(t + k, n - 1)) {
            diffs.emplace_back(loaded, load_diff(loaded));
            ++loaded;
        }
        while (!diffs.empty() && diffs.front().first < t - half)
            diffs.pop_front();

        Image filtered =
            box_mean([&diffs](int pos) -> const Image& { return deque_frame(diffs, pos); },
                     t - k, t + k);
        if (params.sigma > 0.0)
            filtered = spatial_filter(filtered, kernel);

        VideoFrameResult result;
        result.frame_index = source.index_at(first + t);
        result.energy = frame_energy(filtered);
        result.pair = amplify_split(filtered, params.zero_floor);
        sink(std::move(result));
    }
}

VideoResult analyze_video(FrameSource& source, const ReferenceSpec& ref,
                          const AnalysisParams& params, std::optional<IndexRange> analyze) {
    VideoResult result;
    const ReferenceSpec* effective = &ref;
    ReferenceSpec resolved;
    if (ref.mode != ReferenceSpec::Mode::adjacent_frame) {
        result.reference_used = resolve_reference(source, ref);
        resolved = ReferenceSpec::external(result.reference_used);
        effective = &resolved;
    }
    analyze_video_stream(source, *effective, params, analyze, [&](VideoFrameResult&& fr) {
        result.frame_indices.push_back(fr.frame_index);
        result.energy.push_back(fr.energy);
        result.per_frame.push_back(std::move(fr.pair));
    });
    return result;
}

double frame_energy(const Image& filtered_difference) {
    const double total = kernels::ops().sum_pos(filtered_difference.samples().data(),
                                                filtered_difference.sample_count());
    return total / static_cast<double>(filtered_difference.sample_count());
}

} // namespace difd

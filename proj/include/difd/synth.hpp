#pragma once

#include "difd/image.hpp"
#include "difd/pipeline.hpp"
#include "difd/video.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace difd {

// Counter-based deterministic noise: every sample is a pure function of
// (seed, stream, index), so generation order and worker count never matter.
std::uint64_t hash_counter(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
double uniform_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
double gaussian_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// A smooth sub-perceptual brightness field: reflections add light, occlusions
// remove it. The profile is a cosine-tapered bump with a flat plateau; the
// support is the open region where the profile is nonzero.
struct EvidenceField {
    enum class Kind { reflection, occlusion };
    enum class Shape { ellipse, rectangle };

    Kind kind = Kind::reflection;
    Shape shape = Shape::ellipse;
    double cx = 0.0, cy = 0.0; // center, pixels
    double rx = 0.0, ry = 0.0; // radii / half extents, pixels
    double peak = 0.0;         // (0, 8/255]
    std::array<double, 3> chroma = {1.0 / 3, 1.0 / 3, 1.0 / 3}; // unit sum
    double plateau = 0.5;      // flat-top fraction of the radius

    double profile_at(double x, double y) const; // in [0,1]
    void validate(int channels) const;
};

struct SceneSpec {
    enum class Base { constant, gradient, textured };

    int width = 0;
    int height = 0;
    int channels = 3;
    Base base = Base::constant;
    double base_level = 0.5;              // constant
    double base_lo = 0.35, base_hi = 0.65; // gradient / textured range
    double noise_std = 0.0;               // per-channel i.i.d. Gaussian, [0,1] units
    std::uint64_t seed = 0;
    std::vector<EvidenceField> evidence;

    // stream generation (unused for single pairs)
    int frames = 0;
    int entry_frame = 0;
    double fps = 0.0;

    void validate() const;
};

// "key: value" config file; see README for the schema. Values accept plain
// reals and "a/b" fractions.
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec read_scene_spec(const std::string& path);

struct FieldTruth {
    Image mask; // 1 channel, 1 inside the field's support
    std::array<double, 3> chroma;
    EvidenceField::Kind kind;
};

struct ScenePair {
    Image scene;     // p  = base + evidence + noise
    Image reference; // p_r = base + independent noise
    std::vector<FieldTruth> truth;
};

struct SceneStream {
    FrameStream stream;
    std::vector<FieldTruth> truth;
    int entry_frame = 0;
};

// Rejects specs whose noise-free scene leaves [0,1]. Deterministic in seed.
ScenePair generate_pair(const SceneSpec& spec);

// Frames 0..entry_frame-1 carry base+noise only; frames from entry_frame on
// additionally carry the evidence fields. entry_frame == frames is the empty
// evidence clip.
SceneStream generate_stream(const SceneSpec& spec, int frames, int entry_frame);

struct RecoveryMetrics {
    double iou = 0.0;
    bool argmax_hit = false;
    double chroma_error = 0.0;
    bool has_chroma_error = false;
};

// detected = channel-max(D+) >= threshold. chroma_error compares the mean
// D+ chromaticity over the truth support with the expected (r,g), when given.
RecoveryMetrics evaluate_recovery(const AmplifiedPair& pair, const Image& truth_mask,
                                  double threshold,
                                  std::optional<std::array<double, 2>> expected_chroma = {});

// (r,g) chromaticity of an RGB direction vector.
std::array<double, 2> chroma_rg(const std::array<double, 3>& rgb);

} // namespace difd

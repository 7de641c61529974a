#pragma once

#include "difd/image.hpp"
#include "difd/pipeline.hpp"

#include <string>

namespace difd {

// Query region: either a rectangle or an arbitrary single-channel mask
// (nonzero marks the region). Must be nonempty and must not cover the whole
// image.
struct RegionSpec {
    static RegionSpec rect(int x, int y, int w, int h);
    static RegionSpec mask(Image mask);

    bool is_rect = false;
    int x = 0, y = 0, w = 0, h = 0;
    Image mask_image;

    // 1 where the region is, 0 elsewhere; validates against the image shape
    Image rasterize(int width, int height) const;
};

struct SplitImage {
    Image analysis;    // p' : region pixels zeroed
    Image valid_mask;  // 1 channel, 1 on p' pixels
    Image query;       // p'': region contents, zero elsewhere
    Image region_mask; // 1 channel, 1 on region pixels
    std::size_t valid_count = 0;
    std::size_t region_count = 0;
};

SplitImage split(const Image& p, const RegionSpec& region);

enum class Verdict { consistent, inconsistent, insufficient_evidence };

const char* to_string(Verdict v);

struct ConsistencyReport {
    Verdict verdict = Verdict::insufficient_evidence;
    double evidence_chroma_r = 0.0, evidence_chroma_g = 0.0;
    double query_chroma_r = 0.0, query_chroma_g = 0.0;
    double chroma_distance = 0.0;
    double evidence_mask_fraction = 0.0;
    bool degenerate = false;

    AmplifiedPair amplified; // masked D' pair
    Image evidence_mask;     // 1 channel, binary

    // echo of the decision parameters
    double evidence_threshold = 0.0;
    double tau = 0.0;
    double min_support = 0.0;
    double sigma = 0.0;
};

// Splits p, recovers mask-aware amplified evidence of p' against p_r, and
// scores mean-chromaticity consistency between that evidence and the query
// region. Requires 3-channel images (the metric is a hue comparison).
ConsistencyReport forgery_score(const Image& p, const Image& p_r, const RegionSpec& region,
                                const AnalysisParams& params, double evidence_threshold = 0.5,
                                double tau = 0.15, double min_support = 1e-4);

// "key: value" lines, one per field, deterministic formatting.
std::string format_consistency_report(const ConsistencyReport& report);

} // namespace difd

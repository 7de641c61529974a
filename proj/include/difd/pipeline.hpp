#pragma once

#include "difd/image.hpp"

#include <vector>

namespace difd {

// Separable Gaussian tap set: weights[j] for offsets j - radius, normalized
// to sum 1 in double precision.
struct GaussianKernel {
    double sigma = 0.0;
    int radius = 0;
    std::vector<double> weights;

    int taps() const { return 2 * radius + 1; }
};

// Contrast-normalized positive/negative halves of a filtered difference
// image. Both planes are stored as magnitudes in [0,1]; the negative half's
// sign lives in the name. A degenerate side (extreme at or below the zero
// floor) is all zeros with gain 0.
struct AmplifiedPair {
    Image d_plus;
    Image d_minus;
    double gain_plus = 0.0;
    double gain_minus = 0.0;
    bool degenerate_plus = false;
    bool degenerate_minus = false;
};

GaussianKernel build_kernel(const AnalysisParams& params);

// Separable convolution with mirror (edge-repeating symmetric) boundaries.
Image spatial_filter(const Image& d, const GaussianKernel& kernel);

// Mask-renormalized variant: conv(d*m) / conv(m) where valid mask m is a
// single-channel 0/1 image; pixels whose whole support is invalid come out 0.
Image spatial_filter_masked(const Image& d, const Image& valid, const GaussianKernel& kernel);

AmplifiedPair amplify_split(const Image& filtered, double zero_floor = 1e-9);

// Extremes taken over valid pixels only; invalid pixels are zero in both
// outputs.
AmplifiedPair amplify_split_masked(const Image& filtered, const Image& valid,
                                   double zero_floor = 1e-9);

// subtract -> spatial_filter (skipped when sigma == 0) -> amplify_split.
AmplifiedPair analyze_pair(const Image& p, const Image& p_r, const AnalysisParams& params);

} // namespace difd

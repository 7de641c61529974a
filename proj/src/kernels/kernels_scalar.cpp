// Scalar reference kernels. These define the numeric contract: SIMD variants
// must reproduce them bit-for-bit (except sum_pos, see kernels.hpp).
// Compiled with -ffp-contract=off so the mul/add rounding sequence is pinned.

#include "difd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace difd::kernels {

namespace {

void subtract_scalar(const float* a, const float* b, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] - b[i];
}

void mul_scalar_arrays(const float* a, const float* b, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a[i] * b[i];
}

void mul_scalar_const(const float* in, float a, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = a * in[i];
}

// Comparison-select instead of std::max keeps the signed-zero choice
// identical to _mm256_max_ps (which returns its second operand on ties).
void div_relu_scalar(const float* in, float denom, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        float v = in[i];
        out[i] = (v > 0.0f ? v : 0.0f) / denom;
    }
}

void div_relu_neg_scalar(const float* in, float denom, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        float v = 0.0f - in[i];
        out[i] = (v > 0.0f ? v : 0.0f) / denom;
    }
}

void div_masked_scalar(const float* num, const float* den, float eps, float* out,
                       std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = den[i] > eps ? num[i] / den[i] : 0.0f;
}

void min_max_scalar(const float* in, std::size_t n, float* mn, float* mx) {
    float lo = in[0];
    float hi = in[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, in[i]);
        hi = std::max(hi, in[i]);
    }
    *mn = lo;
    *mx = hi;
}

bool all_finite_scalar(const float* in, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(in[i]))
            return false;
    return true;
}

double sum_pos_scalar(const float* in, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(std::max(in[i], 0.0f));
    return acc;
}

void conv1d_scalar(const float* padded, const double* w, int taps, float* out,
                   std::size_t n_out) {
    for (std::size_t i = 0; i < n_out; ++i) {
        double acc = 0.0;
        for (int j = 0; j < taps; ++j)
            acc += w[j] * static_cast<double>(padded[i + static_cast<std::size_t>(j)]);
        out[i] = static_cast<float>(acc);
    }
}

void mul_f64_scalar(const float* src, double a, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        acc[i] = a * static_cast<double>(src[i]);
}

void axpy_f64_scalar(const float* src, double a, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        acc[i] = acc[i] + a * static_cast<double>(src[i]);
}

void scale_f64_to_f32_scalar(const double* acc, double a, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>(a * acc[i]);
}

} // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        "scalar",
        subtract_scalar,
        mul_scalar_arrays,
        mul_scalar_const,
        div_relu_scalar,
        div_relu_neg_scalar,
        div_masked_scalar,
        min_max_scalar,
        all_finite_scalar,
        sum_pos_scalar,
        conv1d_scalar,
        mul_f64_scalar,
        axpy_f64_scalar,
        scale_f64_to_f32_scalar,
    };
    return table;
}

} // namespace difd::kernels

#pragma once

#include <cstddef>
#include <string>

namespace difd::kernels {

// Flat arithmetic kernels behind all pixel loops. Every entry has a scalar
// reference implementation and, where the build and CPU allow, an AVX2
// variant selected once at startup.
//
// Cross-backend contract: all element-wise ops, min_max and conv1d produce
// bit-identical results on every backend (single rounding per element, no
// FMA contraction). sum_pos uses lane-split accumulation and may differ from
// the scalar reference in the last bits.
struct Ops {
    const char* name;

    // out[i] = a[i] - b[i]
    void (*subtract)(const float* a, const float* b, float* out, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(const float* a, const float* b, float* out, std::size_t n);
    // out[i] = a * in[i]
    void (*mul_scalar)(const float* in, float a, float* out, std::size_t n);
    // out[i] = max(in[i], 0) / denom; exact 1.0 where in[i] == denom
    void (*div_relu)(const float* in, float denom, float* out, std::size_t n);
    // out[i] = max(-in[i], 0) / denom
    void (*div_relu_neg)(const float* in, float denom, float* out, std::size_t n);
    // out[i] = den[i] > eps ? num[i] / den[i] : 0
    void (*div_masked)(const float* num, const float* den, float eps, float* out, std::size_t n);
    // single-pass min and max; n >= 1
    void (*min_max)(const float* in, std::size_t n, float* mn, float* mx);
    bool (*all_finite)(const float* in, std::size_t n);
    // sum of max(in[i], 0), accumulated in double
    double (*sum_pos)(const float* in, std::size_t n);
    // out[i] = (float) sum_j w[j] * padded[i + j], j in [0, taps); double accumulation.
    // padded must hold n_out + taps - 1 samples.
    void (*conv1d)(const float* padded, const double* w, int taps, float* out, std::size_t n_out);
    // acc[i] = a * src[i]
    void (*mul_f64)(const float* src, double a, double* acc, std::size_t n);
    // acc[i] += a * src[i]
    void (*axpy_f64)(const float* src, double a, double* acc, std::size_t n);
    // out[i] = (float)(a * acc[i])
    void (*scale_f64_to_f32)(const double* acc, double a, float* out, std::size_t n);
};

enum class Backend { scalar, avx2 };

const Ops& scalar_ops();

// True when the AVX2 variant is both compiled in and supported by this CPU.
bool avx2_available();

// Active table. First call resolves the backend: DIFD_KERNELS=scalar|avx2|auto
// in the environment wins, otherwise the widest available ISA.
const Ops& ops();
Backend active_backend();
void select_backend(Backend b);
void select_backend_by_name(const std::string& name); // "auto" | "scalar" | "avx2"

} // namespace difd::kernels

// AVX2 kernel variants. Multiplies and adds are kept as separate intrinsics
// (no FMA) and the per-element operation order matches the scalar reference,
// so every op except sum_pos is bit-identical to kernels_scalar.cpp.
// Built with -mavx2 -ffp-contract=off; only registered when the CPU has AVX2.

#include "difd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace difd::kernels {

namespace {

void subtract_avx2(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        _mm256_storeu_ps(out + i, _mm256_sub_ps(va, vb));
    }
    for (; i < n; ++i)
        out[i] = a[i] - b[i];
}

void mul_avx2(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, vb));
    }
    for (; i < n; ++i)
        out[i] = a[i] * b[i];
}

void mul_scalar_avx2(const float* in, float a, float* out, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(in + i)));
    for (; i < n; ++i)
        out[i] = a * in[i];
}

void div_relu_avx2(const float* in, float denom, float* out, std::size_t n) {
    const __m256 vd = _mm256_set1_ps(denom);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_max_ps(_mm256_loadu_ps(in + i), zero);
        _mm256_storeu_ps(out + i, _mm256_div_ps(v, vd));
    }
    for (; i < n; ++i) {
        float v = in[i];
        out[i] = (v > 0.0f ? v : 0.0f) / denom;
    }
}

void div_relu_neg_avx2(const float* in, float denom, float* out, std::size_t n) {
    const __m256 vd = _mm256_set1_ps(denom);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_sub_ps(zero, _mm256_loadu_ps(in + i));
        v = _mm256_max_ps(v, zero);
        _mm256_storeu_ps(out + i, _mm256_div_ps(v, vd));
    }
    for (; i < n; ++i) {
        float v = 0.0f - in[i];
        out[i] = (v > 0.0f ? v : 0.0f) / denom;
    }
}

void div_masked_avx2(const float* num, const float* den, float eps, float* out,
                     std::size_t n) {
    const __m256 veps = _mm256_set1_ps(eps);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vn = _mm256_loadu_ps(num + i);
        __m256 vd = _mm256_loadu_ps(den + i);
        __m256 keep = _mm256_cmp_ps(vd, veps, _CMP_GT_OQ);
        __m256 q = _mm256_div_ps(vn, vd); // garbage lanes are masked below
        _mm256_storeu_ps(out + i, _mm256_and_ps(q, keep));
    }
    for (; i < n; ++i)
        out[i] = den[i] > eps ? num[i] / den[i] : 0.0f;
}

void min_max_avx2(const float* in, std::size_t n, float* mn, float* mx) {
    float lo = in[0];
    float hi = in[0];
    std::size_t i = 0;
    if (n >= 8) {
        __m256 vlo = _mm256_loadu_ps(in);
        __m256 vhi = vlo;
        for (i = 8; i + 8 <= n; i += 8) {
            __m256 v = _mm256_loadu_ps(in + i);
            vlo = _mm256_min_ps(vlo, v);
            vhi = _mm256_max_ps(vhi, v);
        }
        alignas(32) float tmp[8];
        _mm256_store_ps(tmp, vlo);
        lo = tmp[0];
        for (int k = 1; k < 8; ++k)
            lo = std::min(lo, tmp[k]);
        _mm256_store_ps(tmp, vhi);
        hi = tmp[0];
        for (int k = 1; k < 8; ++k)
            hi = std::max(hi, tmp[k]);
    }
    for (; i < n; ++i) {
        lo = std::min(lo, in[i]);
        hi = std::max(hi, in[i]);
    }
    *mn = lo;
    *mx = hi;
}

bool all_finite_avx2(const float* in, std::size_t n) {
    const __m256 abs_mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
    const __m256 inf = _mm256_set1_ps(std::numeric_limits<float>::infinity());
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_and_ps(_mm256_loadu_ps(in + i), abs_mask);
        __m256 ok = _mm256_cmp_ps(v, inf, _CMP_LT_OQ); // false for inf and NaN
        if (_mm256_movemask_ps(ok) != 0xff)
            return false;
    }
    for (; i < n; ++i)
        if (!std::isfinite(in[i]))
            return false;
    return true;
}

double sum_pos_avx2(const float* in, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_max_ps(_mm256_loadu_ps(in + i), zero);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i)
        acc += static_cast<double>(std::max(in[i], 0.0f));
    return acc;
}

void conv1d_avx2(const float* padded, const double* w, int taps, float* out,
                 std::size_t n_out) {
    std::size_t i = 0;
    for (; i + 8 <= n_out; i += 8) {
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        for (int j = 0; j < taps; ++j) {
            const float* p = padded + i + static_cast<std::size_t>(j);
            __m256d vw = _mm256_set1_pd(w[j]);
            __m256d lo = _mm256_cvtps_pd(_mm_loadu_ps(p));
            __m256d hi = _mm256_cvtps_pd(_mm_loadu_ps(p + 4));
            acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(vw, lo));
            acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(vw, hi));
        }
        _mm_storeu_ps(out + i, _mm256_cvtpd_ps(acc0));
        _mm_storeu_ps(out + i + 4, _mm256_cvtpd_ps(acc1));
    }
    for (; i < n_out; ++i) {
        double acc = 0.0;
        for (int j = 0; j < taps; ++j)
            acc += w[j] * static_cast<double>(padded[i + static_cast<std::size_t>(j)]);
        out[i] = static_cast<float>(acc);
    }
}

void mul_f64_avx2(const float* src, double a, double* acc, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(src + i));
        _mm256_storeu_pd(acc + i, _mm256_mul_pd(va, v));
    }
    for (; i < n; ++i)
        acc[i] = a * static_cast<double>(src[i]);
}

void axpy_f64_avx2(const float* src, double a, double* acc, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(src + i));
        __m256d cur = _mm256_loadu_pd(acc + i);
        _mm256_storeu_pd(acc + i, _mm256_add_pd(cur, _mm256_mul_pd(va, v)));
    }
    for (; i < n; ++i)
        acc[i] = acc[i] + a * static_cast<double>(src[i]);
}

void scale_f64_to_f32_avx2(const double* acc, double a, float* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_mul_pd(va, _mm256_loadu_pd(acc + i));
        _mm_storeu_ps(out + i, _mm256_cvtpd_ps(v));
    }
    for (; i < n; ++i)
        out[i] = static_cast<float>(a * acc[i]);
}

} // namespace

const Ops& avx2_ops() {
    static const Ops table = {
        "avx2",
        subtract_avx2,
        mul_avx2,
        mul_scalar_avx2,
        div_relu_avx2,
        div_relu_neg_avx2,
        div_masked_avx2,
        min_max_avx2,
        all_finite_avx2,
        sum_pos_avx2,
        conv1d_avx2,
        mul_f64_avx2,
        axpy_f64_avx2,
        scale_f64_to_f32_avx2,
    };
    return table;
}

} // namespace difd::kernels

#include "dtuap/kernels.hpp"

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime cpuid check (see kernels.cpp).
//
// Reductions accumulate in 8 independent lanes and fold at the end, so they
// round differently from the scalar reference; element-independent kernels
// use separate mul/add (no FMA) to stay bit-identical with it.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace dtuap::kernels {
namespace {

float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

float dot_(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float acc = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float vsum_(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float max_abs_(const float* x, std::size_t n) {
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_max_ps(acc, _mm256_andnot_ps(sign_mask, _mm256_loadu_ps(x + i)));
    __m128 lo = _mm_max_ps(_mm256_castps256_ps128(acc), _mm256_extractf128_ps(acc, 1));
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    float m = _mm_cvtss_f32(lo);
    for (; i < n; ++i) {
        float a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

void axpy_(float a, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void vadd_(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void vscale_(const float* x, float a, float* out, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

void relu_(const float* x, float* out, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_max_ps(zero, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_(const float* x, const float* gout, float* gin, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gout + i));
        _mm256_storeu_ps(gin + i, _mm256_add_ps(_mm256_loadu_ps(gin + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f) gin[i] += gout[i];
}

void clamp_(const float* x, float lo, float hi, float* out, std::size_t n) {
    const __m256 vlo = _mm256_set1_ps(lo);
    const __m256 vhi = _mm256_set1_ps(hi);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_min_ps(vhi, _mm256_max_ps(vlo, _mm256_loadu_ps(x + i))));
    for (; i < n; ++i) {
        float v = x[i];
        out[i] = v < lo ? lo : (v > hi ? hi : v);
    }
}

void clamp_bwd_(const float* x, float lo, float hi, const float* gout,
                float* gin, std::size_t n) {
    const __m256 vlo = _mm256_set1_ps(lo);
    const __m256 vhi = _mm256_set1_ps(hi);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 mask = _mm256_and_ps(_mm256_cmp_ps(v, vlo, _CMP_GE_OQ),
                                    _mm256_cmp_ps(v, vhi, _CMP_LE_OQ));
        __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gout + i));
        _mm256_storeu_ps(gin + i, _mm256_add_ps(_mm256_loadu_ps(gin + i), g));
    }
    for (; i < n; ++i)
        if (x[i] >= lo && x[i] <= hi) gin[i] += gout[i];
}

} // namespace

const Backend& avx2() {
    static const Backend k = {
        .name = "avx2",
        .dot = dot_,
        .vsum = vsum_,
        .max_abs = max_abs_,
        .axpy = axpy_,
        .vadd = vadd_,
        .vmul = vmul_,
        .vscale = vscale_,
        .relu = relu_,
        .relu_bwd = relu_bwd_,
        .clamp = clamp_,
        .clamp_bwd = clamp_bwd_,
    };
    return k;
}

} // namespace dtuap::kernels

#endif // x86-64

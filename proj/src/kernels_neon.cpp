#include "dtuap/kernels.hpp"

// NEON kernels for aarch64, where NEON is part of the baseline ISA.
// Same contract as the AVX2 variant: reductions fold 4 lanes at the end,
// element-independent kernels avoid fused multiply-add.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace dtuap::kernels {
namespace {

float dot_(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float vsum_(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float max_abs_(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vmaxq_f32(acc, vabsq_f32(vld1q_f32(x + i)));
    float m = vmaxvq_f32(acc);
    for (; i < n; ++i) {
        float a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

void axpy_(float a, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t prod = vmulq_f32(va, vld1q_f32(x + i));
        vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void vadd_(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void vscale_(const float* x, float a, float* out, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(va, vld1q_f32(x + i)));
    for (; i < n; ++i) out[i] = a * x[i];
}

void relu_(const float* x, float* out, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmaxq_f32(zero, vld1q_f32(x + i)));
    for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_(const float* x, const float* gout, float* gin, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), zero);
        float32x4_t g = vreinterpretq_f32_u32(
            vandq_u32(mask, vreinterpretq_u32_f32(vld1q_f32(gout + i))));
        vst1q_f32(gin + i, vaddq_f32(vld1q_f32(gin + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0f) gin[i] += gout[i];
}

void clamp_(const float* x, float lo, float hi, float* out, std::size_t n) {
    const float32x4_t vlo = vdupq_n_f32(lo);
    const float32x4_t vhi = vdupq_n_f32(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(out + i, vminq_f32(vhi, vmaxq_f32(vlo, vld1q_f32(x + i))));
    for (; i < n; ++i) {
        float v = x[i];
        out[i] = v < lo ? lo : (v > hi ? hi : v);
    }
}

void clamp_bwd_(const float* x, float lo, float hi, const float* gout,
                float* gin, std::size_t n) {
    const float32x4_t vlo = vdupq_n_f32(lo);
    const float32x4_t vhi = vdupq_n_f32(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t v = vld1q_f32(x + i);
        uint32x4_t mask = vandq_u32(vcgeq_f32(v, vlo), vcleq_f32(v, vhi));
        float32x4_t g = vreinterpretq_f32_u32(
            vandq_u32(mask, vreinterpretq_u32_f32(vld1q_f32(gout + i))));
        vst1q_f32(gin + i, vaddq_f32(vld1q_f32(gin + i), g));
    }
    for (; i < n; ++i)
        if (x[i] >= lo && x[i] <= hi) gin[i] += gout[i];
}

} // namespace

const Backend& neon() {
    static const Backend k = {
        .name = "neon",
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

#endif // aarch64

#include "dtuap/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, one operation per element; serves as the
// ground truth the SIMD variants are tested against.

namespace dtuap::kernels {
namespace {

float dot_(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

float vsum_(const float* x, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

float max_abs_(const float* x, std::size_t n) {
    float m = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        float a = std::fabs(x[i]);
        if (a > m) m = a;
    }
    return m;
}

void axpy_(float a, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void vadd_(const float* a, const float* b, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vmul_(const float* a, const float* b, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void vscale_(const float* x, float a, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void relu_(const float* x, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_(const float* x, const float* gout, float* gin, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0f) gin[i] += gout[i];
}

void clamp_(const float* x, float lo, float hi, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        float v = x[i];
        out[i] = v < lo ? lo : (v > hi ? hi : v);
    }
}

void clamp_bwd_(const float* x, float lo, float hi, const float* gout,
                float* gin, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] >= lo && x[i] <= hi) gin[i] += gout[i];
}

} // namespace

const Backend& scalar() {
    static const Backend k = {
        .name = "scalar",
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

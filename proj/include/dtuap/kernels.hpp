#pragma once

#include <cstddef>
#include <string>
#include <vector>

// Data-parallel inner loops used by the tensor ops. Every kernel has a
// scalar reference implementation plus SIMD variants (AVX2 on x86-64,
// NEON on aarch64) selected once at startup based on CPU capabilities.
//
// Contract between backends:
//   - element-independent kernels (vadd, vmul, vscale, relu, clamp, axpy)
//     produce bit-identical results across backends; the whole kernel
//     library is built with floating-point contraction disabled so the
//     scalar reference cannot silently fuse into FMA.
//   - reductions (dot, vsum) may reassociate lanes and therefore agree
//     with the scalar reference only up to rounding; max_abs is exact.
// Equivalence of every available backend against the scalar reference is
// enforced by tests/test_kernels.cpp.

namespace dtuap::kernels {

struct Backend {
    const char* name;

    float (*dot)(const float* a, const float* b, std::size_t n);
    float (*vsum)(const float* x, std::size_t n);
    float (*max_abs)(const float* x, std::size_t n);

    // y[i] += a * x[i]
    void (*axpy)(float a, const float* x, float* y, std::size_t n);
    void (*vadd)(const float* a, const float* b, float* out, std::size_t n);
    void (*vmul)(const float* a, const float* b, float* out, std::size_t n);
    // out[i] = a * x[i]
    void (*vscale)(const float* x, float a, float* out, std::size_t n);

    void (*relu)(const float* x, float* out, std::size_t n);
    // gin[i] += (x[i] > 0) * gout[i]
    void (*relu_bwd)(const float* x, const float* gout, float* gin, std::size_t n);
    void (*clamp)(const float* x, float lo, float hi, float* out, std::size_t n);
    // gin[i] += (lo <= x[i] && x[i] <= hi) * gout[i]
    void (*clamp_bwd)(const float* x, float lo, float hi, const float* gout,
                      float* gin, std::size_t n);
};

const Backend& scalar();

bool avx2_supported();
const Backend& avx2(); // call only if avx2_supported()

bool neon_supported();
const Backend& neon(); // call only if neon_supported()

// Best backend for this CPU, or the one named by DTUAP_KERNELS
// (scalar|avx2|neon). Resolved once on first use.
const Backend& active();

// Force a backend by name; throws UsageError if it is not available here.
void set_active(const std::string& name);

std::vector<const Backend*> available();

} // namespace dtuap::kernels

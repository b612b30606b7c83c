#include "dtuap/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "dtuap/errors.hpp"

namespace dtuap::kernels {

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
bool neon_supported() { return false; }
const Backend& neon() { throw UsageError("kernel backend 'neon' not available on x86-64"); }
#elif defined(__aarch64__)
bool avx2_supported() { return false; }
const Backend& avx2() { throw UsageError("kernel backend 'avx2' not available on aarch64"); }
bool neon_supported() { return true; }
#else
bool avx2_supported() { return false; }
const Backend& avx2() { throw UsageError("kernel backend 'avx2' not available on this CPU"); }
bool neon_supported() { return false; }
const Backend& neon() { throw UsageError("kernel backend 'neon' not available on this CPU"); }
#endif

namespace {

const Backend* pick_default() {
    if (const char* env = std::getenv("DTUAP_KERNELS")) {
        std::string name(env);
        if (name == "scalar") return &scalar();
        if (name == "avx2" && avx2_supported()) return &avx2();
        if (name == "neon" && neon_supported()) return &neon();
        throw UsageError("DTUAP_KERNELS names unavailable backend: " + name);
    }
    if (avx2_supported()) return &avx2();
    if (neon_supported()) return &neon();
    return &scalar();
}

std::atomic<const Backend*>& slot() {
    static std::atomic<const Backend*> s{nullptr};
    return s;
}

} // namespace

const Backend& active() {
    const Backend* b = slot().load(std::memory_order_acquire);
    if (!b) {
        b = pick_default();
        slot().store(b, std::memory_order_release);
    }
    return *b;
}

void set_active(const std::string& name) {
    if (name == "scalar") {
        slot().store(&scalar(), std::memory_order_release);
    } else if (name == "avx2") {
        if (!avx2_supported()) throw UsageError("kernel backend 'avx2' not supported by this CPU");
        slot().store(&avx2(), std::memory_order_release);
    } else if (name == "neon") {
        if (!neon_supported()) throw UsageError("kernel backend 'neon' not supported by this CPU");
        slot().store(&neon(), std::memory_order_release);
    } else {
        throw UsageError("unknown kernel backend: " + name);
    }
}

std::vector<const Backend*> available() {
    std::vector<const Backend*> out{&scalar()};
    if (avx2_supported()) out.push_back(&avx2());
    if (neon_supported()) out.push_back(&neon());
    return out;
}

} // namespace dtuap::kernels

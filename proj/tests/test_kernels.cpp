#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "dtuap/kernels.hpp"
#include "dtuap/rng.hpp"

using namespace dtuap;

namespace {

// Sizes chosen to hit empty input, sub-vector-width, exact widths and
// straggler lanes for both 8-wide (AVX2) and 4-wide (NEON) backends.
const std::vector<std::size_t> kSizes = {0, 1, 3, 4, 7, 8, 9, 16, 17, 31, 64, 257, 1000};

std::vector<float> random_vec(std::size_t n, Rng& rng, float lo = -2.0f, float hi = 2.0f) {
    std::vector<float> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

double dot_f64(const std::vector<float>& a, const std::vector<float>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

} // namespace

TEST_CASE("scalar backend is always available") {
    auto backends = kernels::available();
    REQUIRE(!backends.empty());
    CHECK(std::string(backends[0]->name) == "scalar");
}

TEST_CASE("element-independent kernels match scalar bit-for-bit") {
    Rng rng(7);
    const auto& ref = kernels::scalar();
    for (const auto* bk : kernels::available()) {
        CAPTURE(bk->name);
        for (std::size_t n : kSizes) {
            auto a = random_vec(n, rng);
            auto b = random_vec(n, rng);
            std::vector<float> out_ref(n), out_bk(n);

            ref.vadd(a.data(), b.data(), out_ref.data(), n);
            bk->vadd(a.data(), b.data(), out_bk.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_bk.data(), n * 4) == 0);

            ref.vmul(a.data(), b.data(), out_ref.data(), n);
            bk->vmul(a.data(), b.data(), out_bk.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_bk.data(), n * 4) == 0);

            ref.vscale(a.data(), 1.7f, out_ref.data(), n);
            bk->vscale(a.data(), 1.7f, out_bk.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_bk.data(), n * 4) == 0);

            ref.relu(a.data(), out_ref.data(), n);
            bk->relu(a.data(), out_bk.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_bk.data(), n * 4) == 0);

            ref.clamp(a.data(), -0.5f, 0.5f, out_ref.data(), n);
            bk->clamp(a.data(), -0.5f, 0.5f, out_bk.data(), n);
            CHECK(std::memcmp(out_ref.data(), out_bk.data(), n * 4) == 0);

            // axpy accumulates into y; seed both with the same values
            auto y_ref = random_vec(n, rng);
            auto y_bk = y_ref;
            ref.axpy(-0.31f, a.data(), y_ref.data(), n);
            bk->axpy(-0.31f, a.data(), y_bk.data(), n);
            CHECK(std::memcmp(y_ref.data(), y_bk.data(), n * 4) == 0);

            auto g = random_vec(n, rng);
            auto gin_ref = random_vec(n, rng);
            auto gin_bk = gin_ref;
            ref.relu_bwd(a.data(), g.data(), gin_ref.data(), n);
            bk->relu_bwd(a.data(), g.data(), gin_bk.data(), n);
            CHECK(std::memcmp(gin_ref.data(), gin_bk.data(), n * 4) == 0);

            gin_bk = gin_ref;
            auto gin_ref2 = gin_ref;
            ref.clamp_bwd(a.data(), -0.5f, 0.5f, g.data(), gin_ref2.data(), n);
            bk->clamp_bwd(a.data(), -0.5f, 0.5f, g.data(), gin_bk.data(), n);
            CHECK(std::memcmp(gin_ref2.data(), gin_bk.data(), n * 4) == 0);
        }
    }
}

TEST_CASE("reductions agree with a double-precision oracle") {
    Rng rng(11);
    for (const auto* bk : kernels::available()) {
        CAPTURE(bk->name);
        for (std::size_t n : kSizes) {
            auto a = random_vec(n, rng);
            auto b = random_vec(n, rng);

            const double want = dot_f64(a, b);
            const float got = bk->dot(a.data(), b.data(), n);
            CHECK(std::fabs(got - want) <= 1e-4 + 1e-5 * std::fabs(want) * std::sqrt(double(n ? n : 1)));

            double wsum = 0.0;
            for (float v : a) wsum += v;
            const float gsum = bk->vsum(a.data(), n);
            CHECK(std::fabs(gsum - wsum) <= 1e-4 + 1e-5 * std::fabs(wsum) * std::sqrt(double(n ? n : 1)));
        }
    }
}

TEST_CASE("max_abs is exact across backends") {
    Rng rng(13);
    for (const auto* bk : kernels::available()) {
        CAPTURE(bk->name);
        for (std::size_t n : kSizes) {
            auto a = random_vec(n, rng, -3.0f, 3.0f);
            float want = 0.0f;
            for (float v : a) want = std::max(want, std::fabs(v));
            CHECK(bk->max_abs(a.data(), n) == want);
        }
    }
}

TEST_CASE("boundary semantics: relu at zero, clamp at the edges") {
    const float x[5] = {-1.0f, 0.0f, 0.5f, 1.0f, 2.0f};
    const float g[5] = {1.0f, 1.0f, 1.0f, 1.0f, 1.0f};
    for (const auto* bk : kernels::available()) {
        CAPTURE(bk->name);
        float gin[5] = {0, 0, 0, 0, 0};
        bk->relu_bwd(x, g, gin, 5);
        // gradient only where x strictly positive
        CHECK(gin[0] == 0.0f);
        CHECK(gin[1] == 0.0f);
        CHECK(gin[2] == 1.0f);

        float cin[5] = {0, 0, 0, 0, 0};
        bk->clamp_bwd(x, 0.0f, 1.0f, g, cin, 5);
        // gradient passes on the closed interval, blocked outside
        CHECK(cin[0] == 0.0f);
        CHECK(cin[1] == 1.0f);
        CHECK(cin[2] == 1.0f);
        CHECK(cin[3] == 1.0f);
        CHECK(cin[4] == 0.0f);
    }
}

TEST_CASE("reductions are run-to-run deterministic per backend") {
    Rng rng(17);
    auto a = random_vec(1000, rng);
    auto b = random_vec(1000, rng);
    for (const auto* bk : kernels::available()) {
        const float d1 = bk->dot(a.data(), b.data(), a.size());
        const float d2 = bk->dot(a.data(), b.data(), a.size());
        CHECK(d1 == d2);
    }
}

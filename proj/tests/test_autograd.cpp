#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "dtuap/errors.hpp"
#include "dtuap/graph.hpp"
#include "dtuap/ops.hpp"
#include "dtuap/rng.hpp"
#include "dtuap/tensor.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using namespace dtuap;
using oracle::Vec;
using oracle::to_f64;
using testutil::random_tensor;
using testutil::well_separated_tensor;

namespace {

constexpr int kInstances = 20; // random instances per op gradient check

// Backprops `build` through `leaf` and finite-difference-checks the result
// against the double-precision oracle closure `f`.
bool gradcheck(Tensor& leaf,
               const std::function<Tensor(Graph&, const Tensor&)>& build,
               const std::function<double(const Vec&)>& f) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
    Graph g;
    Tensor loss = build(g, leaf);
    g.backward(loss);

    // the f32 forward must agree with the f64 oracle before FD means anything
    const double want = f(to_f64(leaf));
    if (std::fabs(loss.item() - want) > 1e-4 + 1e-4 * std::fabs(want)) return false;

    const auto rep = oracle::fd_check(f, to_f64(leaf), leaf.grad());
    if (!rep.ok) {
        MESSAGE("fd mismatch at index ", rep.bad_index, ": fd=", rep.fd, " analytic=", rep.an);
    }
    return rep.ok;
}

} // namespace

TEST_CASE("relu forward matches definition") {
    Graph g;
    Tensor x = Tensor::from_values({3}, {-1.0f, 0.0f, 2.0f});
    Tensor y = ops::relu(g, x);
    CHECK(y.values() == std::vector<float>{0.0f, 0.0f, 2.0f});
}

TEST_CASE("dense with identity weights and zero bias is the identity") {
    Graph g;
    Rng rng(3);
    Tensor x = random_tensor({2, 4}, rng);
    Tensor w({4, 4});
    for (int i = 0; i < 4; ++i) w.data()[i * 4 + i] = 1.0f;
    Tensor b({4});
    Tensor y = ops::dense(g, x, w, b);
    CHECK(y.values() == x.values());
}

TEST_CASE("1x1 unit conv with stride 1 is the identity") {
    Graph g;
    Rng rng(4);
    Tensor x = random_tensor({2, 1, 5, 5}, rng, 0.0f, 1.0f);
    Tensor w = Tensor::from_values({1, 1, 1, 1}, {1.0f});
    Tensor b({1});
    Tensor y = ops::conv2d(g, x, w, b, 1, 0);
    CHECK(y.values() == x.values());
}

TEST_CASE("backward of sum is all ones") {
    Rng rng(5);
    Tensor x = random_tensor({3, 4}, rng, -2.0f, 2.0f, true);
    Graph g;
    g.backward(ops::reduce_sum(g, x));
    for (float v : x.grad()) CHECK(v == 1.0f);
}

TEST_CASE("backward of mean(relu(x)) at [-1,2]") {
    Tensor x = Tensor::from_values({2}, {-1.0f, 2.0f}, true);
    Graph g;
    g.backward(ops::reduce_mean(g, ops::relu(g, x)));
    CHECK(x.grad()[0] == 0.0f);
    CHECK(x.grad()[1] == doctest::Approx(0.5f));
}

TEST_CASE("gradient accumulation is additive across backward passes") {
    Tensor x = Tensor::from_values({3}, {1.0f, -2.0f, 3.0f}, true);
    {
        Graph g;
        g.backward(ops::reduce_sum(g, x));
    }
    {
        Graph g;
        g.backward(ops::reduce_sum(g, ops::scale(g, x, 2.0f)));
    }
    for (float v : x.grad()) CHECK(v == 3.0f);
}

TEST_CASE("backward rejects non-scalar losses and detached tensors") {
    Tensor x = Tensor::from_values({2}, {1.0f, 2.0f}, true);
    Graph g;
    Tensor y = ops::scale(g, x, 2.0f);
    CHECK_THROWS_AS(g.backward(y), ShapeError);

    Tensor detached = Tensor::scalar(1.0f);
    CHECK_THROWS_AS(g.backward(detached), Error);

    Graph other;
    Tensor loss = ops::reduce_sum(other, x);
    CHECK_THROWS_AS(g.backward(loss), Error);
}

TEST_CASE("shape mismatches raise structured errors naming the op") {
    Graph g;
    Tensor x({2, 3});
    Tensor w({4, 5});
    Tensor b({4});
    CHECK_THROWS_WITH_AS(ops::dense(g, x, w, b), doctest::Contains("dense"), ShapeError);

    Tensor img({1, 3, 8, 8});
    Tensor kw({4, 5, 3, 3});
    Tensor kb({4});
    CHECK_THROWS_WITH_AS(ops::conv2d(g, img, kw, kb, 1, 0), doctest::Contains("conv2d"),
                         ShapeError);
}

TEST_CASE("reduce_max_excluding values, tie-break and errors") {
    Graph g;
    Tensor l1 = Tensor::from_values({1, 3}, {3.0f, 5.0f, 1.0f});
    const std::vector<int> ex1 = {1};
    CHECK(ops::reduce_max_excluding(g, l1, ex1).values()[0] == 3.0f);

    // tie: row [7,7,0] excluding 2 -> value 7, gradient routed to index 0
    Tensor l2 = Tensor::from_values({1, 3}, {7.0f, 7.0f, 0.0f}, true);
    Graph g2;
    const std::vector<int> ex2 = {2};
    Tensor m = ops::reduce_max_excluding(g2, l2, ex2);
    CHECK(m.values()[0] == 7.0f);
    g2.backward(ops::reduce_sum(g2, m));
    CHECK(l2.grad() == std::vector<float>{1.0f, 0.0f, 0.0f});

    const std::vector<int> bad = {3};
    CHECK_THROWS_AS(ops::reduce_max_excluding(g, l1, bad), ShapeError);
}

TEST_CASE("reduce_max_excluding matches brute-force scan on random batches") {
    Rng rng(21);
    for (int inst = 0; inst < kInstances; ++inst) {
        const int batch = 8, classes = 2 + static_cast<int>(rng.uniform_u32(9));
        Tensor logits = random_tensor({batch, classes}, rng, -4.0f, 4.0f);
        std::vector<int> ex(batch);
        for (auto& e : ex) e = static_cast<int>(rng.uniform_u32(classes));
        Graph g;
        Tensor m = ops::reduce_max_excluding(g, logits, ex);
        for (int r = 0; r < batch; ++r) {
            float want = -1e30f;
            for (int c = 0; c < classes; ++c)
                if (c != ex[r]) want = std::max(want, logits.values()[r * classes + c]);
            CHECK(m.values()[r] == want);
        }
    }
}

// --- finite-difference oracle per op (double-precision re-evaluation) ---

TEST_CASE("gradcheck: dense (input, weight, bias)") {
    Rng rng(31);
    for (int i = 0; i < kInstances; ++i) {
        const int batch = 1 + static_cast<int>(rng.uniform_u32(4));
        const int in = 1 + static_cast<int>(rng.uniform_u32(6));
        const int out = 1 + static_cast<int>(rng.uniform_u32(5));
        Tensor x = random_tensor({batch, in}, rng);
        Tensor w = random_tensor({out, in}, rng);
        Tensor b = random_tensor({out}, rng);

        auto lib = [&](Graph& g, const Tensor& xx, const Tensor& ww, const Tensor& bb) {
            return ops::reduce_mean(g, ops::relu(g, ops::dense(g, xx, ww, bb)));
        };
        auto orc = [&](const Vec& xx, const Vec& ww, const Vec& bb) {
            return oracle::mean(oracle::relu(oracle::dense(xx, batch, in, ww, out, bb)));
        };

        CHECK(gradcheck(
            x, [&](Graph& g, const Tensor& t) { return lib(g, t, w, b); },
            [&](const Vec& v) { return orc(v, to_f64(w), to_f64(b)); }));
        CHECK(gradcheck(
            w, [&](Graph& g, const Tensor& t) { return lib(g, x, t, b); },
            [&](const Vec& v) { return orc(to_f64(x), v, to_f64(b)); }));
        CHECK(gradcheck(
            b, [&](Graph& g, const Tensor& t) { return lib(g, x, w, t); },
            [&](const Vec& v) { return orc(to_f64(x), to_f64(w), v); }));
    }
}

TEST_CASE("gradcheck: conv2d (input, weight, bias) incl. stride and padding") {
    Rng rng(37);
    for (int i = 0; i < kInstances; ++i) {
        const int ic = 1 + static_cast<int>(rng.uniform_u32(2));
        const int oc = 1 + static_cast<int>(rng.uniform_u32(3));
        const int k = 1 + static_cast<int>(rng.uniform_u32(3));
        const int stride = 1 + static_cast<int>(rng.uniform_u32(2));
        const int pad = static_cast<int>(rng.uniform_u32(2));
        const int hw = k + 2 + static_cast<int>(rng.uniform_u32(3));
        Tensor x = random_tensor({2, ic, hw, hw}, rng);
        Tensor w = random_tensor({oc, ic, k, k}, rng);
        Tensor b = random_tensor({oc}, rng);

        auto lib = [&](Graph& g, const Tensor& xx, const Tensor& ww, const Tensor& bb) {
            return ops::reduce_mean(g, ops::conv2d(g, xx, ww, bb, stride, pad));
        };
        auto orc = [&](const Vec& xx, const Vec& ww, const Vec& bb) {
            return oracle::mean(
                oracle::conv2d(xx, 2, ic, hw, hw, ww, oc, k, k, bb, stride, pad).y);
        };

        CHECK(gradcheck(
            x, [&](Graph& g, const Tensor& t) { return lib(g, t, w, b); },
            [&](const Vec& v) { return orc(v, to_f64(w), to_f64(b)); }));
        CHECK(gradcheck(
            w, [&](Graph& g, const Tensor& t) { return lib(g, x, t, b); },
            [&](const Vec& v) { return orc(to_f64(x), v, to_f64(b)); }));
        CHECK(gradcheck(
            b, [&](Graph& g, const Tensor& t) { return lib(g, x, w, t); },
            [&](const Vec& v) { return orc(to_f64(x), to_f64(w), v); }));
    }
}

TEST_CASE("gradcheck: relu, scale, clamp, add (both args), flatten") {
    Rng rng(41);
    for (int i = 0; i < kInstances; ++i) {
        Tensor x = random_tensor({3, 5}, rng, -2.0f, 2.0f);
        CHECK(gradcheck(
            x, [](Graph& g, const Tensor& t) { return ops::reduce_mean(g, ops::relu(g, t)); },
            [](const Vec& v) { return oracle::mean(oracle::relu(v)); }));

        Tensor x2 = random_tensor({4, 3}, rng);
        CHECK(gradcheck(
            x2,
            [](Graph& g, const Tensor& t) { return ops::reduce_mean(g, ops::scale(g, t, -2.5f)); },
            [](const Vec& v) { return oracle::mean(oracle::scale(v, -2.5)); }));

        Tensor x3 = random_tensor({10}, rng, -2.0f, 2.0f);
        CHECK(gradcheck(
            x3,
            [](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::clamp(g, t, -1.0f, 1.0f));
            },
            [](const Vec& v) { return oracle::mean(oracle::clamp(v, -1.0, 1.0)); }));

        Tensor a = random_tensor({2, 6}, rng);
        Tensor bb = random_tensor({6}, rng);
        CHECK(gradcheck(
            a,
            [&](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::relu(g, ops::add(g, t, bb)));
            },
            [&](const Vec& v) {
                return oracle::mean(oracle::relu(oracle::add_bcast(v, to_f64(bb))));
            }));
        CHECK(gradcheck(
            bb,
            [&](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::relu(g, ops::add(g, a, t)));
            },
            [&](const Vec& v) {
                return oracle::mean(oracle::relu(oracle::add_bcast(to_f64(a), v)));
            }));

        Tensor img = random_tensor({2, 2, 3, 3}, rng);
        Tensor fw = random_tensor({4, 18}, rng);
        Tensor fb = random_tensor({4}, rng);
        CHECK(gradcheck(
            img,
            [&](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::dense(g, ops::flatten(g, t), fw, fb));
            },
            [&](const Vec& v) {
                return oracle::mean(oracle::dense(v, 2, 18, to_f64(fw), 4, to_f64(fb)));
            }));
    }
}

TEST_CASE("gradcheck: pooling") {
    Rng rng(43);
    for (int i = 0; i < kInstances; ++i) {
        Tensor x = well_separated_tensor({2, 2, 6, 6}, rng);
        CHECK(gradcheck(
            x,
            [](Graph& g, const Tensor& t) { return ops::reduce_mean(g, ops::maxpool2d(g, t, 2, 2)); },
            [](const Vec& v) { return oracle::mean(oracle::maxpool2d(v, 4, 6, 6, 2, 2)); }));

        Tensor x2 = random_tensor({2, 2, 6, 6}, rng);
        CHECK(gradcheck(
            x2,
            [](Graph& g, const Tensor& t) { return ops::reduce_mean(g, ops::avgpool2d(g, t, 3, 1)); },
            [](const Vec& v) { return oracle::mean(oracle::avgpool2d(v, 4, 6, 6, 3, 1)); }));
    }
}

TEST_CASE("gradcheck: reduce_max_excluding and softmax cross-entropy") {
    Rng rng(47);
    for (int i = 0; i < kInstances; ++i) {
        const int batch = 4, classes = 5;
        Tensor logits = well_separated_tensor({batch, classes}, rng);
        std::vector<int> ex(batch);
        for (auto& e : ex) e = static_cast<int>(rng.uniform_u32(classes));

        CHECK(gradcheck(
            logits,
            [&](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::reduce_max_excluding(g, t, ex));
            },
            [&](const Vec& v) {
                return oracle::mean(oracle::reduce_max_excluding(v, batch, classes, ex));
            }));

        Tensor logits2 = random_tensor({batch, classes}, rng, -2.0f, 2.0f);
        CHECK(gradcheck(
            logits2,
            [&](Graph& g, const Tensor& t) {
                return ops::reduce_mean(g, ops::softmax_cross_entropy(g, t, ex));
            },
            [&](const Vec& v) {
                return oracle::mean(oracle::softmax_cross_entropy(v, batch, classes, ex));
            }));
    }
}

TEST_CASE("gradcheck: random 3-layer MLP against finite differences") {
    Rng rng(53);
    for (int i = 0; i < 5; ++i) {
        // <= 64 parameters total, checked coordinate by coordinate
        Tensor x = random_tensor({2, 3}, rng);
        Tensor w1 = random_tensor({4, 3}, rng);
        Tensor b1 = random_tensor({4}, rng);
        Tensor w2 = random_tensor({3, 4}, rng);
        Tensor b2 = random_tensor({3}, rng);
        Tensor w3 = random_tensor({2, 3}, rng);
        Tensor b3 = random_tensor({2}, rng);
        const std::vector<int> targets = {0, 1};

        auto lib = [&](Graph& g, const Tensor& xin, const Tensor& w1t, const Tensor& w2t,
                       const Tensor& w3t) {
            Tensor h1 = ops::relu(g, ops::dense(g, xin, w1t, b1));
            Tensor h2 = ops::relu(g, ops::dense(g, h1, w2t, b2));
            Tensor out = ops::dense(g, h2, w3t, b3);
            return ops::reduce_mean(g, ops::softmax_cross_entropy(g, out, targets));
        };
        auto orc = [&](const Vec& xin, const Vec& w1t, const Vec& w2t, const Vec& w3t) {
            Vec h1 = oracle::relu(oracle::dense(xin, 2, 3, w1t, 4, to_f64(b1)));
            Vec h2 = oracle::relu(oracle::dense(h1, 2, 4, w2t, 3, to_f64(b2)));
            Vec out = oracle::dense(h2, 2, 3, w3t, 2, to_f64(b3));
            return oracle::mean(oracle::softmax_cross_entropy(out, 2, 2, targets));
        };

        CHECK(gradcheck(
            x, [&](Graph& g, const Tensor& t) { return lib(g, t, w1, w2, w3); },
            [&](const Vec& v) { return orc(v, to_f64(w1), to_f64(w2), to_f64(w3)); }));
        CHECK(gradcheck(
            w1, [&](Graph& g, const Tensor& t) { return lib(g, x, t, w2, w3); },
            [&](const Vec& v) { return orc(to_f64(x), v, to_f64(w2), to_f64(w3)); }));
        CHECK(gradcheck(
            w2, [&](Graph& g, const Tensor& t) { return lib(g, x, w1, t, w3); },
            [&](const Vec& v) { return orc(to_f64(x), to_f64(w1), v, to_f64(w3)); }));
        CHECK(gradcheck(
            w3, [&](Graph& g, const Tensor& t) { return lib(g, x, w1, w2, t); },
            [&](const Vec& v) { return orc(to_f64(x), to_f64(w1), to_f64(w2), v); }));
    }
}

TEST_CASE("linearity of backward: grad(a*f + b*g) = a*grad(f) + b*grad(g)") {
    Rng rng(59);
    Tensor x = random_tensor({3, 4}, rng, -1.0f, 1.0f);

    auto grad_of = [&](auto&& lossfn) {
        Tensor leaf = x.clone();
        leaf.set_requires_grad(true);
        Graph g;
        g.backward(lossfn(g, leaf));
        return leaf.grad();
    };

    const float a = 2.5f, b = -1.25f;
    auto f = [](Graph& g, const Tensor& t) { return ops::reduce_mean(g, ops::relu(g, t)); };
    auto h = [](Graph& g, const Tensor& t) { return ops::reduce_sum(g, ops::scale(g, t, 0.5f)); };
    auto combined = [&](Graph& g, const Tensor& t) {
        return ops::add(g, ops::scale(g, f(g, t), a), ops::scale(g, h(g, t), b));
    };

    const auto gf = grad_of(f);
    const auto gh = grad_of(h);
    const auto gc = grad_of(combined);
    for (std::size_t i = 0; i < gc.size(); ++i)
        CHECK(gc[i] == doctest::Approx(a * gf[i] + b * gh[i]).epsilon(1e-5));
}

TEST_CASE("determinism: identical inputs give bit-identical forward and grads") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor({2, 1, 6, 6}, rng, 0.0f, 1.0f, true);
        Tensor w = random_tensor({3, 1, 3, 3}, rng);
        Tensor b = random_tensor({3}, rng);
        Graph g;
        Tensor y = ops::reduce_mean(g, ops::relu(g, ops::conv2d(g, x, w, b, 1, 1)));
        g.backward(y);
        return std::make_pair(y.values(), x.grad());
    };
    const auto r1 = run(1234);
    const auto r2 = run(1234);
    CHECK(r1.first == r2.first);
    CHECK(r1.second == r2.second);
}

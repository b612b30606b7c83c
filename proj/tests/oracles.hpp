#pragma once

// Test-only oracles, independent of the library implementation:
//   - double-precision forward evaluators for every differentiable op,
//     used by the central finite-difference gradient checker;
//   - scalar-loop recomputations of the attack losses.
// None of this code shares a line with src/; that is the point.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dtuap/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec to_f64(const dtuap::Tensor& t) {
    return Vec(t.values().begin(), t.values().end());
}

// ---- forward evaluators (double precision) ----

inline Vec dense(const Vec& x, int batch, int in, const Vec& w, int out, const Vec& b) {
    Vec y(static_cast<std::size_t>(batch) * out, 0.0);
    for (int r = 0; r < batch; ++r)
        for (int o = 0; o < out; ++o) {
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
            y[r * out + o] = acc;
        }
    return y;
}

struct ConvOut {
    Vec y;
    int out_h, out_w;
};

inline ConvOut conv2d(const Vec& x, int batch, int ic, int h, int w, const Vec& wt, int oc,
                      int kh, int kw, const Vec& b, int stride, int pad) {
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    Vec y(static_cast<std::size_t>(batch) * oc * oh * ow, 0.0);
    for (int n = 0; n < batch; ++n)
        for (int o = 0; o < oc; ++o)
            for (int yy = 0; yy < oh; ++yy)
                for (int xx = 0; xx < ow; ++xx) {
                    double acc = b[o];
                    for (int c = 0; c < ic; ++c)
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v) {
                                const int iy = yy * stride - pad + u;
                                const int ix = xx * stride - pad + v;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += x[((n * ic + c) * h + iy) * w + ix] *
                                       wt[((o * ic + c) * kh + u) * kw + v];
                            }
                    y[((n * oc + o) * oh + yy) * ow + xx] = acc;
                }
    return {std::move(y), oh, ow};
}

inline Vec relu(Vec x) {
    for (auto& v : x) v = v > 0.0 ? v : 0.0;
    return x;
}

inline Vec scale(Vec x, double a) {
    for (auto& v : x) v *= a;
    return x;
}

inline Vec clamp(Vec x, double lo, double hi) {
    for (auto& v : x) v = std::min(hi, std::max(lo, v));
    return x;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    return y;
}

// b broadcast across the leading dimension of a
inline Vec add_bcast(const Vec& a, const Vec& b) {
    Vec y(a.size());
    const std::size_t slice = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i % slice];
    return y;
}

inline Vec maxpool2d(const Vec& x, int planes, int h, int w, int k, int s) {
    const int oh = (h - k) / s + 1, ow = (w - k) / s + 1;
    Vec y(static_cast<std::size_t>(planes) * oh * ow);
    std::size_t o = 0;
    for (int p = 0; p < planes; ++p)
        for (int yy = 0; yy < oh; ++yy)
            for (int xx = 0; xx < ow; ++xx, ++o) {
                double m = -1e300;
                for (int u = 0; u < k; ++u)
                    for (int v = 0; v < k; ++v)
                        m = std::max(m, x[(p * h + yy * s + u) * w + xx * s + v]);
                y[o] = m;
            }
    return y;
}

inline Vec avgpool2d(const Vec& x, int planes, int h, int w, int k, int s) {
    const int oh = (h - k) / s + 1, ow = (w - k) / s + 1;
    Vec y(static_cast<std::size_t>(planes) * oh * ow);
    std::size_t o = 0;
    for (int p = 0; p < planes; ++p)
        for (int yy = 0; yy < oh; ++yy)
            for (int xx = 0; xx < ow; ++xx, ++o) {
                double acc = 0.0;
                for (int u = 0; u < k; ++u)
                    for (int v = 0; v < k; ++v)
                        acc += x[(p * h + yy * s + u) * w + xx * s + v];
                y[o] = acc / (k * k);
            }
    return y;
}

inline Vec reduce_max_excluding(const Vec& logits, int batch, int classes,
                                const std::vector<int>& excluded) {
    Vec y(static_cast<std::size_t>(batch));
    for (int r = 0; r < batch; ++r) {
        double m = -1e300;
        for (int c = 0; c < classes; ++c)
            if (c != excluded[static_cast<std::size_t>(r)])
                m = std::max(m, logits[r * classes + c]);
        y[static_cast<std::size_t>(r)] = m;
    }
    return y;
}

inline Vec softmax_cross_entropy(const Vec& logits, int batch, int classes,
                                 const std::vector<int>& targets) {
    Vec y(static_cast<std::size_t>(batch));
    for (int r = 0; r < batch; ++r) {
        double m = logits[r * classes];
        for (int c = 1; c < classes; ++c) m = std::max(m, logits[r * classes + c]);
        double z = 0.0;
        for (int c = 0; c < classes; ++c) z += std::exp(logits[r * classes + c] - m);
        y[static_cast<std::size_t>(r)] =
            std::log(z) + m - logits[r * classes + targets[static_cast<std::size_t>(r)]];
    }
    return y;
}

inline double mean(const Vec& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

inline double sum(const Vec& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

// ---- scalar-loop loss recomputations (per-row, no batching tricks) ----

inline double loss_t1(const Vec& logits, int batch, int classes, const std::vector<int>& p) {
    double acc = 0.0;
    for (int r = 0; r < batch; ++r) {
        const double zp = logits[r * classes + p[static_cast<std::size_t>(r)]];
        double m = -1e300;
        for (int c = 0; c < classes; ++c)
            if (c != p[static_cast<std::size_t>(r)]) m = std::max(m, logits[r * classes + c]);
        acc += std::max(zp - m, 0.0);
    }
    return acc / batch;
}

inline double loss_t2(const Vec& logits, int batch, int classes, int sink, double dominance) {
    double acc = 0.0;
    for (int r = 0; r < batch; ++r) {
        double m = -1e300;
        for (int c = 0; c < classes; ++c)
            if (c != sink) m = std::max(m, logits[r * classes + c]);
        acc += std::max(m - logits[r * classes + sink], -dominance);
    }
    return acc / batch;
}

inline double loss_nt(const Vec& logits, int batch, int classes, const std::vector<int>& pred) {
    return mean(softmax_cross_entropy(logits, batch, classes, pred));
}

// ---- central finite differences against the analytic gradient ----

struct FdReport {
    bool ok = true;
    int bad_index = -1;
    double fd = 0.0, an = 0.0;
    int refined = 0; // coordinates that needed the smaller step
};

// Central differences at step h on every coordinate. Piecewise-linear ops
// (relu, max) make f nonsmooth; a coordinate whose probe interval straddles
// a kink first fails at h, so it is re-probed at h/16, which shrinks the
// interval away from the kink. A genuinely wrong gradient fails at both
// steps.
inline FdReport fd_check(const std::function<double(const Vec&)>& f, const Vec& x0,
                         const std::vector<float>& analytic, double h = 1e-3,
                         double rtol = 1e-3, double afloor = 1e-5) {
    FdReport rep;
    Vec x = x0;
    auto fd_at = [&](std::size_t i, double step) {
        const double orig = x[i];
        x[i] = orig + step;
        const double fp = f(x);
        x[i] = orig - step;
        const double fm = f(x);
        x[i] = orig;
        return (fp - fm) / (2.0 * step);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double an = static_cast<double>(analytic[i]);
        auto within = [&](double fd) {
            const double tol = std::max(afloor, rtol * std::max(std::fabs(fd), std::fabs(an)));
            return std::fabs(fd - an) <= tol;
        };
        double fd = fd_at(i, h);
        if (!within(fd)) {
            ++rep.refined;
            fd = fd_at(i, h / 16.0);
            if (!within(fd)) {
                rep.ok = false;
                rep.bad_index = static_cast<int>(i);
                rep.fd = fd;
                rep.an = an;
                return rep;
            }
        }
    }
    return rep;
}

} // namespace oracle

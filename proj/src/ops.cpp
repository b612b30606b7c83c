#include "dtuap/ops.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "dtuap/errors.hpp"
#include "dtuap/kernels.hpp"

namespace dtuap::ops {

namespace {

using kernels::active;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

std::string shp(const Tensor& t) { return Tensor::shape_str(t.shape()); }

struct ConvDims {
    int batch, in_c, in_h, in_w;
    int out_c, kh, kw;
    int out_h, out_w;
    int patch; // in_c * kh * kw
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    require(x.rank() == 4, "conv2d: input must be [B,C,H,W], got " + shp(x));
    require(w.rank() == 4, "conv2d: weight must be [OC,IC,KH,KW], got " + shp(w));
    require(b.rank() == 1, "conv2d: bias must be [OC], got " + shp(b));
    require(stride >= 1, "conv2d: stride must be >= 1, got " + std::to_string(stride));
    require(pad >= 0, "conv2d: padding must be >= 0, got " + std::to_string(pad));
    ConvDims d;
    d.batch = x.dim(0);
    d.in_c = x.dim(1);
    d.in_h = x.dim(2);
    d.in_w = x.dim(3);
    d.out_c = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    require(w.dim(1) == d.in_c, "conv2d: input " + shp(x) + " has " + std::to_string(d.in_c) +
                                    " channels but weight " + shp(w) + " expects " +
                                    std::to_string(w.dim(1)));
    require(b.dim(0) == d.out_c, "conv2d: bias " + shp(b) + " does not match " +
                                     std::to_string(d.out_c) + " output channels");
    require(d.in_h + 2 * pad >= d.kh && d.in_w + 2 * pad >= d.kw,
            "conv2d: kernel " + shp(w) + " larger than padded input " + shp(x));
    d.out_h = (d.in_h + 2 * pad - d.kh) / stride + 1;
    d.out_w = (d.in_w + 2 * pad - d.kw) / stride + 1;
    d.patch = d.in_c * d.kh * d.kw;
    return d;
}

// Gathers the kh*kw*in_c patch under every output position into a
// [out_h*out_w, patch] row-major matrix (zeros where the window overhangs).
void im2col(const float* img, const ConvDims& d, int stride, int pad, float* cols) {
    const int positions = d.out_h * d.out_w;
    std::memset(cols, 0, sizeof(float) * static_cast<std::size_t>(positions) *
                             static_cast<std::size_t>(d.patch));
    for (int oh = 0; oh < d.out_h; ++oh) {
        for (int ow = 0; ow < d.out_w; ++ow) {
            float* row = cols + (static_cast<std::size_t>(oh) * d.out_w + ow) *
                                    static_cast<std::size_t>(d.patch);
            const int h0 = oh * stride - pad;
            const int w0 = ow * stride - pad;
            for (int c = 0; c < d.in_c; ++c) {
                for (int kh = 0; kh < d.kh; ++kh) {
                    const int h = h0 + kh;
                    if (h < 0 || h >= d.in_h) continue;
                    const int kw_lo = w0 < 0 ? -w0 : 0;
                    const int kw_hi = d.kw < d.in_w - w0 ? d.kw : d.in_w - w0;
                    if (kw_hi <= kw_lo) continue;
                    const float* src = img + (static_cast<std::size_t>(c) * d.in_h + h) * d.in_w +
                                       w0 + kw_lo;
                    float* dst = row + (static_cast<std::size_t>(c) * d.kh + kh) * d.kw + kw_lo;
                    std::memcpy(dst, src, sizeof(float) * static_cast<std::size_t>(kw_hi - kw_lo));
                }
            }
        }
    }
}

// Scatter-add of a cols gradient back onto the image gradient.
void col2im_add(const float* cols, const ConvDims& d, int stride, int pad, float* gimg) {
    for (int oh = 0; oh < d.out_h; ++oh) {
        for (int ow = 0; ow < d.out_w; ++ow) {
            const float* row = cols + (static_cast<std::size_t>(oh) * d.out_w + ow) *
                                          static_cast<std::size_t>(d.patch);
            const int h0 = oh * stride - pad;
            const int w0 = ow * stride - pad;
            for (int c = 0; c < d.in_c; ++c) {
                for (int kh = 0; kh < d.kh; ++kh) {
                    const int h = h0 + kh;
                    if (h < 0 || h >= d.in_h) continue;
                    for (int kw = 0; kw < d.kw; ++kw) {
                        const int w = w0 + kw;
                        if (w < 0 || w >= d.in_w) continue;
                        gimg[(static_cast<std::size_t>(c) * d.in_h + h) * d.in_w + w] +=
                            row[(static_cast<std::size_t>(c) * d.kh + kh) * d.kw + kw];
                    }
                }
            }
        }
    }
}

} // namespace

Tensor dense(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.rank() == 2, "dense: input must be [B,IN], got " + shp(x));
    require(w.rank() == 2, "dense: weight must be [OUT,IN], got " + shp(w));
    require(b.rank() == 1, "dense: bias must be [OUT], got " + shp(b));
    require(w.dim(1) == x.dim(1), "dense: input " + shp(x) + " incompatible with weight " +
                                      shp(w) + " (inner dimensions differ)");
    require(b.dim(0) == w.dim(0), "dense: bias " + shp(b) + " does not match weight " + shp(w));

    const auto& K = active();
    const int batch = x.dim(0), in = x.dim(1), out = w.dim(0);
    Tensor y({batch, out});
    for (int r = 0; r < batch; ++r) {
        const float* xr = x.data() + static_cast<std::size_t>(r) * in;
        float* yr = y.data() + static_cast<std::size_t>(r) * out;
        for (int o = 0; o < out; ++o)
            yr[o] = K.dot(xr, w.data() + static_cast<std::size_t>(o) * in, in) + b.data()[o];
    }

    g.record("dense", {x, w, b}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        const auto& KK = active();
        float* gx = adj.sink(x);
        float* gw = adj.sink(w);
        float* gb = adj.sink(b);
        for (int r = 0; r < batch; ++r) {
            const float* gr = ga.data() + static_cast<std::size_t>(r) * out;
            for (int o = 0; o < out; ++o) {
                const float go = gr[o];
                if (go == 0.0f) continue;
                if (gx)
                    KK.axpy(go, w.data() + static_cast<std::size_t>(o) * in,
                            gx + static_cast<std::size_t>(r) * in, in);
                if (gw)
                    KK.axpy(go, x.data() + static_cast<std::size_t>(r) * in,
                            gw + static_cast<std::size_t>(o) * in, in);
                if (gb) gb[o] += go;
            }
        }
    });
    return y;
}

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int pad) {
    const ConvDims d = conv_dims(x, w, b, stride, pad);
    const auto& K = active();
    const int positions = d.out_h * d.out_w;
    const std::size_t plane = static_cast<std::size_t>(d.in_c) * d.in_h * d.in_w;
    const std::size_t cols_sz = static_cast<std::size_t>(positions) * d.patch;

    Tensor y({d.batch, d.out_c, d.out_h, d.out_w});
    // Patch matrices are cached only when the weights need a gradient
    // (training); the input path alone can be replayed from w and gy.
    const bool keep_cols = g.recording() && (w.impl()->requires_grad || w.impl()->on_grad_path);
    auto cached = std::make_shared<std::vector<float>>();
    if (keep_cols) cached->resize(cols_sz * static_cast<std::size_t>(d.batch));

    std::vector<float> scratch;
    if (!keep_cols) scratch.resize(cols_sz);
    for (int n = 0; n < d.batch; ++n) {
        float* cols = keep_cols ? cached->data() + static_cast<std::size_t>(n) * cols_sz
                                : scratch.data();
        im2col(x.data() + static_cast<std::size_t>(n) * plane, d, stride, pad, cols);
        float* yb = y.data() + static_cast<std::size_t>(n) * d.out_c * positions;
        for (int oc = 0; oc < d.out_c; ++oc) {
            const float* wrow = w.data() + static_cast<std::size_t>(oc) * d.patch;
            const float bias = b.data()[oc];
            float* yrow = yb + static_cast<std::size_t>(oc) * positions;
            for (int p = 0; p < positions; ++p)
                yrow[p] = K.dot(wrow, cols + static_cast<std::size_t>(p) * d.patch, d.patch) + bias;
        }
    }

    g.record("conv2d", {x, w, b}, y,
             [=](const std::vector<float>& ga, Adjoints& adj) mutable {
                 const auto& KK = active();
                 float* gx = adj.sink(x);
                 float* gw = adj.sink(w);
                 float* gb = adj.sink(b);
                 if (gw && !keep_cols)
                     throw Error("conv2d backward: weight gradient requested but patch cache "
                                 "was dropped (requires_grad toggled after forward)");
                 std::vector<float> gcols;
                 if (gx) gcols.resize(cols_sz);
                 for (int n = 0; n < d.batch; ++n) {
                     const float* gyb = ga.data() + static_cast<std::size_t>(n) * d.out_c * positions;
                     const float* cols =
                         keep_cols ? cached->data() + static_cast<std::size_t>(n) * cols_sz : nullptr;
                     if (gx) std::fill(gcols.begin(), gcols.end(), 0.0f);
                     for (int oc = 0; oc < d.out_c; ++oc) {
                         const float* grow = gyb + static_cast<std::size_t>(oc) * positions;
                         const float* wrow = w.data() + static_cast<std::size_t>(oc) * d.patch;
                         float* gwrow = gw ? gw + static_cast<std::size_t>(oc) * d.patch : nullptr;
                         for (int p = 0; p < positions; ++p) {
                             const float go = grow[p];
                             if (go == 0.0f) continue;
                             if (gx)
                                 KK.axpy(go, wrow, gcols.data() + static_cast<std::size_t>(p) * d.patch,
                                         d.patch);
                             if (gwrow)
                                 KK.axpy(go, cols + static_cast<std::size_t>(p) * d.patch, gwrow,
                                         d.patch);
                             if (gb) gb[oc] += go;
                         }
                     }
                     if (gx)
                         col2im_add(gcols.data(), d, stride, pad,
                                    gx + static_cast<std::size_t>(n) * plane);
                 }
             });
    return y;
}

Tensor relu(Graph& g, const Tensor& x) {
    const auto& K = active();
    Tensor y(x.shape());
    K.relu(x.data(), y.data(), static_cast<std::size_t>(x.numel()));
    g.record("relu", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x))
            active().relu_bwd(x.data(), ga.data(), gx, ga.size());
    });
    return y;
}

namespace {

struct PoolDims {
    int batch, chan, in_h, in_w, out_h, out_w;
};

PoolDims pool_dims(const char* op, const Tensor& x, int kernel, int stride) {
    require(x.rank() == 4, std::string(op) + ": input must be [B,C,H,W], got " + shp(x));
    require(kernel >= 1 && stride >= 1,
            std::string(op) + ": kernel and stride must be >= 1");
    PoolDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), 0, 0};
    require(d.in_h >= kernel && d.in_w >= kernel,
            std::string(op) + ": kernel " + std::to_string(kernel) + " larger than input " + shp(x));
    d.out_h = (d.in_h - kernel) / stride + 1;
    d.out_w = (d.in_w - kernel) / stride + 1;
    return d;
}

} // namespace

Tensor maxpool2d(Graph& g, const Tensor& x, int kernel, int stride) {
    const PoolDims d = pool_dims("maxpool2d", x, kernel, stride);
    Tensor y({d.batch, d.chan, d.out_h, d.out_w});
    const std::size_t planes = static_cast<std::size_t>(d.batch) * d.chan;
    auto argmax_idx = std::make_shared<std::vector<int>>(planes * d.out_h * d.out_w);

    std::size_t oi = 0;
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const float* in = x.data() + pl * d.in_h * d.in_w;
        for (int oh = 0; oh < d.out_h; ++oh) {
            for (int ow = 0; ow < d.out_w; ++ow, ++oi) {
                int best = -1;
                float bv = 0.0f;
                for (int kh = 0; kh < kernel; ++kh) {
                    const int h = oh * stride + kh;
                    for (int kw = 0; kw < kernel; ++kw) {
                        const int idx = h * d.in_w + ow * stride + kw;
                        if (best < 0 || in[idx] > bv) {
                            best = idx;
                            bv = in[idx];
                        }
                    }
                }
                y.data()[oi] = bv;
                (*argmax_idx)[oi] = best;
            }
        }
    }

    g.record("maxpool2d", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        float* gx = adj.sink(x);
        if (!gx) return;
        const std::size_t out_plane = static_cast<std::size_t>(d.out_h) * d.out_w;
        const std::size_t in_plane = static_cast<std::size_t>(d.in_h) * d.in_w;
        for (std::size_t pl = 0; pl < planes; ++pl)
            for (std::size_t p = 0; p < out_plane; ++p)
                gx[pl * in_plane + static_cast<std::size_t>((*argmax_idx)[pl * out_plane + p])] +=
                    ga[pl * out_plane + p];
    });
    return y;
}

Tensor avgpool2d(Graph& g, const Tensor& x, int kernel, int stride) {
    const PoolDims d = pool_dims("avgpool2d", x, kernel, stride);
    Tensor y({d.batch, d.chan, d.out_h, d.out_w});
    const float inv = 1.0f / static_cast<float>(kernel * kernel);
    const std::size_t planes = static_cast<std::size_t>(d.batch) * d.chan;

    std::size_t oi = 0;
    for (std::size_t pl = 0; pl < planes; ++pl) {
        const float* in = x.data() + pl * d.in_h * d.in_w;
        for (int oh = 0; oh < d.out_h; ++oh)
            for (int ow = 0; ow < d.out_w; ++ow, ++oi) {
                float s = 0.0f;
                for (int kh = 0; kh < kernel; ++kh)
                    for (int kw = 0; kw < kernel; ++kw)
                        s += in[(oh * stride + kh) * d.in_w + ow * stride + kw];
                y.data()[oi] = s * inv;
            }
    }

    g.record("avgpool2d", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        float* gx = adj.sink(x);
        if (!gx) return;
        const std::size_t out_plane = static_cast<std::size_t>(d.out_h) * d.out_w;
        const std::size_t in_plane = static_cast<std::size_t>(d.in_h) * d.in_w;
        for (std::size_t pl = 0; pl < planes; ++pl) {
            std::size_t p = 0;
            for (int oh = 0; oh < d.out_h; ++oh)
                for (int ow = 0; ow < d.out_w; ++ow, ++p) {
                    const float go = ga[pl * out_plane + p] * inv;
                    for (int kh = 0; kh < kernel; ++kh)
                        for (int kw = 0; kw < kernel; ++kw)
                            gx[pl * in_plane + (oh * stride + kh) * d.in_w + ow * stride + kw] += go;
                }
        }
    });
    return y;
}

Tensor flatten(Graph& g, const Tensor& x) {
    require(x.rank() >= 2, "flatten: input must have a batch dimension, got " + shp(x));
    const int batch = x.dim(0);
    const int rest = static_cast<int>(x.numel() / batch);
    Tensor y = Tensor::from_values({batch, rest}, x.values());
    g.record("flatten", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x))
            for (std::size_t i = 0; i < ga.size(); ++i) gx[i] += ga[i];
    });
    return y;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    const auto& K = active();
    if (a.shape() == b.shape()) {
        Tensor y(a.shape());
        K.vadd(a.data(), b.data(), y.data(), static_cast<std::size_t>(y.numel()));
        g.record("add", {a, b}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
            const auto& KK = active();
            if (float* gx = adj.sink(a)) KK.axpy(1.0f, ga.data(), gx, ga.size());
            if (float* gy = adj.sink(b)) KK.axpy(1.0f, ga.data(), gy, ga.size());
        });
        return y;
    }
    // b broadcast over the leading dimension of a
    const bool bcast = a.rank() == b.rank() + 1 &&
                       std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1);
    require(bcast, "add: shapes " + shp(a) + " and " + shp(b) +
                       " are neither equal nor leading-dim broadcastable");
    const int batch = a.dim(0);
    const std::size_t slice = static_cast<std::size_t>(b.numel());
    Tensor y(a.shape());
    for (int n = 0; n < batch; ++n)
        K.vadd(a.data() + n * slice, b.data(), y.data() + n * slice, slice);
    g.record("add", {a, b}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        const auto& KK = active();
        if (float* gx = adj.sink(a)) KK.axpy(1.0f, ga.data(), gx, ga.size());
        if (float* gy = adj.sink(b))
            for (int n = 0; n < batch; ++n) KK.axpy(1.0f, ga.data() + n * slice, gy, slice);
    });
    return y;
}

Tensor scale(Graph& g, const Tensor& x, float alpha) {
    const auto& K = active();
    Tensor y(x.shape());
    K.vscale(x.data(), alpha, y.data(), static_cast<std::size_t>(x.numel()));
    g.record("scale", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x)) active().axpy(alpha, ga.data(), gx, ga.size());
    });
    return y;
}

Tensor clamp(Graph& g, const Tensor& x, float lo, float hi) {
    require(lo <= hi, "clamp: lo > hi");
    const auto& K = active();
    Tensor y(x.shape());
    K.clamp(x.data(), lo, hi, y.data(), static_cast<std::size_t>(x.numel()));
    g.record("clamp", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x))
            active().clamp_bwd(x.data(), lo, hi, ga.data(), gx, ga.size());
    });
    return y;
}

Tensor reduce_max_excluding(Graph& g, const Tensor& logits, std::span<const int> excluded) {
    require(logits.rank() == 2, "reduce_max_excluding: logits must be [B,C], got " + shp(logits));
    const int batch = logits.dim(0), classes = logits.dim(1);
    require(classes >= 2, "reduce_max_excluding: needs at least 2 classes, got " +
                              std::to_string(classes));
    require(static_cast<int>(excluded.size()) == batch,
            "reduce_max_excluding: excluded size " + std::to_string(excluded.size()) +
                " != batch " + std::to_string(batch));

    Tensor y({batch});
    auto arg = std::make_shared<std::vector<int>>(batch);
    for (int r = 0; r < batch; ++r) {
        const int ex = excluded[static_cast<std::size_t>(r)];
        if (ex < 0 || ex >= classes)
            throw ShapeError("reduce_max_excluding: excluded index " + std::to_string(ex) +
                             " out of range [0," + std::to_string(classes) + ") in row " +
                             std::to_string(r));
        const float* row = logits.data() + static_cast<std::size_t>(r) * classes;
        int best = -1;
        for (int i = 0; i < classes; ++i) {
            if (i == ex) continue;
            if (best < 0 || row[i] > row[best]) best = i;
        }
        y.data()[r] = row[best];
        (*arg)[r] = best;
    }

    g.record("reduce_max_excluding", {logits}, y,
             [=](const std::vector<float>& ga, Adjoints& adj) mutable {
                 if (float* gx = adj.sink(logits))
                     for (int r = 0; r < batch; ++r)
                         gx[static_cast<std::size_t>(r) * classes + (*arg)[r]] += ga[r];
             });
    return y;
}

Tensor reduce_mean(Graph& g, const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.numel());
    const float inv = 1.0f / static_cast<float>(n);
    Tensor y = Tensor::scalar(active().vsum(x.data(), n) * inv);
    g.record("reduce_mean", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x)) {
            const float go = ga[0] * inv;
            for (std::size_t i = 0; i < n; ++i) gx[i] += go;
        }
    });
    return y;
}

Tensor reduce_sum(Graph& g, const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.numel());
    Tensor y = Tensor::scalar(active().vsum(x.data(), n));
    g.record("reduce_sum", {x}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(x)) {
            const float go = ga[0];
            for (std::size_t i = 0; i < n; ++i) gx[i] += go;
        }
    });
    return y;
}

Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> targets) {
    require(logits.rank() == 2, "softmax_cross_entropy: logits must be [B,C], got " + shp(logits));
    const int batch = logits.dim(0), classes = logits.dim(1);
    require(static_cast<int>(targets.size()) == batch,
            "softmax_cross_entropy: targets size " + std::to_string(targets.size()) +
                " != batch " + std::to_string(batch));

    Tensor y({batch});
    auto probs = std::make_shared<std::vector<float>>(
        static_cast<std::size_t>(batch) * classes);
    auto tgt = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
    for (int r = 0; r < batch; ++r) {
        const int t = (*tgt)[static_cast<std::size_t>(r)];
        if (t < 0 || t >= classes)
            throw ShapeError("softmax_cross_entropy: target " + std::to_string(t) +
                             " out of range [0," + std::to_string(classes) + ") in row " +
                             std::to_string(r));
        const float* row = logits.data() + static_cast<std::size_t>(r) * classes;
        float m = row[0];
        for (int i = 1; i < classes; ++i) m = row[i] > m ? row[i] : m;
        float z = 0.0f;
        float* prow = probs->data() + static_cast<std::size_t>(r) * classes;
        for (int i = 0; i < classes; ++i) {
            prow[i] = std::exp(row[i] - m);
            z += prow[i];
        }
        const float invz = 1.0f / z;
        for (int i = 0; i < classes; ++i) prow[i] *= invz;
        y.data()[r] = std::log(z) + m - row[t];
    }

    g.record("softmax_cross_entropy", {logits}, y,
             [=](const std::vector<float>& ga, Adjoints& adj) mutable {
                 if (float* gx = adj.sink(logits)) {
                     for (int r = 0; r < batch; ++r) {
                         const float go = ga[r];
                         if (go == 0.0f) continue;
                         const float* prow = probs->data() + static_cast<std::size_t>(r) * classes;
                         float* grow = gx + static_cast<std::size_t>(r) * classes;
                         for (int i = 0; i < classes; ++i) grow[i] += go * prow[i];
                         grow[(*tgt)[static_cast<std::size_t>(r)]] -= go;
                     }
                 }
             });
    return y;
}

int argmax(const float* row, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

std::vector<float> softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2)
        throw ShapeError("softmax_rows: logits must be [B,C], got " + Tensor::shape_str(logits.shape()));
    const int batch = logits.dim(0), classes = logits.dim(1);
    std::vector<float> out(static_cast<std::size_t>(batch) * classes);
    for (int r = 0; r < batch; ++r) {
        const float* row = logits.data() + static_cast<std::size_t>(r) * classes;
        float* orow = out.data() + static_cast<std::size_t>(r) * classes;
        float m = row[0];
        for (int i = 1; i < classes; ++i) m = row[i] > m ? row[i] : m;
        float z = 0.0f;
        for (int i = 0; i < classes; ++i) {
            orow[i] = std::exp(row[i] - m);
            z += orow[i];
        }
        for (int i = 0; i < classes; ++i) orow[i] /= z;
    }
    return out;
}

} // namespace dtuap::ops

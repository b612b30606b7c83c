#pragma once

#include <span>
#include <vector>

#include "dtuap/graph.hpp"
#include "dtuap/tensor.hpp"

// Differentiable tensor operations. Each op validates shapes, computes the
// forward value, and records its adjoint on the graph. Layout is NCHW for
// images; dense weights are [out, in]; conv weights [out_c, in_c, kh, kw].

namespace dtuap::ops {

// y = x @ w^T + b        x:[B,IN] w:[OUT,IN] b:[OUT] -> [B,OUT]
Tensor dense(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b);

// Zero-padded strided cross-correlation. x:[B,IC,H,W] w:[OC,IC,KH,KW] b:[OC]
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int pad);

Tensor relu(Graph& g, const Tensor& x);

// Non-padded pooling windows; max ties resolve to the first element in
// row-major scan order and receive the full gradient.
Tensor maxpool2d(Graph& g, const Tensor& x, int kernel, int stride);
Tensor avgpool2d(Graph& g, const Tensor& x, int kernel, int stride);

// [B, ...] -> [B, prod(...)]
Tensor flatten(Graph& g, const Tensor& x);

// Elementwise when shapes match; otherwise b of shape S broadcasts across
// the leading dimension of a of shape [B] + S (bias / universal-delta add).
Tensor add(Graph& g, const Tensor& a, const Tensor& b);

Tensor scale(Graph& g, const Tensor& x, float alpha);

Tensor clamp(Graph& g, const Tensor& x, float lo, float hi);

// Per-row max over classes != excluded[row]. logits:[B,C] -> [B]; the
// gradient flows only to the (first) argmax element of each row.
Tensor reduce_max_excluding(Graph& g, const Tensor& logits, std::span<const int> excluded);

Tensor reduce_mean(Graph& g, const Tensor& x); // -> scalar
Tensor reduce_sum(Graph& g, const Tensor& x);  // -> scalar

// Per-row softmax cross-entropy against integer targets. [B,C] -> [B]
Tensor softmax_cross_entropy(Graph& g, const Tensor& logits, std::span<const int> targets);

// --- non-graph helpers ---

// Index of the row maximum, ties to the lowest index.
int argmax(const float* row, int n);

// Row-wise softmax of a [B,C] tensor (numerically stable).
std::vector<float> softmax_rows(const Tensor& logits);

} // namespace dtuap::ops

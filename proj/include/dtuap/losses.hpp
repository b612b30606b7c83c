#pragma once

#include <span>

#include "dtuap/graph.hpp"
#include "dtuap/tensor.hpp"

// The DTA loss pieces. L_t drives the targeted half of the batch from its
// clean prediction into the sink class, clamped so that already-converted
// samples stop contributing gradient; L_nt anchors the non-targeted half to
// its clean predictions via cross-entropy.
//
//   L   = L_t + alpha * L_nt,   L_t = L_t1 + L_t2
//   L_t1 = mean  max( z_p - max_{i != p} z_i , 0 )
//   L_t2 = mean  max( max_{i != sink} z_i - z_sink , -D )
//   L_nt = mean  cross_entropy(z, one_hot(clean prediction))
//
// clean_pred is the victim's argmax on the *clean* sample, computed once
// before crafting and frozen; it is never recomputed from perturbed inputs.

namespace dtuap::losses {

// Rows already dethroned (z_p no longer the running max) sit in the clamp
// at 0 and get zero gradient.
Tensor loss_t1(Graph& g, const Tensor& logits, std::span<const int> clean_pred);

// Rows whose sink logit dominates by more than D sit at the -D floor and
// get zero gradient.
Tensor loss_t2(Graph& g, const Tensor& logits, int sink, float dominance);

Tensor loss_nt(Graph& g, const Tensor& logits, std::span<const int> clean_pred);

// Cross-entropy variant of L_t (ablation only): L_t1^CE pushes the clean
// class down via negative cross-entropy, L_t2^CE pulls the sink class up.
Tensor loss_t1_ce(Graph& g, const Tensor& logits, std::span<const int> clean_pred);
Tensor loss_t2_ce(Graph& g, const Tensor& logits, int sink);

} // namespace dtuap::losses

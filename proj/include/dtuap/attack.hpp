#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtuap/dataset.hpp"
#include "dtuap/model.hpp"
#include "dtuap/split.hpp"
#include "dtuap/tensor.hpp"

namespace dtuap {

enum class Norm { linf, l2 };

// How the perturbation is put back into the epsilon ball after each step.
// `clip` is the Euclidean projection for l-inf (and rescale-on-violation
// for l2); `rescale_always` is the literal delta <- delta/||delta|| * eps
// update, kept for fidelity experiments.
enum class Projection { clip, rescale_always };

enum class LossConfig {
    lt_lnt,   // L_t1 + L_t2 + alpha * L_nt (default)
    ltce_lnt, // cross-entropy variant of L_t, plus alpha * L_nt
    lt_only,  // L_t1 + L_t2, non-targeted half ignored
    lt1_lnt,  // drop the sink-logit term
    lt2_lnt,  // drop the clean-logit term
};

std::string to_string(Norm n);
std::string to_string(Projection p);
std::string to_string(LossConfig c);
Norm norm_from_string(const std::string& s);
Projection projection_from_string(const std::string& s);
LossConfig loss_config_from_string(const std::string& s);

struct AdamConfig {
    float lr = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Circular patch region; row/col centre in pixels, radius in pixels.
struct CircleMask {
    int center_y = 0;
    int center_x = 0;
    float radius = 0.0f;
};

struct AttackSpec {
    std::vector<int> sources; // one class for plain DTA, several for Multi2One
    int sink = -1;
    Norm norm = Norm::linf;
    float eps = 15.0f / 255.0f;
    float alpha = 1.0f;
    float dominance = 5.0f;
    int iters = 500;
    int batch = 64; // m; half targeted, half non-targeted
    AdamConfig adam;
    Projection projection = Projection::clip;
    LossConfig loss = LossConfig::lt_lnt;
    std::uint64_t seed = 1;
    std::optional<CircleMask> patch; // engages patch mode: mask + [0,1] range, no eps ball

    void validate(int classes) const;
};

struct CraftLogRow {
    int iter;
    float loss, loss_t1, loss_t2, loss_nt;
    float delta_norm; // in the spec's norm, measured after projection
};

struct Perturbation {
    Tensor delta;               // [C, H, W]
    Tensor mask;                // [H, W] of {0,1}; defined only in patch mode
    AttackSpec spec;            // snapshot
    std::string model_id;
    std::string dataset_id;
    std::vector<CraftLogRow> log;
    std::optional<double> kappa_t, kappa_nt; // filled in once evaluated
    bool sampled_with_replacement = false;   // a pool was smaller than m/2
};

// Projects delta back into the eps ball in place (additive mode).
void project(Tensor& delta, Norm norm, float eps, Projection mode);

float delta_norm(const Tensor& delta, Norm norm);

// Binary circle on the [H,W] grid; throws if the circle has zero area or
// leaves the image.
Tensor make_circle_mask(const std::vector<int>& input_shape, const CircleMask& mask);

struct CraftHooks {
    // Invoked after every projection with the live delta.
    std::function<void(const CraftLogRow& row, const Tensor& delta)> on_iteration;
};

// One crafting step's loss, assembled from the two batch halves:
// L = L_t + alpha * L_nt with L_t = L_t1 + L_t2 on the targeted half and
// L_nt on the non-targeted half. Components are kept for logging.
struct LossBundle {
    Tensor total;
    float t1 = 0.0f, t2 = 0.0f, nt = 0.0f;
};

// Both halves are forwarded through clamp(x + delta, 0, 1). clean_pred_t /
// clean_pred_nt are the victim's frozen clean predictions for the halves.
LossBundle loss_total(Graph& g, const Classifier& victim, const Tensor& x_t,
                      std::span<const int> clean_pred_t, const Tensor& x_nt,
                      std::span<const int> clean_pred_nt, const Tensor& delta,
                      const AttackSpec& spec);

// Algorithm: delta <- 0; for I iterations sample a half/half batch, forward
// clamp(x + delta, 0, 1) through the frozen victim, backprop the DTA loss,
// Adam-step delta, then project (or mask, in patch mode).
Perturbation craft(const Classifier& victim, const LabeledDataset& data, const ClassSplit& split,
                   const AttackSpec& spec, const CraftHooks& hooks = {});

// Multi2One: same loop; additionally requires every source class to have a
// non-empty correctly-classified pool. With one source class this is
// bit-identical to craft under the same seed.
Perturbation craft_multi2one(const Classifier& victim, const LabeledDataset& data,
                             const ClassSplit& split, const AttackSpec& spec,
                             const CraftHooks& hooks = {});

// DTAP file: magic "DTAP", u32 version=1 LE, length-prefixed JSON header
// (spec snapshot, shapes, ids, kappas), delta as raw f32 LE, then the mask
// as raw u8 when present.
void save_perturbation(const std::string& path, const Perturbation& p);
Perturbation load_perturbation(const std::string& path);

} // namespace dtuap

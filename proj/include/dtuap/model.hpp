#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dtuap/graph.hpp"
#include "dtuap/tensor.hpp"

namespace dtuap {

struct LabeledDataset;

// Per-channel statistics applied as a fixed (non-trainable) 1x1 convolution
// in front of the first layer, so the model consumes raw [0,1] pixels and
// adversarial perturbations live in pixel space.
struct Normalization {
    std::vector<float> mean;
    std::vector<float> std;
};

struct PredictResult {
    Tensor logits;           // [B, C]
    std::vector<int> labels; // row-wise argmax, ties to the lowest index
};

// Desk-scale differentiable classifiers: mlp-2, cnn-small (4 conv layers),
// cnn-resnetish (one residual block).
class Classifier {
public:
    Classifier() = default;

    // He-uniform weight init, zero biases, from the given seed.
    static Classifier build(const std::string& arch, std::vector<int> input_shape, int classes,
                            std::uint64_t seed, Normalization norm = {});

    static const std::vector<std::string>& known_archs();

    // Records the full forward pass (normalization included) on g.
    Tensor forward(Graph& g, const Tensor& images) const;

    PredictResult predict(const Tensor& images) const;

    const std::string& arch() const { return arch_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    int classes() const { return classes_; }
    const Normalization& normalization() const { return norm_; }

    std::vector<std::pair<std::string, Tensor>>& params() { return params_; }
    const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
    Tensor param(const std::string& name) const;

    // Toggles gradient tracking on the trainable parameters (the
    // normalization layer always stays frozen).
    void set_trainable(bool trainable);

    // Deep copy with gradient tracking off everywhere; gives crafting
    // sessions a private victim so parallel sessions never share mutable
    // autograd state.
    Classifier frozen_clone() const;

private:
    std::string arch_;
    std::vector<int> input_shape_; // [C, H, W]
    int classes_ = 0;
    Normalization norm_;
    std::vector<std::pair<std::string, Tensor>> params_;
};

struct TrainConfig {
    int epochs = 5;
    int batch = 64;
    float lr = 0.05f;
    float momentum = 0.9f;
    // step decay: lr *= decay every decay_every epochs
    float decay = 0.5f;
    int decay_every = 2;
    std::uint64_t seed = 1;
    bool hflip = false;
};

struct TrainEpoch {
    int epoch;
    float mean_loss;
    float val_accuracy;
    float lr;
};

struct TrainLog {
    std::vector<TrainEpoch> epochs;
    float final_val_accuracy = 0.0f;
};

// Mini-batch SGD with momentum and step-decayed learning rate on softmax
// cross-entropy. Aborts with NumericError if the loss goes non-finite.
TrainLog train(Classifier& model, const LabeledDataset& train_set,
               const LabeledDataset& val_set, const TrainConfig& cfg);

// Fraction of samples predicted correctly (batched forward, no grad).
double accuracy(const Classifier& model, const LabeledDataset& data);

} // namespace dtuap

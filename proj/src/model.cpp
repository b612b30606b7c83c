#include "dtuap/model.hpp"

#include <cmath>
#include <unordered_map>

#include "dtuap/dataset.hpp"
#include "dtuap/errors.hpp"
#include "dtuap/ops.hpp"
#include "dtuap/rng.hpp"

namespace dtuap {

namespace {

Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
    for (auto& v : t.values()) v = rng.uniform(-limit, limit);
    return t;
}

} // namespace

const std::vector<std::string>& Classifier::known_archs() {
    static const std::vector<std::string> archs = {"mlp-2", "cnn-small", "cnn-resnetish"};
    return archs;
}

Classifier Classifier::build(const std::string& arch, std::vector<int> input_shape, int classes,
                             std::uint64_t seed, Normalization norm) {
    if (input_shape.size() != 3)
        throw UsageError("build: input shape must be [channels, height, width]");
    for (int d : input_shape)
        if (d <= 0) throw UsageError("build: non-positive input dimension");
    if (classes < 2) throw UsageError("build: need at least 2 classes");

    const int in_c = input_shape[0], in_h = input_shape[1], in_w = input_shape[2];
    if (norm.mean.empty()) norm.mean.assign(static_cast<std::size_t>(in_c), 0.5f);
    if (norm.std.empty()) norm.std.assign(static_cast<std::size_t>(in_c), 0.5f);
    if (static_cast<int>(norm.mean.size()) != in_c || static_cast<int>(norm.std.size()) != in_c)
        throw UsageError("build: normalization constants must have one entry per channel");
    for (float s : norm.std)
        if (s <= 0.0f) throw UsageError("build: normalization std must be positive");

    Classifier m;
    m.arch_ = arch;
    m.input_shape_ = std::move(input_shape);
    m.classes_ = classes;
    m.norm_ = std::move(norm);

    Rng rng(seed);
    auto add = [&](const std::string& name, Tensor t) {
        m.params_.emplace_back(name, std::move(t));
    };

    // Normalization as a fixed diagonal 1x1 conv: y_c = (x_c - mean_c) / std_c.
    {
        Tensor w({in_c, in_c, 1, 1});
        Tensor b({in_c});
        for (int c = 0; c < in_c; ++c) {
            w.data()[c * in_c + c] = 1.0f / m.norm_.std[static_cast<std::size_t>(c)];
            b.data()[c] = -m.norm_.mean[static_cast<std::size_t>(c)] /
                          m.norm_.std[static_cast<std::size_t>(c)];
        }
        add("norm.w", std::move(w));
        add("norm.b", std::move(b));
    }

    auto conv_layer = [&](const std::string& name, int oc, int ic, int k) {
        add(name + ".w", he_uniform({oc, ic, k, k}, ic * k * k, rng));
        add(name + ".b", Tensor({oc}));
    };
    auto dense_layer = [&](const std::string& name, int out, int in) {
        add(name + ".w", he_uniform({out, in}, in, rng));
        add(name + ".b", Tensor({out}));
    };

    if (arch == "mlp-2") {
        const int d = in_c * in_h * in_w;
        dense_layer("fc1", 128, d);
        dense_layer("fc2", classes, 128);
    } else if (arch == "cnn-small") {
        if (in_h < 4 || in_w < 4)
            throw UsageError("build: cnn-small needs at least 4x4 inputs");
        conv_layer("conv1", 16, in_c, 3);
        conv_layer("conv2", 16, 16, 3);
        conv_layer("conv3", 32, 16, 3);
        conv_layer("conv4", 32, 32, 3);
        const int h2 = (in_h / 2) / 2, w2 = (in_w / 2) / 2;
        dense_layer("fc1", 128, 32 * h2 * w2);
        dense_layer("fc2", classes, 128);
    } else if (arch == "cnn-resnetish") {
        if (in_h < 4 || in_w < 4)
            throw UsageError("build: cnn-resnetish needs at least 4x4 inputs");
        conv_layer("stem", 16, in_c, 3);
        conv_layer("res1a", 16, 16, 3);
        conv_layer("res1b", 16, 16, 3);
        conv_layer("conv2", 32, 16, 3);
        const int h2 = (in_h / 2) / 2, w2 = (in_w / 2) / 2;
        dense_layer("fc", classes, 32 * h2 * w2);
    } else {
        throw UsageError("build: unknown architecture '" + arch + "'");
    }

    m.set_trainable(true);
    return m;
}

Tensor Classifier::param(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    throw Error("param: no parameter named '" + name + "'");
}

void Classifier::set_trainable(bool trainable) {
    for (auto& [name, t] : params_) {
        const bool is_norm = name.rfind("norm.", 0) == 0;
        t.set_requires_grad(trainable && !is_norm);
    }
}

Classifier Classifier::frozen_clone() const {
    Classifier m;
    m.arch_ = arch_;
    m.input_shape_ = input_shape_;
    m.classes_ = classes_;
    m.norm_ = norm_;
    m.params_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        Tensor copy = t.clone();
        copy.set_requires_grad(false);
        m.params_.emplace_back(name, std::move(copy));
    }
    return m;
}

Tensor Classifier::forward(Graph& g, const Tensor& images) const {
    if (images.rank() != 4 || images.dim(1) != input_shape_[0] ||
        images.dim(2) != input_shape_[1] || images.dim(3) != input_shape_[2])
        throw ShapeError("forward: images " + Tensor::shape_str(images.shape()) +
                         " do not match model input [B," + std::to_string(input_shape_[0]) + "," +
                         std::to_string(input_shape_[1]) + "," + std::to_string(input_shape_[2]) +
                         "]");

    auto p = [&](const char* name) { return param(name); };
    Tensor x = ops::conv2d(g, images, p("norm.w"), p("norm.b"), 1, 0);

    if (arch_ == "mlp-2") {
        x = ops::flatten(g, x);
        x = ops::relu(g, ops::dense(g, x, p("fc1.w"), p("fc1.b")));
        return ops::dense(g, x, p("fc2.w"), p("fc2.b"));
    }
    if (arch_ == "cnn-small") {
        x = ops::relu(g, ops::conv2d(g, x, p("conv1.w"), p("conv1.b"), 1, 1));
        x = ops::relu(g, ops::conv2d(g, x, p("conv2.w"), p("conv2.b"), 1, 1));
        x = ops::maxpool2d(g, x, 2, 2);
        x = ops::relu(g, ops::conv2d(g, x, p("conv3.w"), p("conv3.b"), 1, 1));
        x = ops::relu(g, ops::conv2d(g, x, p("conv4.w"), p("conv4.b"), 1, 1));
        x = ops::maxpool2d(g, x, 2, 2);
        x = ops::flatten(g, x);
        x = ops::relu(g, ops::dense(g, x, p("fc1.w"), p("fc1.b")));
        return ops::dense(g, x, p("fc2.w"), p("fc2.b"));
    }
    if (arch_ == "cnn-resnetish") {
        x = ops::relu(g, ops::conv2d(g, x, p("stem.w"), p("stem.b"), 1, 1));
        Tensor skip = x;
        x = ops::relu(g, ops::conv2d(g, x, p("res1a.w"), p("res1a.b"), 1, 1));
        x = ops::conv2d(g, x, p("res1b.w"), p("res1b.b"), 1, 1);
        x = ops::relu(g, ops::add(g, x, skip));
        x = ops::maxpool2d(g, x, 2, 2);
        x = ops::relu(g, ops::conv2d(g, x, p("conv2.w"), p("conv2.b"), 1, 1));
        x = ops::maxpool2d(g, x, 2, 2);
        x = ops::flatten(g, x);
        return ops::dense(g, x, p("fc.w"), p("fc.b"));
    }
    throw Error("forward: unknown architecture '" + arch_ + "'");
}

PredictResult Classifier::predict(const Tensor& images) const {
    Graph g(false);
    PredictResult res;
    res.logits = forward(g, images);
    const int batch = res.logits.dim(0);
    res.labels.resize(static_cast<std::size_t>(batch));
    for (int r = 0; r < batch; ++r)
        res.labels[static_cast<std::size_t>(r)] =
            ops::argmax(res.logits.data() + static_cast<std::size_t>(r) * classes_, classes_);
    return res;
}

double accuracy(const Classifier& model, const LabeledDataset& data) {
    const int n = data.size();
    if (n == 0) return 0.0;
    constexpr int kChunk = 256;
    int correct = 0;
    std::vector<int> positions;
    for (int start = 0; start < n; start += kChunk) {
        const int count = std::min(kChunk, n - start);
        positions.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) positions[static_cast<std::size_t>(i)] = start + i;
        const auto pred = model.predict(data.gather(positions));
        for (int i = 0; i < count; ++i)
            if (pred.labels[static_cast<std::size_t>(i)] ==
                data.labels[static_cast<std::size_t>(start + i)])
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

TrainLog train(Classifier& model, const LabeledDataset& train_set,
               const LabeledDataset& val_set, const TrainConfig& cfg) {
    if (train_set.classes != model.classes())
        throw UsageError("train: dataset has " + std::to_string(train_set.classes) +
                         " classes but model expects " + std::to_string(model.classes()));
    if (cfg.epochs < 0) throw UsageError("train: negative epoch count");
    if (cfg.batch < 1) throw UsageError("train: batch must be >= 1");

    model.set_trainable(true);
    TrainLog log;
    if (cfg.epochs == 0) {
        log.final_val_accuracy = static_cast<float>(accuracy(model, val_set));
        return log;
    }

    std::unordered_map<const TensorData*, std::vector<float>> velocity;
    Rng rng(cfg.seed);
    const int n = train_set.size();
    const int in_w = train_set.image_shape()[2];

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    float lr = cfg.lr;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch > 0 && cfg.decay_every > 0 && epoch % cfg.decay_every == 0) lr *= cfg.decay;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform_u32(static_cast<std::uint32_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch) {
            const int count = std::min(cfg.batch, n - start);
            std::vector<int> positions(order.begin() + start, order.begin() + start + count);
            Tensor batch = train_set.gather(positions);
            std::vector<int> targets(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i)
                targets[static_cast<std::size_t>(i)] =
                    train_set.labels[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])];

            if (cfg.hflip) {
                // mirror a random half of the batch along the width axis
                const auto& shape = batch.shape();
                const int chw = shape[1] * shape[2] * shape[3];
                for (int i = 0; i < count; ++i) {
                    if (rng.uniform01() >= 0.5f) continue;
                    float* img = batch.data() + static_cast<std::size_t>(i) * chw;
                    for (int c = 0; c < shape[1]; ++c)
                        for (int h = 0; h < shape[2]; ++h) {
                            float* row = img + (static_cast<std::size_t>(c) * shape[2] + h) * in_w;
                            for (int l = 0, r = in_w - 1; l < r; ++l, --r) std::swap(row[l], row[r]);
                        }
                }
            }

            Graph g;
            Tensor logits = model.forward(g, batch);
            Tensor loss = ops::reduce_mean(g, ops::softmax_cross_entropy(g, logits, targets));
            const float lval = loss.item();
            if (!std::isfinite(lval))
                throw NumericError("train: loss diverged (non-finite) at epoch " +
                                   std::to_string(epoch) + ", batch " + std::to_string(batches));
            loss_sum += lval;
            ++batches;
            g.backward(loss);

            for (auto& [name, t] : model.params()) {
                if (!t.requires_grad()) continue;
                auto& v = velocity[t.impl().get()];
                if (v.empty()) v.assign(t.values().size(), 0.0f);
                auto& grad = t.grad();
                for (std::size_t i = 0; i < v.size(); ++i) {
                    v[i] = cfg.momentum * v[i] - lr * grad[i];
                    t.values()[i] += v[i];
                }
                t.zero_grad();
            }
        }

        TrainEpoch row;
        row.epoch = epoch;
        row.mean_loss = static_cast<float>(loss_sum / std::max(1, batches));
        row.val_accuracy = static_cast<float>(accuracy(model, val_set));
        row.lr = lr;
        log.epochs.push_back(row);
    }
    log.final_val_accuracy = log.epochs.back().val_accuracy;
    return log;
}

} // namespace dtuap

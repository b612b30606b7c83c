#include "dtuap/losses.hpp"

#include <string>
#include <vector>

#include "dtuap/errors.hpp"
#include "dtuap/ops.hpp"

namespace dtuap::losses {

namespace {

void check_logits(const char* op, const Tensor& logits, std::size_t preds) {
    if (logits.rank() != 2)
        throw ShapeError(std::string(op) + ": logits must be [B,C], got " +
                         Tensor::shape_str(logits.shape()));
    if (logits.dim(1) < 2)
        throw ShapeError(std::string(op) + ": needs at least 2 classes, got " +
                         std::to_string(logits.dim(1)));
    if (preds != static_cast<std::size_t>(logits.dim(0)))
        throw ShapeError(std::string(op) + ": prediction count " + std::to_string(preds) +
                         " != batch " + std::to_string(logits.dim(0)));
}

} // namespace

Tensor loss_t1(Graph& g, const Tensor& logits, std::span<const int> clean_pred) {
    check_logits("loss_t1", logits, clean_pred.size());
    const int batch = logits.dim(0), classes = logits.dim(1);
    const float invb = 1.0f / static_cast<float>(batch);

    // per active row: +1/b at the clean class, -1/b at the runner-up argmax
    auto active = std::make_shared<std::vector<int>>();   // row indices above the clamp
    auto runner = std::make_shared<std::vector<int>>();   // their argmax over i != p
    auto preds = std::make_shared<std::vector<int>>(clean_pred.begin(), clean_pred.end());

    float acc = 0.0f;
    for (int r = 0; r < batch; ++r) {
        const int p = (*preds)[static_cast<std::size_t>(r)];
        if (p < 0 || p >= classes)
            throw ShapeError("loss_t1: clean prediction " + std::to_string(p) +
                             " out of range [0," + std::to_string(classes) + ")");
        const float* row = logits.data() + static_cast<std::size_t>(r) * classes;
        int best = -1;
        for (int i = 0; i < classes; ++i) {
            if (i == p) continue;
            if (best < 0 || row[i] > row[best]) best = i;
        }
        const float margin = row[p] - row[best];
        if (margin > 0.0f) {
            acc += margin;
            active->push_back(r);
            runner->push_back(best);
        }
    }

    Tensor y = Tensor::scalar(acc * invb);
    g.record("loss_t1", {logits}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(logits)) {
            const float go = ga[0] * invb;
            for (std::size_t k = 0; k < active->size(); ++k) {
                const int r = (*active)[k];
                gx[static_cast<std::size_t>(r) * classes + (*preds)[static_cast<std::size_t>(r)]] += go;
                gx[static_cast<std::size_t>(r) * classes + (*runner)[k]] -= go;
            }
        }
    });
    return y;
}

Tensor loss_t2(Graph& g, const Tensor& logits, int sink, float dominance) {
    check_logits("loss_t2", logits, static_cast<std::size_t>(logits.dim(0)));
    const int batch = logits.dim(0), classes = logits.dim(1);
    if (sink < 0 || sink >= classes)
        throw ShapeError("loss_t2: sink class " + std::to_string(sink) + " out of range [0," +
                         std::to_string(classes) + ")");
    const float invb = 1.0f / static_cast<float>(batch);

    auto active = std::make_shared<std::vector<int>>(); // rows above the -D floor
    auto rival = std::make_shared<std::vector<int>>();  // their argmax over i != sink

    float acc = 0.0f;
    for (int r = 0; r < batch; ++r) {
        const float* row = logits.data() + static_cast<std::size_t>(r) * classes;
        int best = -1;
        for (int i = 0; i < classes; ++i) {
            if (i == sink) continue;
            if (best < 0 || row[i] > row[best]) best = i;
        }
        const float gap = row[best] - row[sink];
        if (gap > -dominance) {
            acc += gap;
            active->push_back(r);
            rival->push_back(best);
        } else {
            acc += -dominance; // clamped row, no gradient
        }
    }

    Tensor y = Tensor::scalar(acc * invb);
    g.record("loss_t2", {logits}, y, [=](const std::vector<float>& ga, Adjoints& adj) mutable {
        if (float* gx = adj.sink(logits)) {
            const float go = ga[0] * invb;
            for (std::size_t k = 0; k < active->size(); ++k) {
                const int r = (*active)[k];
                gx[static_cast<std::size_t>(r) * classes + (*rival)[k]] += go;
                gx[static_cast<std::size_t>(r) * classes + sink] -= go;
            }
        }
    });
    return y;
}

Tensor loss_nt(Graph& g, const Tensor& logits, std::span<const int> clean_pred) {
    check_logits("loss_nt", logits, clean_pred.size());
    return ops::reduce_mean(g, ops::softmax_cross_entropy(g, logits, clean_pred));
}

Tensor loss_t1_ce(Graph& g, const Tensor& logits, std::span<const int> clean_pred) {
    check_logits("loss_t1_ce", logits, clean_pred.size());
    return ops::scale(g, ops::reduce_mean(g, ops::softmax_cross_entropy(g, logits, clean_pred)),
                      -1.0f);
}

Tensor loss_t2_ce(Graph& g, const Tensor& logits, int sink) {
    check_logits("loss_t2_ce", logits, static_cast<std::size_t>(logits.dim(0)));
    if (sink < 0 || sink >= logits.dim(1))
        throw ShapeError("loss_t2_ce: sink class out of range");
    const std::vector<int> sinks(static_cast<std::size_t>(logits.dim(0)), sink);
    return ops::reduce_mean(g, ops::softmax_cross_entropy(g, logits, sinks));
}

} // namespace dtuap::losses

#include "dtuap/graph.hpp"

#include <algorithm>

#include "dtuap/errors.hpp"

namespace dtuap {

float* Adjoints::sink(const Tensor& t) {
    const TensorData* td = t.impl().get();
    if (!td->requires_grad && !td->on_grad_path) return nullptr;
    auto it = buffers_.find(td);
    if (it == buffers_.end())
        it = buffers_.emplace(td, std::vector<float>(td->values.size(), 0.0f)).first;
    return it->second.data();
}

const std::vector<float>* Adjoints::find(const TensorData* td) const {
    auto it = buffers_.find(td);
    return it == buffers_.end() ? nullptr : &it->second;
}

void Graph::record(const char* op, const std::vector<Tensor>& inputs, Tensor& out,
                   BackwardFn fn) {
    if (!recording_) return;
    bool needed = false;
    for (const Tensor& in : inputs)
        needed = needed || in.impl()->requires_grad || in.impl()->on_grad_path;
    if (!needed) return; // constant subgraph, nothing to differentiate

    TensorData* od = out.impl().get();
    od->graph = this;
    od->producer = static_cast<int>(nodes_.size());
    od->on_grad_path = true;

    Node node;
    node.op = op;
    node.inputs.reserve(inputs.size());
    for (const Tensor& in : inputs) node.inputs.push_back(in.impl());
    node.output = out.impl();
    node.fn = std::move(fn);
    nodes_.push_back(std::move(node));
}

void Graph::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ShapeError("backward: loss must be a defined scalar tensor");
    TensorData* ld = loss.impl().get();

    if (ld->graph != this || ld->producer < 0) {
        // A requires_grad leaf is its own derivative; anything else is a
        // tensor detached from this tape.
        if (ld->requires_grad && ld->producer < 0) {
            if (ld->grad.empty()) ld->grad.assign(ld->values.size(), 0.0f);
            ld->grad[0] += 1.0f;
            return;
        }
        throw Error("backward: loss is not recorded on this graph (detached)");
    }

    // Reachable = ancestors of the loss node, pruned at tensors that cannot
    // lead to a requires_grad leaf.
    std::vector<char> reachable(nodes_.size(), 0);
    std::vector<int> stack{ld->producer};
    reachable[static_cast<std::size_t>(ld->producer)] = 1;
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        for (const auto& in : nodes_[static_cast<std::size_t>(ni)].inputs) {
            if (in->graph != this || in->producer < 0) continue;
            if (!in->requires_grad && !in->on_grad_path) continue;
            if (!reachable[static_cast<std::size_t>(in->producer)]) {
                reachable[static_cast<std::size_t>(in->producer)] = 1;
                stack.push_back(in->producer);
            }
        }
    }

    Adjoints adj;
    adj.buffers_.emplace(ld, std::vector<float>{1.0f});

    for (int ni = ld->producer; ni >= 0; --ni) {
        if (!reachable[static_cast<std::size_t>(ni)]) continue;
        Node& node = nodes_[static_cast<std::size_t>(ni)];
        const std::vector<float>* out_adj = adj.find(node.output.get());
        if (!out_adj) continue; // reachable but received no sensitivity
        node.fn(*out_adj, adj);
    }

    // Fold buffers into the persistent accumulators of the leaves.
    for (auto& [td, buf] : adj.buffers_) {
        if (!td->requires_grad) continue;
        auto* mtd = const_cast<TensorData*>(td);
        if (mtd->grad.empty()) mtd->grad.assign(mtd->values.size(), 0.0f);
        for (std::size_t i = 0; i < buf.size(); ++i) mtd->grad[i] += buf[i];
    }
}

} // namespace dtuap

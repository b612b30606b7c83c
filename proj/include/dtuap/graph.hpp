#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "dtuap/tensor.hpp"

namespace dtuap {

// Per-backward-pass adjoint buffers. Keyed by storage identity; leaf
// gradients are folded into Tensor::grad once the sweep finishes, so two
// backward passes without zero_grad() sum their contributions.
class Adjoints {
public:
    // Accumulation buffer for `t`, or nullptr if nothing upstream of `t`
    // needs a gradient (lets op adjoints skip dead branches, e.g. weight
    // gradients of a frozen victim).
    float* sink(const Tensor& t);
    const std::vector<float>* find(const TensorData* td) const;

private:
    friend class Graph;
    std::unordered_map<const TensorData*, std::vector<float>> buffers_;
};

// Reverse-mode tape. Operations append nodes in forward order; backward()
// seeds d(loss)/d(loss)=1 and replays the reachable nodes exactly once in
// reverse topological (= reverse recording) order.
class Graph {
public:
    // recording=false gives a cheap inference mode: ops still validate and
    // compute, but keep no tape, and backward() refuses to run.
    explicit Graph(bool recording = true) : recording_(recording) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const { return recording_; }
    std::size_t node_count() const { return nodes_.size(); }

    // fn receives the adjoint of the node output and accumulates into the
    // inputs via Adjoints::sink.
    using BackwardFn = std::function<void(const std::vector<float>& out_adj, Adjoints& adj)>;

    // Registers `out = op(inputs)` on the tape. Call after computing the
    // output values; no-op when not recording or when no input is connected
    // to a grad-requiring leaf.
    void record(const char* op, const std::vector<Tensor>& inputs, Tensor& out, BackwardFn fn);

    // Populates grad on every reachable requires_grad leaf with
    // d(loss)/d(leaf). loss must be scalar and produced by this graph.
    void backward(const Tensor& loss);

private:
    struct Node {
        const char* op;
        std::vector<std::shared_ptr<TensorData>> inputs;
        std::shared_ptr<TensorData> output;
        BackwardFn fn;
    };
    std::vector<Node> nodes_;
    bool recording_;
};

} // namespace dtuap

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dtuap {

class Graph;

// Dense row-major f32 storage with an additive gradient accumulator.
struct TensorData {
    std::vector<int> shape;
    std::vector<float> values;
    bool requires_grad = false;
    std::vector<float> grad; // empty until first accumulation; same size as values after

    // Autograd bookkeeping, written by the recording graph.
    Graph* graph = nullptr; // graph that produced this tensor (null for leaves)
    int producer = -1;      // node index within that graph
    bool on_grad_path = false;
};

// Shared-storage handle; copying a Tensor aliases the same buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, float fill = 0.0f, bool requires_grad = false);

    static Tensor from_values(std::vector<int> shape, std::vector<float> values,
                              bool requires_grad = false);
    static Tensor scalar(float v);

    bool defined() const { return impl_ != nullptr; }

    const std::vector<int>& shape() const { return impl_->shape; }
    std::int64_t numel() const { return static_cast<std::int64_t>(impl_->values.size()); }
    int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }

    float* data() { return impl_->values.data(); }
    const float* data() const { return impl_->values.data(); }
    std::vector<float>& values() { return impl_->values; }
    const std::vector<float>& values() const { return impl_->values; }

    float item() const; // scalar tensors only

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool v) { impl_->requires_grad = v; }

    bool has_grad() const { return !impl_->grad.empty(); }
    // Allocates a zero accumulator on first use.
    std::vector<float>& grad();
    const std::vector<float>& grad() const;
    void zero_grad();

    // Deep copy of values (no graph history, no grad).
    Tensor clone() const;

    std::shared_ptr<TensorData> impl() const { return impl_; }

    static std::int64_t shape_numel(const std::vector<int>& shape);
    static std::string shape_str(const std::vector<int>& shape);

private:
    std::shared_ptr<TensorData> impl_;
};

} // namespace dtuap

#include "dtuap/tensor.hpp"

#include <sstream>

#include "dtuap/errors.hpp"

namespace dtuap {

Tensor::Tensor(std::vector<int> shape, float fill, bool requires_grad)
    : impl_(std::make_shared<TensorData>()) {
    const std::int64_t n = shape_numel(shape);
    impl_->shape = std::move(shape);
    impl_->values.assign(static_cast<std::size_t>(n), fill);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<float> values,
                           bool requires_grad) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
        throw ShapeError("tensor: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_str(shape));
    Tensor t;
    t.impl_ = std::make_shared<TensorData>();
    t.impl_->shape = std::move(shape);
    t.impl_->values = std::move(values);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(float v) { return from_values({1}, {v}); }

float Tensor::item() const {
    if (numel() != 1)
        throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not scalar");
    return impl_->values[0];
}

std::vector<float>& Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0f);
    return impl_->grad;
}

const std::vector<float>& Tensor::grad() const {
    if (impl_->grad.empty())
        throw Error("grad: no gradient accumulated for this tensor");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0f);
}

Tensor Tensor::clone() const {
    return from_values(impl_->shape, impl_->values, impl_->requires_grad);
}

std::int64_t Tensor::shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

} // namespace dtuap

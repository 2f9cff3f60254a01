#include "scs/tensor.hpp"

#include <sstream>

#include "scs/tape.hpp"

namespace scs {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor() : Tensor(Shape{0}) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : impl_(std::make_shared<TensorImpl<T>>()) {
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + to_string(shape));
  }
  impl_->data.assign(static_cast<std::size_t>(numel(shape)), fill);
  impl_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : impl_(std::make_shared<TensorImpl<T>>()) {
  if (static_cast<std::int64_t>(data.size()) != numel(shape)) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                     to_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value) {
  return Tensor(Shape{}, std::vector<T>{value});
}

template <typename T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape()));
  }
  return impl_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (impl_->tape != nullptr || impl_->pins > 0) {
    throw AutodiffError("tensor " + to_string(shape()) + " is recorded on a live tape and is immutable");
  }
  return impl_->data;
}

template <typename T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw ShapeError("item() requires a single-element tensor, got " + to_string(shape()));
  }
  return impl_->data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    throw ShapeError("index rank does not match shape " + to_string(shape()));
  }
  std::int64_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    const auto d = impl_->shape[axis++];
    if (i < 0 || i >= d) throw std::out_of_range("tensor index out of range");
    flat = flat * d + i;
  }
  return impl_->data[static_cast<std::size_t>(flat)];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool value) {
  if (impl_->tape != nullptr) throw AutodiffError("cannot change requires_grad of a recorded tensor");
  impl_->requires_grad = value;
  return *this;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!impl_->has_grad()) throw AutodiffError("tensor " + to_string(shape()) + " has no gradient");
  return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  impl_->ensure_grad();
  std::fill(impl_->grad.begin(), impl_->grad.end(), T{0});
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  impl_->ensure_grad();
  return impl_->grad;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(impl_->shape, impl_->data);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace scs

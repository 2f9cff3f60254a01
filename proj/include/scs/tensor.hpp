#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scs {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised when operand shapes are incompatible. The message names every
/// offending shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Misuse of the autodiff machinery (backward on a non-scalar, double
/// backward, mutation of a recorded tensor).
class AutodiffError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename T>
class Tape;

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until backward reaches this tensor
  bool requires_grad = false;
  // Set when the tensor is the output of a node on a tape.
  const Tape<T>* tape = nullptr;
  std::int64_t tape_id = -1;
  // Number of live tape nodes holding this tensor as an input.
  int pins = 0;

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T{0});
  }
};

/// Shared handle to an n-dimensional, row-major array. Copies alias the same
/// storage; use clone() or detach() for an independent copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T value);

  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  // Negative axes count from the end.
  std::int64_t dim(int axis) const;
  std::int64_t size() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<const T> data() const { return impl_->data; }
  /// Throws AutodiffError while the tensor is held by a live tape node.
  std::span<T> mutable_data();
  T item() const;
  T at(std::initializer_list<std::int64_t> index) const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  bool has_grad() const { return impl_->has_grad(); }
  std::span<const T> grad() const;
  /// Allocates the gradient buffer if needed and fills it with zeros.
  void zero_grad();
  /// Gradient buffer for direct writes (allocated on first use).
  std::span<T> mutable_grad();
  void clear_grad() { impl_->grad.clear(); }

  bool on_tape() const { return impl_->tape != nullptr; }
  std::int64_t tape_id() const { return impl_->tape_id; }

  /// Independent copy of the values with no graph history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  bool is_same(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

template <typename U, typename T>
Tensor<U> cast(const Tensor<T>& t) {
  std::vector<U> out(t.data().begin(), t.data().end());
  return Tensor<U>(t.shape(), std::move(out));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace scs

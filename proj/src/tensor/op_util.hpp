#pragma once

#include <string>
#include <vector>

#include "scs/tape.hpp"
#include "scs/tensor.hpp"

namespace scs::detail {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

inline int normalize_axis(int axis, int rank, const Shape& shape) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape));
  }
  return a;
}

/// Adds `values` into the gradient of `t` if it participates in the graph.
template <typename T>
inline T* grad_target(TensorImpl<T>* t) {
  if (!t->requires_grad) return nullptr;
  t->ensure_grad();
  return t->grad.data();
}

}  // namespace scs::detail

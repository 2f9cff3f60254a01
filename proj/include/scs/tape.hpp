#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scs/tensor.hpp"

namespace scs {

/// Ordered record of differentiable operations. Nodes are appended in
/// evaluation order, so walking the list backwards is a valid reverse
/// topological order.
///
/// Operations record onto the tape installed by the innermost TapeScope of
/// the matching scalar type. With no active tape, operations only compute
/// values.
template <typename T>
class Tape {
 public:
  using Adjoint = std::function<void(std::span<const T> out_grad)>;

  Tape() = default;
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Propagates d(loss)/d(x) to every tensor reachable from `loss`. A tape
  /// accepts one backward pass; call reset() before recording again.
  void backward(const Tensor<T>& loss);

  /// Drops every node and releases the pins on input tensors. Leaf gradients
  /// are left untouched.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  /// Op name of each node, in recording order.
  std::vector<std::string> op_names() const;

  void record(const char* op, std::vector<std::shared_ptr<TensorImpl<T>>> inputs,
              const Tensor<T>& output, Adjoint adjoint);

  static Tape* active();

 private:
  template <typename U>
  friend class TapeScope;

  struct Node {
    const char* op;
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    std::shared_ptr<TensorImpl<T>> output;
    Adjoint adjoint;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;

  static thread_local Tape* active_;
};

/// Installs a tape as the active recorder for the current thread; restores
/// the previous one on destruction.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : TapeScope(&tape) {}
  // nullptr suspends recording.
  explicit TapeScope(Tape<T>* tape) : previous_(Tape<T>::active_) { Tape<T>::active_ = tape; }
  ~TapeScope() { Tape<T>::active_ = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording for the current thread (inference, detached evaluation).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : scope_(static_cast<Tape<T>*>(nullptr)) {}

 private:
  TapeScope<T> scope_;
};

/// Returns the active tape if any of `inputs` needs a gradient.
template <typename T>
Tape<T>* recording_tape(std::initializer_list<const Tensor<T>*> inputs) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) return nullptr;
  for (const Tensor<T>* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace scs

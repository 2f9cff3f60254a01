#include "scs/tape.hpp"

namespace scs {

template <typename T>
thread_local Tape<T>* Tape<T>::active_ = nullptr;

template <typename T>
Tape<T>::~Tape() {
  reset();
}

template <typename T>
Tape<T>* Tape<T>::active() {
  return active_;
}

template <typename T>
void Tape<T>::record(const char* op, std::vector<std::shared_ptr<TensorImpl<T>>> inputs,
                     const Tensor<T>& output, Adjoint adjoint) {
  if (consumed_) throw AutodiffError("tape already ran backward; reset() before recording");
  const auto& out = output.impl();
  if (out->tape != nullptr) throw AutodiffError(std::string("output of '") + op + "' is already recorded");
  for (auto& in : inputs) ++in->pins;
  out->tape = this;
  out->tape_id = static_cast<std::int64_t>(nodes_.size());
  out->requires_grad = true;
  nodes_.push_back(Node{op, std::move(inputs), out, std::move(adjoint)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (consumed_) throw AutodiffError("backward already ran on this tape; call reset() first");
  if (loss.size() != 1) throw AutodiffError("backward requires a scalar loss, got shape " + to_string(loss.shape()));
  if (loss.impl()->tape != this) throw AutodiffError("loss is not recorded on this tape");
  consumed_ = true;
  auto& seed = loss.impl();
  seed->ensure_grad();
  seed->grad[0] += T{1};
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output->has_grad()) continue;
    it->adjoint(it->output->grad);
  }
}

template <typename T>
void Tape<T>::reset() {
  for (auto& node : nodes_) {
    for (auto& in : node.inputs) --in->pins;
    node.output->tape = nullptr;
    node.output->tape_id = -1;
    node.output->requires_grad = false;
  }
  nodes_.clear();
  consumed_ = false;
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(nodes_.size());
  for (const auto& n : nodes_) names.emplace_back(n.op);
  return names;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace scs

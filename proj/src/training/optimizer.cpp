#include <cmath>

#include "scs/training.hpp"

namespace scs::training {

template <typename T>
void AdamW<T>::step(ParamStore<T>& store, const std::vector<std::string>& names) {
  const double b1 = config_.beta1, b2 = config_.beta2;
  for (const auto& name : names) {
    Tensor<T>& p = store.get(name);
    if (!p.has_grad()) throw AutodiffError("optimizer: parameter '" + name + "' has no gradient");
    Slot& s = slots_[name];
    const auto n = static_cast<std::size_t>(p.size());
    if (s.m.empty()) {
      s.m.assign(n, T{0});
      s.v.assign(n, T{0});
    }
    ++s.steps;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.steps));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.steps));
    const auto g = p.grad();
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double m = b1 * s.m[i] + (1.0 - b1) * gi;
      const double v = b2 * s.v[i] + (1.0 - b2) * gi * gi;
      s.m[i] = static_cast<T>(m);
      s.v[i] = static_cast<T>(v);
      const double update = (m / c1) / (std::sqrt(v / c2) + config_.eps) + config_.weight_decay * w[i];
      w[i] = static_cast<T>(w[i] - config_.lr * update);
    }
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace scs::training

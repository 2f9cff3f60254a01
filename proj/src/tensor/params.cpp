#include "scs/params.hpp"

#include <cmath>
#include <stdexcept>

namespace scs {

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Shape shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  Tensor<T> t(std::move(shape));
  t.set_requires_grad(true);
  index_[name] = entries_.size();
  entries_.push_back({name, t});
  return t;
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

template <typename T>
Tensor<T>& ParamStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return entries_[it->second].tensor;
}

template <typename T>
std::vector<std::string> ParamStore<T>::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::with_prefix(const std::string& prefix) const {
  std::vector<Tensor<T>> out;
  for (const auto& e : entries_) {
    if (e.name.rfind(prefix, 0) == 0) out.push_back(e.tensor);
  }
  return out;
}

template <typename T>
std::int64_t ParamStore<T>::param_count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.name.rfind(prefix, 0) == 0) n += e.tensor.size();
  }
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

template <typename T>
void ParamStore<T>::clear_grad() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

template <typename T>
void kaiming_uniform(Tensor<T>& t, std::int64_t fan_in, Rng& rng, double slope) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  for (T& v : t.mutable_data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename To, typename From>
void copy_values(ParamStore<To>& dst, const ParamStore<From>& src) {
  for (const auto& e : src.entries()) {
    Tensor<To>& d = dst.get(e.name);
    if (d.shape() != e.tensor.shape()) {
      throw ShapeError("parameter '" + e.name + "' has shape " + to_string(d.shape()) + " vs " +
                       to_string(e.tensor.shape()));
    }
    auto out = d.mutable_data();
    const auto in = e.tensor.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(in[i]);
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template void kaiming_uniform(Tensor<float>&, std::int64_t, Rng&, double);
template void kaiming_uniform(Tensor<double>&, std::int64_t, Rng&, double);
template void copy_values(ParamStore<double>&, const ParamStore<float>&);
template void copy_values(ParamStore<float>&, const ParamStore<double>&);
template void copy_values(ParamStore<float>&, const ParamStore<float>&);
template void copy_values(ParamStore<double>&, const ParamStore<double>&);

}  // namespace scs

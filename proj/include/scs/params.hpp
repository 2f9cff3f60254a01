#pragma once

#include <map>
#include <string>
#include <vector>

#include "scs/rng.hpp"
#include "scs/tensor.hpp"

namespace scs {

/// Flat, insertion-ordered map from parameter name to trainable tensor.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
  };

  /// Registers a zero-filled trainable tensor. Names must be unique.
  Tensor<T> add(const std::string& name, Shape shape);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> names() const;
  /// Tensors whose names start with `prefix`, in registration order.
  std::vector<Tensor<T>> with_prefix(const std::string& prefix) const;

  /// Total number of scalar parameters, optionally restricted to a prefix.
  std::int64_t param_count(const std::string& prefix = "") const;

  void zero_grad();
  void clear_grad();

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Kaiming-uniform fill scaled for fan-in, gain matched to a leaky
/// rectifier with the given slope.
template <typename T>
void kaiming_uniform(Tensor<T>& t, std::int64_t fan_in, Rng& rng, double slope = 0.2);

/// Copies values between stores that share names and shapes (e.g. float
/// training weights into a double gradient-check model).
template <typename To, typename From>
void copy_values(ParamStore<To>& dst, const ParamStore<From>& src);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace scs

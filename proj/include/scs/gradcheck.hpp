#pragma once

// Central finite-difference gradient checking. The numeric side evaluates
// the function only through forward passes with recording disabled, so it
// shares no code path with the adjoints it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scs/ops.hpp"
#include "scs/rng.hpp"

namespace scs::gradcheck {


using Fn = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Projects a (possibly non-scalar) output onto fixed random weights so every
// output element contributes to the checked scalar.
inline Tensor<double> projection_weights(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(numel(shape)));
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return Tensor<double>(shape, std::move(w));
}

inline double projected(const Tensor<double>& out, const Tensor<double>& w) {
  double s = 0.0;
  for (std::int64_t i = 0; i < out.size(); ++i) s += out.data()[i] * w.data()[i];
  return s;
}

/// Relative error of a tensor gradient: max |analytic - numeric| divided by
/// the larger of the two infinity norms.
inline GradCheckResult check_gradients(const Fn& f, std::vector<Tensor<double>> inputs, double eps = 1e-5,
                                       std::uint64_t seed = 7) {
  Shape out_shape;
  {
    NoGradScope<double> ng;
    out_shape = f(inputs).shape();
  }
  const Tensor<double> w = projection_weights(out_shape, seed);

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    for (auto& t : inputs) {
      t.clear_grad();
      t.set_requires_grad(true);
    }
    auto out = f(inputs);
    auto loss = sum(mul(out, w));
    tape.backward(loss);
    for (auto& t : inputs) {
      if (t.has_grad()) {
        analytic.emplace_back(t.grad().begin(), t.grad().end());
      } else {
        analytic.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
      }
    }
  }

  GradCheckResult result;
  NoGradScope<double> ng;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_data();
    std::vector<double> numeric(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + eps;
      const double up = projected(f(inputs), w);
      values[i] = orig - eps;
      const double down = projected(f(inputs), w);
      values[i] = orig;
      numeric[i] = (up - down) / (2.0 * eps);
    }
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff = std::max(diff, std::abs(numeric[i] - analytic[k][i]));
      scale = std::max({scale, std::abs(numeric[i]), std::abs(analytic[k][i])});
    }
    result.max_abs_error = std::max(result.max_abs_error, diff);
    if (scale > 0.0) result.max_rel_error = std::max(result.max_rel_error, diff / scale);
  }
  return result;
}

inline Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor<double>(shape, std::move(v));
}


/// One named check: builds random inputs from `shapes` and compares the
/// adjoints of `fn` with central differences.
struct Case {
  std::string name;
  std::vector<Shape> shapes;
  Fn fn;
  double tolerance = 1e-6;
  double lo = -1.0;
  double hi = 1.0;
};

/// Every differentiable primitive of the tensor engine.
std::vector<Case> primitive_cases();

/// A primitive whose adjoint is deliberately wrong (negative control).
Case corrupted_case();

/// Tiny generator plus full training loss in the given mode ("auto" or
/// "ref"), checked on 30 sampled generator parameters. Returns the relative
/// error as defined above. The network has thousands of leaky-ReLU and |x|
/// kinks, so each numeric derivative uses the largest step in
/// {1e-5, 1e-6, 1e-7} whose estimate agrees with the next smaller step
/// (falling back to 1e-7); a step that straddles a kink disagrees with its
/// successor. The choice never looks at the analytic gradient.
GradCheckResult end_to_end_check(bool reference_mode, std::uint64_t seed);

struct Row {
  std::string name;
  double tolerance = 0;
  double worst_rel_error = 0;
  std::uint64_t worst_seed = 0;
  int seeds = 0;
  bool passed = false;
};

/// Runs every case over `seeds` consecutive seeds starting at `base_seed`;
/// when `include_end_to_end` is set, appends the two end-to-end rows
/// (tolerance 1e-4).
std::vector<Row> run_suite(const std::vector<Case>& cases, int seeds, std::uint64_t base_seed,
                           bool include_end_to_end);

/// Fixed-width table: name, tolerance, worst relative error, worst seed,
/// PASS/FAIL.
std::string format_table(const std::vector<Row>& rows);

}  // namespace scs::gradcheck

#include "scs/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "scs/model.hpp"
#include "scs/training.hpp"

namespace scs::gradcheck {

std::vector<Case> primitive_cases() {
  using V = const std::vector<Tensor<double>>&;
  return {
      {"add", {{2, 3}, {2, 3}}, [](V in) { return add(in[0], in[1]); }},
      {"add_broadcast", {{2, 3, 4}, {3, 1}}, [](V in) { return add(in[0], in[1]); }},
      {"sub", {{4, 3}, {4, 3}}, [](V in) { return sub(in[0], in[1]); }},
      {"sub_scalar_broadcast", {{4, 3}, {}}, [](V in) { return sub(in[0], in[1]); }},
      {"mul", {{3, 5}, {3, 5}}, [](V in) { return mul(in[0], in[1]); }},
      {"mul_broadcast", {{2, 3, 2}, {1, 3, 1}}, [](V in) { return mul(in[0], in[1]); }},
      {"scale", {{5}}, [](V in) { return scale(in[0], -1.5); }},
      {"add_scalar", {{5}}, [](V in) { return add_scalar(in[0], 0.25); }},
      {"sigmoid", {{3, 4}}, [](V in) { return sigmoid(in[0]); }, 1e-6, -3, 3},
      {"leaky_relu", {{3, 4}}, [](V in) { return leaky_relu(in[0], 0.2); }},
      {"map_unary_tanh",
       {{3, 4}},
       [](V in) {
         return map_unary<double>(
             in[0], "tanh", [](double x) { return std::tanh(x); },
             [](double x) { return 1 - std::tanh(x) * std::tanh(x); });
       }},
      {"abs", {{3, 4}}, [](V in) { return abs(in[0]); }},
      {"abs_mean", {{3, 4}}, [](V in) { return abs_mean(in[0]); }},
      {"sum", {{3, 4}}, [](V in) { return sum(in[0]); }},
      {"reduce_mean", {{3, 4}}, [](V in) { return reduce_mean(in[0]); }},
      {"reduce_mean_axis", {{3, 4, 2}}, [](V in) { return reduce_mean(in[0], 1); }},
      {"concat_channels", {{1, 2, 3, 3}, {1, 3, 3, 3}}, [](V in) { return concat_channels(in[0], in[1]); }},
      {"concat_batch", {{1, 2, 2, 3}, {2, 2, 2, 3}}, [](V in) { return concat<double>({in[0], in[1]}, 0); }},
      {"slice", {{2, 5, 3}}, [](V in) { return slice(in[0], 1, 1, 4); }},
      {"reshape", {{2, 6}}, [](V in) { return reshape(in[0], Shape{3, 4}); }},
      {"permute", {{2, 3, 4}}, [](V in) { return permute(in[0], {2, 0, 1}); }},
      {"matmul", {{2, 3, 4}, {2, 4, 5}}, [](V in) { return matmul(in[0], in[1]); }},
      {"matmul_shared", {{2, 3, 4}, {4, 2}}, [](V in) { return matmul(in[0], in[1]); }},
      {"conv2d_3x3", {{2, 3, 5, 6}, {4, 3, 3, 3}, {4}}, [](V in) { return conv2d(in[0], in[1], in[2], 1, 1); }},
      {"conv2d_stride2", {{1, 2, 7, 6}, {3, 2, 3, 3}, {3}}, [](V in) { return conv2d(in[0], in[1], in[2], 2, 1); }},
      {"conv2d_1x1", {{2, 3, 4, 4}, {5, 3, 1, 1}, {5}}, [](V in) { return conv2d(in[0], in[1], in[2], 1, 0); }},
      {"linear", {{2, 3, 6}, {4, 6}, {4}}, [](V in) { return linear(in[0], in[1], in[2]); }},
      {"softmax_last", {{2, 3, 5}}, [](V in) { return softmax(in[0], -1); }, 1e-6, -3, 3},
      {"softmax_middle", {{2, 4, 3}}, [](V in) { return softmax(in[0], 1); }, 1e-6, -3, 3},
      {"bilinear_up", {{1, 2, 3, 4}}, [](V in) { return bilinear_resize_corner_aligned(in[0], 7, 9); }},
      {"bilinear_down", {{1, 2, 6, 7}}, [](V in) { return bilinear_resize_corner_aligned(in[0], 4, 3); }},
      {"avg_pool2d", {{1, 2, 4, 6}}, [](V in) { return avg_pool2d(in[0], 2); }},
  };
}

Case corrupted_case() {
  // d/dx x^3 reported as 2x^2.
  return {"corrupted_cube",
          {{4, 3}},
          [](const std::vector<Tensor<double>>& in) {
            return map_unary<double>(
                in[0], "corrupted_cube", [](double x) { return x * x * x; }, [](double x) { return 2 * x * x; });
          },
          1e-6, 0.5, 1.5};
}

GradCheckResult end_to_end_check(bool reference_mode, std::uint64_t seed) {
  model::ScsNetConfig cfg;
  cfg.base_channels = 8;
  cfg.deep_channels = 16;
  cfg.pyramid_levels = 2;
  cfg.sr_blocks = 1;
  cfg.cpm_hidden = 8;
  cfg.input_height = cfg.input_width = 8;
  cfg.disc_base = 4;
  const model::Mode mode = reference_mode ? model::Mode::kRef : model::Mode::kAuto;

  model::ScsNet<double> net(cfg, derive_seed(seed, 1));
  net.params().get("g.dec.attn.gamma").mutable_data()[0] = 0.3;
  training::SurrogateFeatureNet<double> surrogate(derive_seed(seed, 2));
  Rng rng(derive_seed(seed, 3));
  const auto src = random_tensor({1, 1, 8, 8}, rng, 0, 1);
  const std::optional<Tensor<double>> ref = random_tensor({1, 3, 8, 8}, rng);
  const auto target = random_tensor({1, 3, 16, 16}, rng);
  const training::LossWeights weights;
  auto objective = [&] {
    const auto fake = net.generator().forward(src, ref, mode, 2.0);
    const auto adv = training::adversarial_losses(net.discriminator()(target), net.discriminator()(fake));
    return training::total_loss(training::content_loss(fake, target),
                                training::perceptual_loss(fake, target, surrogate, weights.layers).total, adv.generator,
                                weights)
        .total;
  };

  const auto names = net.generator_param_names(mode);
  std::vector<std::pair<std::string, std::int64_t>> picks;
  for (int i = 0; i < 30; ++i) {
    const auto& name = names[rng.below(names.size())];
    picks.emplace_back(name, static_cast<std::int64_t>(rng.below(net.params().get(name).size())));
  }
  std::vector<double> analytic;
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    tape.backward(objective());
    for (const auto& [name, idx] : picks) analytic.push_back(net.params().get(name).grad()[idx]);
  }
  NoGradScope<double> ng;
  double diff = 0, scale_ = 0;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    auto values = net.params().get(picks[k].first).mutable_data();
    const double orig = values[picks[k].second];
    auto central = [&](double eps) {
      values[picks[k].second] = orig + eps;
      const double up = objective().item();
      values[picks[k].second] = orig - eps;
      const double down = objective().item();
      values[picks[k].second] = orig;
      return (up - down) / (2 * eps);
    };
    const double estimates[3] = {central(1e-5), central(1e-6), central(1e-7)};
    double numeric = estimates[2];
    for (int i = 0; i < 2; ++i) {
      const double a = estimates[i], b = estimates[i + 1];
      if (std::abs(a - b) <= 1e-7 * std::max({1.0, std::abs(a), std::abs(b)})) {
        numeric = a;
        break;
      }
    }
    diff = std::max(diff, std::abs(numeric - analytic[k]));
    scale_ = std::max({scale_, std::abs(numeric), std::abs(analytic[k])});
  }
  return {scale_ > 0 ? diff / scale_ : 0.0, diff};
}

std::vector<Row> run_suite(const std::vector<Case>& cases, int seeds, std::uint64_t base_seed,
                           bool include_end_to_end) {
  std::vector<Row> rows;
  for (const auto& c : cases) {
    Row row{c.name, c.tolerance, 0.0, base_seed, seeds, true};
    for (int s = 0; s < seeds; ++s) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
      Rng rng(derive_seed(seed, 17));
      std::vector<Tensor<double>> inputs;
      for (const auto& shape : c.shapes) inputs.push_back(random_tensor(shape, rng, c.lo, c.hi));
      const double err = check_gradients(c.fn, inputs, 1e-5, seed).max_rel_error;
      if (err > row.worst_rel_error || s == 0) {
        row.worst_rel_error = err;
        row.worst_seed = seed;
      }
    }
    row.passed = row.worst_rel_error < row.tolerance;
    rows.push_back(row);
  }
  if (include_end_to_end) {
    for (bool ref : {false, true}) {
      Row row{ref ? "end_to_end_ref" : "end_to_end_auto", 1e-4, 0.0, base_seed, seeds, true};
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
        const double err = end_to_end_check(ref, seed).max_rel_error;
        if (err > row.worst_rel_error || s == 0) {
          row.worst_rel_error = err;
          row.worst_seed = seed;
        }
      }
      row.passed = row.worst_rel_error < row.tolerance;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_table(const std::vector<Row>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-22s %10s %14s %10s %6s  %s\n", "check", "tolerance", "worst_rel_err", "worst_seed",
                "seeds", "result");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-22s %10.0e %14.3e %10llu %6d  %s\n", r.name.c_str(), r.tolerance,
                  r.worst_rel_error, static_cast<unsigned long long>(r.worst_seed), r.seeds, r.passed ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

}  // namespace scs::gradcheck

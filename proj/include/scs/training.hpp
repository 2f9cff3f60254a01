#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scs/imaging.hpp"
#include "scs/model.hpp"

namespace scs::training {

struct LossWeights {
  double content = 10.0;
  double perceptual = 5.0;
  double adversarial = 1.0;
  std::array<double, 5> layers = {1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0};

  void validate() const;
};

struct OptimConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Raised when the total loss stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean absolute error.
template <typename T>
Tensor<T> content_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// Frozen random feature extractor standing in for a pretrained classifier:
/// five stride-2 3x3 convolutions (3-16-32-64-128-128) with leaky
/// rectifiers, row-orthonormal weights from a fixed seed.
template <typename T>
class SurrogateFeatureNet {
 public:
  static constexpr int kLayers = 5;
  explicit SurrogateFeatureNet(std::uint64_t seed = 0x5eed);

  /// Activations after each stage.
  std::vector<Tensor<T>> features(const Tensor<T>& x) const;
  const std::vector<Tensor<T>>& weights() const { return weights_; }
  const std::vector<Tensor<T>>& biases() const { return biases_; }

 private:
  std::vector<Tensor<T>> weights_, biases_;
};

template <typename T>
struct PerceptualTerms {
  std::array<Tensor<T>, 5> layers;  // already multiplied by their weights
  Tensor<T> total;
};

template <typename T>
PerceptualTerms<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, const SurrogateFeatureNet<T>& net,
                                   const std::array<double, 5>& layer_weights);

template <typename T>
struct AdversarialLosses {
  Tensor<T> generator;
  Tensor<T> discriminator;
};

/// Relativistic least-squares pair from real and fake logits:
///   L_G = mean[(D(x) - mean D(x~) - 1)^2] + mean[(D(x~) - mean D(x))^2]
///   L_D = mean[(D(x~) - mean D(x) - 1)^2]
/// With `symmetric_d`, L_D also gets mean[(D(x) - mean D(x~))^2].
template <typename T>
AdversarialLosses<T> adversarial_losses(const Tensor<T>& real_logits, const Tensor<T>& fake_logits,
                                        bool symmetric_d = false);

template <typename T>
struct LossBreakdown {
  Tensor<T> content, perceptual, adversarial;
  Tensor<T> total;  // weighted sum
  double weighted_content = 0, weighted_perceptual = 0, weighted_adversarial = 0;
};

template <typename T>
LossBreakdown<T> total_loss(const Tensor<T>& content, const Tensor<T>& perceptual, const Tensor<T>& adversarial,
                            const LossWeights& weights);

/// Adam with bias correction and decoupled weight decay. State is keyed by
/// parameter name; each parameter keeps its own step count.
template <typename T>
class AdamW {
 public:
  struct Slot {
    std::vector<T> m, v;
    std::int64_t steps = 0;
  };

  explicit AdamW(OptimConfig config = {}) : config_(config) {}

  /// Updates the named parameters from their gradients. Throws AutodiffError
  /// if a parameter has no gradient.
  void step(ParamStore<T>& store, const std::vector<std::string>& names);

  const std::map<std::string, Slot>& slots() const { return slots_; }
  std::map<std::string, Slot>& slots() { return slots_; }
  const OptimConfig& config() const { return config_; }

 private:
  OptimConfig config_;
  std::map<std::string, Slot> slots_;
};

enum class ModeSchedule { kAlternate, kAuto, kRef };
ModeSchedule parse_schedule(const std::string& text);
const char* to_string(ModeSchedule s);

struct TrainConfig {
  model::ScsNetConfig model;
  LossWeights loss;
  OptimConfig optim;
  int batch_size = 4;
  int epochs = 1;
  /// When positive, training stops after this many steps regardless of
  /// `epochs`.
  int max_steps = 0;
  double scale = 2.0;
  std::uint64_t seed = 1;
  ModeSchedule schedule = ModeSchedule::kAlternate;
  bool symmetric_d = false;
  imaging::ElasticParams augment;
  std::uint64_t perceptual_seed = 0x5eed;

  void validate() const;
};

struct StepLog {
  std::int64_t step = 0;  // 1-based
  model::Mode mode = model::Mode::kAuto;
  double content = 0, perceptual = 0, adv_g = 0, adv_d = 0, total = 0;
};

/// "step, mode, L_C, L_P, L_advG, L_advD, total" with full float precision.
std::string format_log_line(const StepLog& log);
StepLog parse_log_line(const std::string& line);

/// A training batch in network layout.
struct Batch {
  Tensor<float> source_l;   // [B,1,Hs,Ws]
  Tensor<float> reference;  // [B,3,Hs,Ws] augmented downsampled target (Lab)
  Tensor<float> target;     // [B,3,H,W] normalized Lab
};

/// Stacks images ([C,H,W] each, equal sizes) into [B,C,H,W].
Tensor<float> stack(const std::vector<const imaging::Image*>& images);

/// Alternating two-mode GAN training over a fixed set of HR images. The
/// batch order and augmentation of step s depend only on (seed, s), so a
/// resumed run continues bit-identically.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<imaging::RgbImage> dataset);

  std::int64_t steps_per_epoch() const;
  std::int64_t total_steps() const;
  std::int64_t completed_steps() const { return step_; }
  bool done() const { return step_ >= total_steps(); }

  model::Mode mode_for_step(std::int64_t step) const;
  /// Dataset indices for 1-based step `step`.
  std::vector<std::size_t> batch_indices(std::int64_t step) const;
  Batch make_batch(std::int64_t step) const;

  /// Runs one discriminator update and one generator update.
  StepLog step();
  /// Runs until done() or `limit` more steps; `on_step` sees every log.
  std::vector<StepLog> run(std::int64_t limit = -1, const std::function<void(const StepLog&)>& on_step = {});

  void save(const std::filesystem::path& path) const;
  /// Restores weights, optimizer state and the step counter.
  void load(const std::filesystem::path& path);

  model::ScsNet<float>& net() { return net_; }
  const model::ScsNet<float>& net() const { return net_; }
  const TrainConfig& config() const { return config_; }
  const SurrogateFeatureNet<float>& surrogate() const { return surrogate_; }

 private:
  TrainConfig config_;
  std::vector<imaging::SamplePair> pairs_;
  model::ScsNet<float> net_;
  SurrogateFeatureNet<float> surrogate_;
  AdamW<float> g_opt_, d_opt_;
  std::int64_t step_ = 0;
};

extern template class SurrogateFeatureNet<float>;
extern template class SurrogateFeatureNet<double>;
extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace scs::training

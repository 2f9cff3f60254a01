#include <cmath>

#include "scs/training.hpp"

namespace scs::training {

using scs::to_string;

void LossWeights::validate() const {
  if (!(content > 0 && perceptual > 0 && adversarial > 0)) {
    throw std::invalid_argument("loss weights must be positive");
  }
  for (double w : layers) {
    if (!(w > 0)) throw std::invalid_argument("perceptual layer weights must be positive");
  }
}

template <typename T>
Tensor<T> content_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("content_loss: prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  return abs_mean(sub(pred, target));
}

template <typename T>
SurrogateFeatureNet<T>::SurrogateFeatureNet(std::uint64_t seed) {
  static constexpr int kChannels[kLayers + 1] = {3, 16, 32, 64, 128, 128};
  Rng rng(seed);
  const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  for (int l = 0; l < kLayers; ++l) {
    const int cin = kChannels[l], cout = kChannels[l + 1];
    const int fan_in = cin * 9;
    // Gaussian rows, Gram-Schmidt orthonormalized (cout <= fan_in at every
    // stage), so each output unit sees a unit-norm filter.
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(cout), std::vector<double>(fan_in));
    for (auto& row : rows) {
      for (auto& v : row) v = rng.normal();
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t q = 0; q < r; ++q) {
        double dot = 0;
        for (int k = 0; k < fan_in; ++k) dot += rows[r][k] * rows[q][k];
        for (int k = 0; k < fan_in; ++k) rows[r][k] -= dot * rows[q][k];
      }
      double norm = 0;
      for (double v : rows[r]) norm += v * v;
      norm = std::sqrt(norm);
      for (auto& v : rows[r]) v /= norm;
    }
    std::vector<T> w;
    w.reserve(static_cast<std::size_t>(cout * fan_in));
    for (const auto& row : rows) {
      for (double v : row) w.push_back(static_cast<T>(gain * v));
    }
    weights_.emplace_back(Shape{cout, cin, 3, 3}, std::move(w));
    biases_.emplace_back(Shape{cout});
  }
}

template <typename T>
std::vector<Tensor<T>> SurrogateFeatureNet<T>::features(const Tensor<T>& x) const {
  std::vector<Tensor<T>> out;
  Tensor<T> h = x;
  for (int l = 0; l < kLayers; ++l) {
    h = leaky_relu(conv2d(h, weights_[l], biases_[l], 2, 1), static_cast<T>(0.2));
    out.push_back(h);
  }
  return out;
}

template <typename T>
PerceptualTerms<T> perceptual_loss(const Tensor<T>& pred, const Tensor<T>& target, const SurrogateFeatureNet<T>& net,
                                   const std::array<double, 5>& layer_weights) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("perceptual_loss: prediction " + to_string(pred.shape()) + " vs target " + to_string(target.shape()));
  }
  const auto fp = net.features(pred);
  std::vector<Tensor<T>> ft;
  {
    NoGradScope<T> ng;
    ft = net.features(target.detach());
  }
  PerceptualTerms<T> terms;
  for (int l = 0; l < 5; ++l) {
    terms.layers[l] = scale(abs_mean(sub(fp[l], ft[l])), static_cast<T>(layer_weights[l]));
    terms.total = l == 0 ? terms.layers[0] : add(terms.total, terms.layers[l]);
  }
  return terms;
}

template <typename T>
AdversarialLosses<T> adversarial_losses(const Tensor<T>& real_logits, const Tensor<T>& fake_logits, bool symmetric_d) {
  if (real_logits.shape() != fake_logits.shape()) {
    throw ShapeError("adversarial_losses: real logits " + to_string(real_logits.shape()) + " vs fake " +
                     to_string(fake_logits.shape()));
  }
  auto square_mean = [](const Tensor<T>& x) { return reduce_mean(mul(x, x)); };
  const auto mean_real = reduce_mean(real_logits);
  const auto mean_fake = reduce_mean(fake_logits);
  const auto real_rel = sub(real_logits, mean_fake);
  const auto fake_rel = sub(fake_logits, mean_real);

  AdversarialLosses<T> out;
  out.generator = add(square_mean(add_scalar(real_rel, T{-1})), square_mean(fake_rel));
  out.discriminator = square_mean(add_scalar(fake_rel, T{-1}));
  if (symmetric_d) out.discriminator = add(out.discriminator, square_mean(real_rel));
  return out;
}

template <typename T>
LossBreakdown<T> total_loss(const Tensor<T>& content, const Tensor<T>& perceptual, const Tensor<T>& adversarial,
                            const LossWeights& weights) {
  LossBreakdown<T> b;
  b.content = content;
  b.perceptual = perceptual;
  b.adversarial = adversarial;
  const auto wc = scale(content, static_cast<T>(weights.content));
  const auto wp = scale(perceptual, static_cast<T>(weights.perceptual));
  const auto wa = scale(adversarial, static_cast<T>(weights.adversarial));
  b.total = add(add(wc, wp), wa);
  b.weighted_content = wc.item();
  b.weighted_perceptual = wp.item();
  b.weighted_adversarial = wa.item();
  return b;
}

#define SCS_INSTANTIATE(T)                                                                                     \
  template Tensor<T> content_loss(const Tensor<T>&, const Tensor<T>&);                                         \
  template class SurrogateFeatureNet<T>;                                                                       \
  template PerceptualTerms<T> perceptual_loss(const Tensor<T>&, const Tensor<T>&, const SurrogateFeatureNet<T>&, \
                                              const std::array<double, 5>&);                                   \
  template AdversarialLosses<T> adversarial_losses(const Tensor<T>&, const Tensor<T>&, bool);                  \
  template LossBreakdown<T> total_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const LossWeights&);
SCS_INSTANTIATE(float)
SCS_INSTANTIATE(double)
#undef SCS_INSTANTIATE

}  // namespace scs::training

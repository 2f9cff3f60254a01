#include <algorithm>
#include <cmath>

#include "scs/geometry.hpp"
#include "scs/imaging.hpp"
#include "scs/rng.hpp"

namespace scs::imaging {
namespace {

Image crop(const Image& img, std::int64_t h, std::int64_t w) {
  Image out(img.channels, h, w);
  for (std::int64_t c = 0; c < img.channels; ++c) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

// Separable Gaussian blur of one plane with clamped edges.
void blur(std::vector<double>& plane, std::int64_t h, std::int64_t w, const std::vector<double>& taps) {
  const auto radius = static_cast<std::int64_t>(taps.size() / 2);
  std::vector<double> tmp(plane.size());
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * plane[static_cast<std::size_t>(y * w + std::clamp(x + k, std::int64_t{0}, w - 1))];
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(std::clamp(y + k, std::int64_t{0}, h - 1) * w + x)];
      }
      plane[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
}

}  // namespace

SamplePair make_pair(const RgbImage& hr, double p) {
  if (!(p > 1.0)) throw ImageError("make_pair: scale must be > 1 (super-resolution only), got " + std::to_string(p));
  const auto hs = reduced_extent(hr.height, p);
  const auto ws = reduced_extent(hr.width, p);
  if (hs < 1 || ws < 1) throw ImageError("make_pair: image too small for scale " + std::to_string(p));
  const auto ht = scaled_extent(hs, p);
  const auto wt = scaled_extent(ws, p);

  SamplePair pair;
  pair.scale = p;
  static_cast<Image&>(pair.target_rgb) = crop(hr, ht, wt);
  pair.target = rgb_to_lab(pair.target_rgb);
  RgbImage lr;
  static_cast<Image&>(lr) = bicubic_resize(pair.target_rgb, hs, ws);
  for (float& v : lr.data) v = std::clamp(v, 0.0f, 1.0f);
  pair.source_lab = rgb_to_lab(lr);
  pair.source_l = pair.source_lab.l_channel();
  return pair;
}

std::vector<float> elastic_displacement(std::int64_t h, std::int64_t w, std::uint64_t seed, const ElasticParams& params) {
  const double factor = static_cast<double>(w) / params.reference_width;
  const double alpha = params.alpha_px * factor;
  const double sigma = std::max(params.sigma_px * factor, 1e-3);
  Rng rng(derive_seed(seed, 0xe1a5));
  const auto n = static_cast<std::size_t>(h * w);
  std::vector<double> dx(n), dy(n);
  for (auto& v : dx) v = rng.uniform(-1.0, 1.0);
  for (auto& v : dy) v = rng.uniform(-1.0, 1.0);
  const auto taps = gaussian_taps(sigma);
  blur(dx, h, w, taps);
  blur(dy, h, w, taps);
  std::vector<float> field(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    field[i] = static_cast<float>(alpha * dx[i]);
    field[n + i] = static_cast<float>(alpha * dy[i]);
  }
  return field;
}

Image warp(const Image& img, const std::vector<float>& field) {
  const auto n = img.plane();
  Image out(img.channels, img.height, img.width);
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      const auto i = y * img.width + x;
      const double sx = std::clamp(static_cast<double>(x) + field[static_cast<std::size_t>(i)], 0.0, static_cast<double>(img.width - 1));
      const double sy = std::clamp(static_cast<double>(y) + field[static_cast<std::size_t>(n + i)], 0.0, static_cast<double>(img.height - 1));
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const auto y0 = static_cast<std::int64_t>(std::floor(sy));
      const auto x1 = std::min(x0 + 1, img.width - 1);
      const auto y1 = std::min(y0 + 1, img.height - 1);
      const float fx = static_cast<float>(sx - static_cast<double>(x0));
      const float fy = static_cast<float>(sy - static_cast<double>(y0));
      for (std::int64_t c = 0; c < img.channels; ++c) {
        const float top = (1.0f - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
        const float bot = (1.0f - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
        out.at(c, y, x) = (1.0f - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.channels, img.height, img.width);
  for (std::int64_t c = 0; c < img.channels; ++c) {
    for (std::int64_t y = 0; y < img.height; ++y) {
      for (std::int64_t x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    }
  }
  return out;
}

LabImage augment_reference(const LabImage& img, std::uint64_t seed, const ElasticParams& params) {
  Rng rng(derive_seed(seed, 0xf11b));
  const bool flip = rng.uniform() < params.flip_probability;
  const Image base = flip ? flip_horizontal(img) : static_cast<const Image&>(img);
  LabImage out;
  static_cast<Image&>(out) = warp(base, elastic_displacement(img.height, img.width, seed, params));
  return out;
}

}  // namespace scs::imaging

#include <algorithm>
#include <cmath>

#include "scs/geometry.hpp"
#include "scs/imaging.hpp"

namespace scs::imaging {
namespace {

constexpr double kCubicA = -0.5;

struct Contribution {
  std::int64_t first;
  std::vector<double> weights;  // taps for first, first+1, ... (indices clamped at use)
};

// 1-D resampling taps for every output position along an axis.
std::vector<Contribution> contributions(std::int64_t in, std::int64_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double stretch = std::max(scale, 1.0);
  const double support = 2.0 * stretch;
  std::vector<Contribution> result(static_cast<std::size_t>(out));
  for (std::int64_t i = 0; i < out; ++i) {
    const double center = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const auto first = static_cast<std::int64_t>(std::floor(center - support)) + 1;
    const auto last = static_cast<std::int64_t>(std::floor(center + support));
    Contribution c{first, {}};
    double total = 0.0;
    for (std::int64_t k = first; k <= last; ++k) {
      const double w = cubic_kernel((center - static_cast<double>(k)) / stretch);
      c.weights.push_back(w);
      total += w;
    }
    for (double& w : c.weights) w /= total;
    result[static_cast<std::size_t>(i)] = std::move(c);
  }
  return result;
}

}  // namespace

double cubic_kernel(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return (kCubicA + 2.0) * ax * ax * ax - (kCubicA + 3.0) * ax * ax + 1.0;
  if (ax < 2.0) return kCubicA * ax * ax * ax - 5.0 * kCubicA * ax * ax + 8.0 * kCubicA * ax - 4.0 * kCubicA;
  return 0.0;
}

Image bicubic_resize(const Image& img, std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw ImageError("bicubic_resize: output extent must be >= 1");
  const auto rows = contributions(img.height, out_h);
  const auto cols = contributions(img.width, out_w);
  Image tmp(img.channels, img.height, out_w);
  for (std::int64_t c = 0; c < img.channels; ++c) {
    for (std::int64_t y = 0; y < img.height; ++y) {
      for (std::int64_t x = 0; x < out_w; ++x) {
        const auto& con = cols[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (std::size_t k = 0; k < con.weights.size(); ++k) {
          const auto sx = std::clamp<std::int64_t>(con.first + static_cast<std::int64_t>(k), 0, img.width - 1);
          acc += con.weights[k] * img.at(c, y, sx);
        }
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  Image out(img.channels, out_h, out_w);
  for (std::int64_t c = 0; c < img.channels; ++c) {
    for (std::int64_t y = 0; y < out_h; ++y) {
      const auto& con = rows[static_cast<std::size_t>(y)];
      for (std::int64_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < con.weights.size(); ++k) {
          const auto sy = std::clamp<std::int64_t>(con.first + static_cast<std::int64_t>(k), 0, img.height - 1);
          acc += con.weights[k] * tmp.at(c, sy, x);
        }
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image bicubic_downsample(const Image& img, double factor) {
  if (!(factor > 0.0)) throw ImageError("bicubic_downsample: factor must be positive");
  const auto h = reduced_extent(img.height, factor);
  const auto w = reduced_extent(img.width, factor);
  if (h < 1 || w < 1) throw ImageError("bicubic_downsample: output would be empty");
  return bicubic_resize(img, h, w);
}

}  // namespace scs::imaging

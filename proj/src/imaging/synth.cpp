#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "scs/imaging.hpp"
#include "scs/rng.hpp"

namespace scs::imaging {
namespace {

using Color = std::array<double, 3>;

Color hsv(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  Color rgb{};
  switch (static_cast<int>(h / 60.0)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

// Each primitive kind draws from its own hue family so that color is
// partly predictable from shape.
enum class Kind { kDisk, kRect, kBar };

Color kind_color(Kind kind, Rng& rng) {
  double hue = 0.0;
  switch (kind) {
    case Kind::kDisk: hue = rng.uniform(-20.0, 50.0); break;
    case Kind::kRect: hue = rng.uniform(190.0, 250.0); break;
    case Kind::kBar: hue = rng.uniform(80.0, 150.0); break;
  }
  return hsv(hue, rng.uniform(0.55, 1.0), rng.uniform(0.35, 1.0));
}

double coverage(double signed_distance) { return std::clamp(0.5 - signed_distance, 0.0, 1.0); }

struct Frame {
  double cx, cy, cos_t, sin_t;
  // Coordinates of (x, y) in the primitive's rotated frame.
  void local(double x, double y, double& u, double& v) const {
    const double dx = x - cx, dy = y - cy;
    u = dx * cos_t + dy * sin_t;
    v = -dx * sin_t + dy * cos_t;
  }
};

double box_distance(double u, double v, double hx, double hy) {
  const double qx = std::abs(u) - hx, qy = std::abs(v) - hy;
  const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
  return std::hypot(ox, oy) + std::min(std::max(qx, qy), 0.0);
}

void blend(RgbImage& img, std::int64_t y, std::int64_t x, const Color& c, double alpha) {
  for (int k = 0; k < 3; ++k) {
    float& dst = img.at(k, y, x);
    dst = static_cast<float>((1.0 - alpha) * dst + alpha * c[static_cast<std::size_t>(k)]);
  }
}

RgbImage draw_scene(Rng& rng, int size, const SynthParams& params) {
  const double s = static_cast<double>(size);
  RgbImage img(size, size);

  const Color bg0 = hsv(rng.uniform(0.0, 360.0), rng.uniform(0.2, 0.6), rng.uniform(0.3, 0.9));
  const Color bg1 = hsv(rng.uniform(0.0, 360.0), rng.uniform(0.2, 0.6), rng.uniform(0.3, 0.9));
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(angle), gy = std::sin(angle);
  for (std::int64_t y = 0; y < size; ++y) {
    for (std::int64_t x = 0; x < size; ++x) {
      const double t = std::clamp(0.5 + ((x + 0.5) / s - 0.5) * gx + ((y + 0.5) / s - 0.5) * gy, 0.0, 1.0);
      for (int k = 0; k < 3; ++k) img.at(k, y, x) = static_cast<float>((1 - t) * bg0[k] + t * bg1[k]);
    }
  }

  const int count = params.min_shapes + static_cast<int>(rng.below(static_cast<std::uint64_t>(params.max_shapes - params.min_shapes + 1)));
  for (int n = 0; n < count; ++n) {
    const auto kind = static_cast<Kind>(rng.below(3));
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const Frame f{rng.uniform(0.1, 0.9) * s, rng.uniform(0.1, 0.9) * s, std::cos(theta), std::sin(theta)};
    const Color c0 = kind_color(kind, rng);
    const Color c1 = kind_color(kind, rng);
    const double r = rng.uniform(0.08, 0.25) * s;
    const double hx = rng.uniform(0.08, 0.3) * s;
    const double hy = rng.uniform(0.05, 0.2) * s;
    for (std::int64_t y = 0; y < size; ++y) {
      for (std::int64_t x = 0; x < size; ++x) {
        double u, v;
        f.local(x + 0.5, y + 0.5, u, v);
        switch (kind) {
          case Kind::kDisk: {
            const double a = coverage(std::hypot(u, v) - r);
            if (a > 0) blend(img, y, x, c0, a);
            break;
          }
          case Kind::kRect: {
            const double a = coverage(box_distance(u, v, hx, hy));
            if (a > 0) blend(img, y, x, c0, a);
            break;
          }
          case Kind::kBar: {
            const double a = coverage(box_distance(u, v, hx * 1.5, hy * 0.6));
            if (a > 0) {
              const double t = std::clamp(0.5 + u / (3.0 * hx), 0.0, 1.0);
              blend(img, y, x, {(1 - t) * c0[0] + t * c1[0], (1 - t) * c0[1] + t * c1[1], (1 - t) * c0[2] + t * c1[2]}, a);
            }
            break;
          }
        }
      }
    }
  }
  for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

}  // namespace

std::vector<double> channel_std(const Image& img) {
  std::vector<double> out;
  const auto n = static_cast<double>(img.plane());
  for (std::int64_t c = 0; c < img.channels; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::int64_t i = 0; i < img.plane(); ++i) mean += img.data[static_cast<std::size_t>(c * img.plane() + i)];
    mean /= n;
    for (std::int64_t i = 0; i < img.plane(); ++i) {
      const double d = img.data[static_cast<std::size_t>(c * img.plane() + i)] - mean;
      sq += d * d;
    }
    out.push_back(std::sqrt(sq / n));
  }
  return out;
}

RgbImage synth_image(std::uint64_t seed, int index, int size, const SynthParams& params) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index), attempt));
    RgbImage img = draw_scene(rng, size, params);
    const auto stds = channel_std(img);
    if (*std::min_element(stds.begin(), stds.end()) >= params.min_channel_std) return img;
  }
}

std::vector<RgbImage> synth_dataset(std::uint64_t seed, int n, int size, const SynthParams& params) {
  if (n < 1) throw ImageError("synth_dataset: n must be >= 1");
  if (size < 4) throw ImageError("synth_dataset: size must be >= 4");
  std::vector<RgbImage> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(synth_image(seed, i, size, params));
  return out;
}

}  // namespace scs::imaging

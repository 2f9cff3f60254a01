#include <algorithm>
#include <cmath>

#include "scs/imaging.hpp"

namespace scs::imaging {
namespace {

// sRGB primaries to XYZ under D65. The reference white is taken as the row
// sums so that RGB (1,1,1) maps to a = b = 0.
constexpr double kToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                 {0.2126729, 0.7151522, 0.0721750},
                                 {0.0193339, 0.1191920, 0.9503041}};
constexpr double kFromXyz[3][3] = {{3.2404542, -1.5371385, -0.4985314},
                                   {-0.9692660, 1.8760108, 0.0415560},
                                   {0.0556434, -0.2040259, 1.0572252}};
constexpr double kWhite[3] = {0.9504700, 1.0000001, 1.0888300};

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double decode_srgb(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }
double encode_srgb(double v) { return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }
double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

}  // namespace

void srgb_to_cielab(double r, double g, double b, double& L, double& A, double& B) {
  const double lin[3] = {decode_srgb(r), decode_srgb(g), decode_srgb(b)};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double xyz = kToXyz[i][0] * lin[0] + kToXyz[i][1] * lin[1] + kToXyz[i][2] * lin[2];
    f[i] = lab_f(xyz / kWhite[i]);
  }
  L = 116.0 * f[1] - 16.0;
  A = 500.0 * (f[0] - f[1]);
  B = 200.0 * (f[1] - f[2]);
}

void cielab_to_srgb(double L, double A, double B, double& r, double& g, double& b) {
  const double fy = (L + 16.0) / 116.0;
  const double f[3] = {fy + A / 500.0, fy, fy - B / 200.0};
  double xyz[3];
  for (int i = 0; i < 3; ++i) xyz[i] = lab_f_inv(f[i]) * kWhite[i];
  double out[3];
  for (int i = 0; i < 3; ++i) {
    const double lin = kFromXyz[i][0] * xyz[0] + kFromXyz[i][1] * xyz[1] + kFromXyz[i][2] * xyz[2];
    out[i] = std::clamp(encode_srgb(std::max(lin, 0.0)), 0.0, 1.0);
  }
  r = out[0];
  g = out[1];
  b = out[2];
}

Image LabImage::l_channel() const {
  Image l(1, height, width);
  std::copy_n(data.begin(), plane(), l.data.begin());
  return l;
}

LabImage rgb_to_lab(const RgbImage& rgb) {
  LabImage lab(rgb.height, rgb.width);
  const auto n = rgb.plane();
  for (std::int64_t i = 0; i < n; ++i) {
    double L, A, B;
    srgb_to_cielab(std::clamp<double>(rgb.data[i], 0.0, 1.0), std::clamp<double>(rgb.data[n + i], 0.0, 1.0),
                   std::clamp<double>(rgb.data[2 * n + i], 0.0, 1.0), L, A, B);
    lab.data[i] = static_cast<float>(std::clamp(L / kLabLScale, 0.0, 1.0));
    lab.data[n + i] = static_cast<float>(std::clamp(A / kLabAbScale, -1.0, 1.0));
    lab.data[2 * n + i] = static_cast<float>(std::clamp(B / kLabAbScale, -1.0, 1.0));
  }
  return lab;
}

RgbImage lab_to_rgb(const LabImage& lab) {
  RgbImage rgb(lab.height, lab.width);
  const auto n = lab.plane();
  for (std::int64_t i = 0; i < n; ++i) {
    const double L = std::clamp<double>(lab.data[i], 0.0, 1.0) * kLabLScale;
    const double A = std::clamp<double>(lab.data[n + i], -1.0, 1.0) * kLabAbScale;
    const double B = std::clamp<double>(lab.data[2 * n + i], -1.0, 1.0) * kLabAbScale;
    double r, g, b;
    cielab_to_srgb(L, A, B, r, g, b);
    rgb.data[i] = static_cast<float>(r);
    rgb.data[n + i] = static_cast<float>(g);
    rgb.data[2 * n + i] = static_cast<float>(b);
  }
  return rgb;
}

}  // namespace scs::imaging

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "scs/imaging.hpp"

namespace scs::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MetricReport {
  double psnr = 0;  // dB; +infinity when the images are identical
  double ssim = 0;
  double cn = 0;    // colorfulness of the prediction
};

/// 10 log10(1 / MSE) over every channel and pixel, values on a [0, 1] scale.
double psnr(const imaging::Image& a, const imaging::Image& b);

/// Rec. 601 luma of an RGB image, row-major [H*W].
std::vector<double> luminance(const imaging::RgbImage& img);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, averaged over windows that fit entirely
/// inside the image.
double ssim(const imaging::RgbImage& a, const imaging::RgbImage& b);
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::int64_t height, std::int64_t width);

/// Hasler-Suesstrunk colorfulness on the [0, 1] scale:
/// sqrt(var(rg) + var(yb)) + 0.3 sqrt(mean(rg)^2 + mean(yb)^2) with
/// rg = R - G and yb = (R + G) / 2 - B (population moments).
double colorfulness(const imaging::RgbImage& img);

MetricReport evaluate(const imaging::RgbImage& prediction, const imaging::RgbImage& target);

/// "inf" for the identical-image sentinel, otherwise fixed precision.
std::string format_psnr(double db);

}  // namespace scs::metrics

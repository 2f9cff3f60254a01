#include "scs/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace scs::metrics {

namespace {

void require_same_shape(const imaging::Image& a, const imaging::Image& b, const char* what) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: image shapes differ ([%lld,%lld,%lld] vs [%lld,%lld,%lld])", what,
                  static_cast<long long>(a.channels), static_cast<long long>(a.height), static_cast<long long>(a.width),
                  static_cast<long long>(b.channels), static_cast<long long>(b.height), static_cast<long long>(b.width));
    throw MetricError(buf);
  }
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering: [h, w] -> [h - 10, w - 10].
std::vector<double> filter_valid(const std::vector<double>& x, std::int64_t h, std::int64_t w, const std::vector<double>& g) {
  const std::int64_t k = kSsimWindow, oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t i = 0; i < h; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      double s = 0;
      for (std::int64_t t = 0; t < k; ++t) s += g[t] * x[i * w + j + t];
      rows[i * ow + j] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t i = 0; i < oh; ++i) {
    for (std::int64_t j = 0; j < ow; ++j) {
      double s = 0;
      for (std::int64_t t = 0; t < k; ++t) s += g[t] * rows[(i + t) * ow + j];
      out[i * ow + j] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const imaging::Image& a, const imaging::Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.data.empty()) throw MetricError("psnr: empty images");
  double se = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> luminance(const imaging::RgbImage& img) {
  const auto n = static_cast<std::size_t>(img.plane());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 0.299 * img.data[i] + 0.587 * img.data[n + i] + 0.114 * img.data[2 * n + i];
  }
  return y;
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::int64_t h, std::int64_t w) {
  if (h < kSsimWindow || w < kSsimWindow) {
    throw MetricError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than the " +
                      std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  }
  const auto g = gaussian_window();
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = filter_valid(a, h, w, g), mu_b = filter_valid(b, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

double ssim(const imaging::RgbImage& a, const imaging::RgbImage& b) {
  require_same_shape(a, b, "ssim");
  return ssim_plane(luminance(a), luminance(b), a.height, a.width);
}

double colorfulness(const imaging::RgbImage& img) {
  const auto n = static_cast<std::size_t>(img.plane());
  if (n == 0) throw MetricError("colorfulness: empty image");
  double s_rg = 0, s_yb = 0, q_rg = 0, q_yb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.data[i], g = img.data[n + i], b = img.data[2 * n + i];
    const double rg = r - g, yb = 0.5 * (r + g) - b;
    s_rg += rg;
    s_yb += yb;
    q_rg += rg * rg;
    q_yb += yb * yb;
  }
  const double m_rg = s_rg / n, m_yb = s_yb / n;
  const double v_rg = std::max(0.0, q_rg / n - m_rg * m_rg), v_yb = std::max(0.0, q_yb / n - m_yb * m_yb);
  return std::sqrt(v_rg + v_yb) + 0.3 * std::sqrt(m_rg * m_rg + m_yb * m_yb);
}

MetricReport evaluate(const imaging::RgbImage& prediction, const imaging::RgbImage& target) {
  return {psnr(prediction, target), ssim(prediction, target), colorfulness(prediction)};
}

std::string format_psnr(double db) {
  if (std::isinf(db)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", db);
  return buf;
}

}  // namespace scs::metrics

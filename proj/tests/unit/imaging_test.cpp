#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "scs/imaging.hpp"
#include "scs/rng.hpp"

namespace scs::imaging {
namespace {

RgbImage random_rgb(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

TEST(Colorspace, BlackMapsToOrigin) {
  RgbImage black(1, 1, 0.0f);
  auto lab = rgb_to_lab(black);
  EXPECT_EQ(lab.data[0], 0.0f);
  EXPECT_NEAR(lab.data[1], 0.0f, 1e-7);
  EXPECT_NEAR(lab.data[2], 0.0f, 1e-7);
}

TEST(Colorspace, WhiteMapsToFullLightness) {
  RgbImage white(1, 1, 1.0f);
  auto lab = rgb_to_lab(white);
  EXPECT_NEAR(lab.data[0], 1.0f, 1e-3);
  EXPECT_NEAR(lab.data[1], 0.0f, 1e-3);
  EXPECT_NEAR(lab.data[2], 0.0f, 1e-3);
}

TEST(Colorspace, MatchesPublishedPrimaries) {
  // CIE Lab of the sRGB primaries under D65.
  struct Case {
    double r, g, b, L, A, B;
  };
  for (const Case& c : {Case{1, 0, 0, 53.24, 80.09, 67.20}, Case{0, 1, 0, 87.73, -86.18, 83.18},
                        Case{0, 0, 1, 32.30, 79.19, -107.86}}) {
    double L, A, B;
    srgb_to_cielab(c.r, c.g, c.b, L, A, B);
    EXPECT_NEAR(L, c.L, 0.02);
    EXPECT_NEAR(A, c.A, 0.02);
    EXPECT_NEAR(B, c.B, 0.02);
  }
}

TEST(Colorspace, RoundTripOnRandomColors) {
  auto rgb = random_rgb(100, 100, 3);
  auto back = lab_to_rgb(rgb_to_lab(rgb));
  double worst = 0.0;
  for (std::size_t i = 0; i < rgb.data.size(); ++i) worst = std::max(worst, std::abs(double(rgb.data[i]) - back.data[i]));
  EXPECT_LT(worst, 1e-3);
}

TEST(Colorspace, NormalizedRanges) {
  auto lab = rgb_to_lab(random_rgb(50, 50, 4));
  const auto n = lab.plane();
  for (std::int64_t i = 0; i < n; ++i) {
    EXPECT_GE(lab.data[i], 0.0f);
    EXPECT_LE(lab.data[i], 1.0f);
    EXPECT_LE(std::abs(lab.data[n + i]), 1.0f);
    EXPECT_LE(std::abs(lab.data[2 * n + i]), 1.0f);
  }
  EXPECT_EQ(lab.l_channel().channels, 1);
}

// Direct 2-D evaluation of the stretched cubic kernel for every output
// pixel, with clamped sampling and normalization by the 2-D weight sum.
Image bicubic_oracle(const Image& img, std::int64_t oh, std::int64_t ow) {
  Image out(img.channels, oh, ow);
  const double sy = double(img.height) / oh, sx = double(img.width) / ow;
  const double ky = std::max(sy, 1.0), kx = std::max(sx, 1.0);
  for (std::int64_t c = 0; c < img.channels; ++c) {
    for (std::int64_t i = 0; i < oh; ++i) {
      for (std::int64_t j = 0; j < ow; ++j) {
        const double cy = (i + 0.5) * sy - 0.5, cx = (j + 0.5) * sx - 0.5;
        double acc = 0.0, total = 0.0;
        for (auto y = std::int64_t(std::floor(cy - 2 * ky)); y <= std::int64_t(std::ceil(cy + 2 * ky)); ++y) {
          for (auto x = std::int64_t(std::floor(cx - 2 * kx)); x <= std::int64_t(std::ceil(cx + 2 * kx)); ++x) {
            const double w = cubic_kernel((cy - y) / ky) * cubic_kernel((cx - x) / kx);
            acc += w * img.at(c, std::clamp<std::int64_t>(y, 0, img.height - 1), std::clamp<std::int64_t>(x, 0, img.width - 1));
            total += w;
          }
        }
        out.at(c, i, j) = static_cast<float>(acc / total);
      }
    }
  }
  return out;
}

TEST(Bicubic, KernelShape) {
  EXPECT_EQ(cubic_kernel(0.0), 1.0);
  EXPECT_EQ(cubic_kernel(1.0), 0.0);
  EXPECT_EQ(cubic_kernel(2.0), 0.0);
  EXPECT_NEAR(cubic_kernel(0.5), 0.5625, 1e-12);
  EXPECT_NEAR(cubic_kernel(1.5), -0.0625, 1e-12);
}

TEST(Bicubic, ConstantImageStaysConstant) {
  Image img(3, 20, 20, 0.37f);
  auto down = bicubic_downsample(img, 2.5);
  for (float v : down.data) EXPECT_NEAR(v, 0.37f, 1e-6);
  auto up = bicubic_resize(down, 20, 20);
  for (float v : up.data) EXPECT_NEAR(v, 0.37f, 1e-6);
}

TEST(Bicubic, DownsampleShape) {
  auto out = bicubic_downsample(Image(3, 64, 64), 4.0);
  EXPECT_EQ(out.height, 16);
  EXPECT_EQ(out.width, 16);
}

TEST(Bicubic, MatchesDirectConvolutionOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto img = random_rgb(16, 16, 40 + seed);
    for (auto [oh, ow] : {std::pair{8L, 8L}, std::pair{4L, 4L}, std::pair{6L, 5L}, std::pair{16L, 16L}, std::pair{24L, 20L}}) {
      auto got = bicubic_resize(img, oh, ow);
      auto want = bicubic_oracle(img, oh, ow);
      for (std::size_t i = 0; i < got.data.size(); ++i) ASSERT_NEAR(got.data[i], want.data[i], 1e-5) << oh << "x" << ow;
    }
  }
}

TEST(MakePair, ScaleFourShapes) {
  auto pair = make_pair(random_rgb(64, 64, 1), 4.0);
  EXPECT_EQ(pair.source_l.channels, 1);
  EXPECT_EQ(pair.source_l.height, 16);
  EXPECT_EQ(pair.source_l.width, 16);
  EXPECT_EQ(pair.target.channels, 3);
  EXPECT_EQ(pair.target.height, 64);
  EXPECT_EQ(pair.target.width, 64);
}

TEST(MakePair, FractionalScaleShapes) {
  auto pair = make_pair(random_rgb(80, 80, 2), 2.5);
  EXPECT_EQ(pair.source_l.height, 32);
  EXPECT_EQ(pair.target.height, 80);
  for (double p : {1.5, 2.5, 3.3}) {
    for (std::int64_t size : {33L, 50L, 64L, 71L}) {
      auto pr = make_pair(random_rgb(size, size + 3, 3), p);
      const auto hs = pr.source_l.height, ws = pr.source_l.width;
      EXPECT_EQ(hs, static_cast<std::int64_t>(std::floor(size / p + 1e-9)));
      EXPECT_EQ(pr.target.height, static_cast<std::int64_t>(std::floor(hs * p + 1e-9))) << p << " " << size;
      EXPECT_EQ(pr.target.width, static_cast<std::int64_t>(std::floor(ws * p + 1e-9)));
      EXPECT_LE(pr.target.height, size);
    }
  }
}

TEST(MakePair, GrayscaleHasNoChroma) {
  auto rgb = random_rgb(32, 32, 5);
  for (std::int64_t i = 0; i < rgb.plane(); ++i) {
    rgb.data[rgb.plane() + i] = rgb.data[i];
    rgb.data[2 * rgb.plane() + i] = rgb.data[i];
  }
  auto pair = make_pair(rgb, 2.0);
  for (std::int64_t i = 0; i < pair.target.plane(); ++i) {
    EXPECT_NEAR(pair.target.data[pair.target.plane() + i], 0.0f, 1e-3);
    EXPECT_NEAR(pair.target.data[2 * pair.target.plane() + i], 0.0f, 1e-3);
  }
  RgbImage lr;
  static_cast<Image&>(lr) = bicubic_downsample(rgb, 2.0);
  for (auto& v : lr.data) v = std::clamp(v, 0.0f, 1.0f);
  auto l = rgb_to_lab(lr).l_channel();
  for (std::size_t i = 0; i < l.data.size(); ++i) EXPECT_EQ(pair.source_l.data[i], l.data[i]);
}

TEST(MakePair, RejectsNonMagnifyingScale) {
  EXPECT_THROW(make_pair(random_rgb(16, 16, 1), 1.0), ImageError);
  EXPECT_THROW(make_pair(random_rgb(16, 16, 1), 0.5), ImageError);
}

TEST(Synth, DeterministicPerSeed) {
  auto a = synth_dataset(9, 5, 32);
  auto b = synth_dataset(9, 5, 32);
  auto c = synth_dataset(10, 5, 32);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a[i].data, b[i].data);
  EXPECT_NE(a[0].data, c[0].data);
}

TEST(Synth, CountAndShape) {
  auto set = synth_dataset(1, 100, 64);
  ASSERT_EQ(set.size(), 100u);
  for (const auto& img : set) {
    EXPECT_EQ(img.channels, 3);
    EXPECT_EQ(img.height, 64);
    EXPECT_EQ(img.width, 64);
  }
}

TEST(Synth, EveryImagePassesChannelSpreadScan) {
  for (const auto& img : synth_dataset(2, 200, 32)) {
    for (double s : channel_std(img)) EXPECT_GE(s, 0.05);
    for (float v : img.data) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Synth, RejectsEmptyRequest) { EXPECT_THROW(synth_dataset(1, 0, 32), ImageError); }

TEST(Augment, ZeroAlphaOnlyFlips) {
  LabImage lab = rgb_to_lab(random_rgb(20, 24, 6));
  ElasticParams params;
  params.alpha_px = 0.0;
  int flipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto out = augment_reference(lab, seed, params);
    const bool same = out.data == lab.data;
    const bool mirrored = out.data == flip_horizontal(lab).data;
    EXPECT_TRUE(same || mirrored);
    flipped += mirrored ? 1 : 0;
  }
  EXPECT_GT(flipped, 0);
  EXPECT_LT(flipped, 20);
}

TEST(Augment, DeterministicUnderSeed) {
  LabImage lab = rgb_to_lab(random_rgb(32, 32, 7));
  EXPECT_EQ(augment_reference(lab, 5).data, augment_reference(lab, 5).data);
  EXPECT_NE(augment_reference(lab, 5).data, augment_reference(lab, 6).data);
}

TEST(Augment, MeanDisplacementMatchesSmoothedFieldStatistics) {
  // Each displacement component at an interior pixel is alpha * sum_k w_k U_k
  // with U_k ~ U(-1, 1) and 2-D weights w = g (x) g, so its variance is
  // alpha^2 / 3 * (sum_i g_i^2)^2. The sum of many independent terms is close
  // to Gaussian, so the magnitude is Rayleigh with mean s * sqrt(pi / 2).
  const std::int64_t size = 64;
  const ElasticParams params;
  const double sigma = params.sigma_px, alpha = params.alpha_px;
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  double total = 0.0, sq = 0.0;
  for (int i = -radius; i <= radius; ++i) total += std::exp(-0.5 * i * i / (sigma * sigma));
  for (int i = -radius; i <= radius; ++i) {
    const double g = std::exp(-0.5 * i * i / (sigma * sigma)) / total;
    sq += g * g;
  }
  const double s = alpha * std::sqrt(sq * sq / 3.0);
  const double expected = s * std::sqrt(std::numbers::pi / 2.0);

  double mean = 0.0;
  const int seeds = 1000;
  const std::int64_t c = size / 2, n = size * size;
  for (int seed = 0; seed < seeds; ++seed) {
    auto field = elastic_displacement(size, size, static_cast<std::uint64_t>(seed), params);
    mean += std::hypot(field[c * size + c], field[n + c * size + c]);
  }
  mean /= seeds;
  EXPECT_NEAR(mean, expected, 0.1 * expected);
}

TEST(ImageIo, PngRoundTripsAtEightBits) {
  const auto dir = std::filesystem::temp_directory_path() / "scs_imaging_test";
  std::filesystem::create_directories(dir);
  auto img = random_rgb(7, 9, 8);
  write_image(dir / "a.png", img);
  auto back = read_image(dir / "a.png");
  ASSERT_EQ(back.height, 7);
  ASSERT_EQ(back.width, 9);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 0.5 / 255 + 1e-6);
  write_image(dir / "a.ppm", img);
  EXPECT_EQ(read_image(dir / "a.ppm").data, back.data);
  EXPECT_THROW(read_image(dir / "missing.png"), ImageError);
  EXPECT_THROW(write_image(dir / "a.bmp", img), ImageError);
}

TEST(ImageIo, ManifestResolvesRelativePaths) {
  const auto dir = std::filesystem::temp_directory_path() / "scs_manifest_test";
  std::filesystem::create_directories(dir);
  write_manifest(dir / "manifest.txt", {"img_0.png", "# comment", "", "/abs/x.png"});
  auto paths = read_manifest(dir / "manifest.txt");
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0], dir / "img_0.png");
  EXPECT_EQ(paths[1], std::filesystem::path("/abs/x.png"));
}

}  // namespace
}  // namespace scs::imaging

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scs::imaging {

/// Channel-first float image, row-major within each plane.
struct Image {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::int64_t c, std::int64_t h, std::int64_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c * h * w), fill) {}

  float& at(std::int64_t c, std::int64_t y, std::int64_t x) { return data[static_cast<std::size_t>((c * height + y) * width + x)]; }
  float at(std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  std::int64_t plane() const { return height * width; }
};

/// sRGB in [0, 1], shape [3, H, W].
struct RgbImage : Image {
  RgbImage() = default;
  RgbImage(std::int64_t h, std::int64_t w, float fill = 0.0f) : Image(3, h, w, fill) {}
};

/// CIE Lab normalized for the network: L / 100 in [0, 1], a / 110 and
/// b / 110 clamped to [-1, 1]. Shape [3, H, W].
struct LabImage : Image {
  LabImage() = default;
  LabImage(std::int64_t h, std::int64_t w, float fill = 0.0f) : Image(3, h, w, fill) {}
  /// The lightness plane as a [1, H, W] image.
  Image l_channel() const;
};

inline constexpr double kLabLScale = 100.0;
inline constexpr double kLabAbScale = 110.0;

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Colorspace (sRGB, D65 white).
LabImage rgb_to_lab(const RgbImage& rgb);
/// Out-of-gamut colors are clamped to [0, 1].
RgbImage lab_to_rgb(const LabImage& lab);
/// CIE Lab (unnormalized) for one sRGB triple.
void srgb_to_cielab(double r, double g, double b, double& L, double& A, double& B);
void cielab_to_srgb(double L, double A, double B, double& r, double& g, double& b);

/// Catmull-Rom style cubic with a = -0.5.
double cubic_kernel(double x);

/// Separable bicubic resampling with pixel-center alignment and clamped
/// edges. When shrinking, the kernel is stretched by the reduction factor so
/// it also acts as the anti-aliasing filter.
Image bicubic_resize(const Image& img, std::int64_t out_h, std::int64_t out_w);
/// Output extent floor(H / factor) x floor(W / factor).
Image bicubic_downsample(const Image& img, double factor);

/// One LR/HR training example.
struct SamplePair {
  Image source_l;      // [1, Hs, Ws] lightness of the downsampled image
  LabImage source_lab; // [3, Hs, Ws] the downsampled image in Lab (reference material)
  LabImage target;     // [3, floor(Hs p), floor(Ws p)]
  RgbImage target_rgb; // the (cropped) HR image
  double scale = 0.0;
};

/// Crops `hr` to floor(floor(H/p) * p) rows (likewise columns) so the target
/// extent is consistent with p, then builds the pair. Throws for p <= 1.
SamplePair make_pair(const RgbImage& hr, double p);

struct ElasticParams {
  double alpha_px = 8.0;      // at the reference width below
  double sigma_px = 4.0;
  double reference_width = 64.0;
  double flip_probability = 0.5;
};

/// Displacement field (dx plane then dy plane) in pixels: uniform noise in
/// [-1, 1] smoothed by a normalized Gaussian of width sigma and scaled by
/// alpha, both scaled with the image width.
std::vector<float> elastic_displacement(std::int64_t h, std::int64_t w, std::uint64_t seed, const ElasticParams& params);

/// Random horizontal flip followed by an elastic warp (bilinear, clamped
/// edges). Deterministic in `seed`.
LabImage augment_reference(const LabImage& img, std::uint64_t seed, const ElasticParams& params = {});

/// Warps every channel of `img` by a displacement field from
/// elastic_displacement().
Image warp(const Image& img, const std::vector<float>& field);
Image flip_horizontal(const Image& img);

struct SynthParams {
  int min_shapes = 2;
  int max_shapes = 6;
  double min_channel_std = 0.05;
};

/// Seeded synthetic scenes: 2-6 anti-aliased disks, rectangles and gradient
/// bars over a colored gradient background. Scenes whose R, G or B standard
/// deviation falls below `min_channel_std` are redrawn.
std::vector<RgbImage> synth_dataset(std::uint64_t seed, int n, int size, const SynthParams& params = {});
RgbImage synth_image(std::uint64_t seed, int index, int size, const SynthParams& params = {});
/// Per-channel standard deviation over all pixels.
std::vector<double> channel_std(const Image& img);

// File formats: PNG (8-bit) and binary PPM (P6), chosen by extension.
RgbImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Manifest: one image path per line, relative to the manifest's directory
/// unless absolute. Blank lines and lines starting with '#' are skipped.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<std::string>& entries);

}  // namespace scs::imaging

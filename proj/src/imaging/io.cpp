#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scs/imaging.hpp"

namespace scs::imaging {
namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::vector<std::uint8_t> interleave(const RgbImage& img) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(img.plane() * 3));
  for (std::int64_t i = 0; i < img.plane(); ++i) {
    for (int c = 0; c < 3; ++c) bytes[static_cast<std::size_t>(i * 3 + c)] = quantize(img.data[static_cast<std::size_t>(c * img.plane() + i)]);
  }
  return bytes;
}

RgbImage deinterleave(const std::uint8_t* bytes, std::int64_t h, std::int64_t w) {
  RgbImage img(h, w);
  for (std::int64_t i = 0; i < h * w; ++i) {
    for (int c = 0; c < 3; ++c) img.data[static_cast<std::size_t>(c * h * w + i)] = static_cast<float>(bytes[i * 3 + c]) / 255.0f;
  }
  return img;
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw ImageError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return deinterleave(buffer.data(), image.height, image.width);
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  const auto bytes = interleave(img);
  if (!png_image_write_to_file(&image, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw ImageError("cannot write PNG '" + path.string() + "': " + image.message);
  }
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open '" + path.string() + "'");
  auto token = [&in]() {
    std::string t;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    in >> t;
    return t;
  };
  if (token() != "P6") throw ImageError("'" + path.string() + "' is not a binary PPM (P6)");
  const auto w = std::stoll(token());
  const auto h = std::stoll(token());
  const auto maxval = std::stoll(token());
  if (maxval != 255 || w < 1 || h < 1) throw ImageError("unsupported PPM header in '" + path.string() + "'");
  in.get();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w * h * 3));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw ImageError("truncated PPM '" + path.string() + "'");
  return deinterleave(bytes.data(), h, w);
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write '" + path.string() + "'");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  const auto bytes = interleave(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("cannot write '" + path.string() + "'");
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto ext = lowercase_extension(path);
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".png") return read_png(path);
  throw ImageError("unsupported image extension '" + ext + "' for '" + path.string() + "'");
}

void write_image(const std::filesystem::path& path, const RgbImage& img) {
  const auto ext = lowercase_extension(path);
  if (ext == ".ppm") return write_ppm(path, img);
  if (ext == ".png") return write_png(path, img);
  throw ImageError("unsupported image extension '" + ext + "' for '" + path.string() + "'");
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw ImageError("cannot open manifest '" + manifest.string() + "'");
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::filesystem::path p(line);
    out.push_back(p.is_absolute() ? p : manifest.parent_path() / p);
  }
  return out;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<std::string>& entries) {
  std::ofstream out(manifest);
  if (!out) throw ImageError("cannot write manifest '" + manifest.string() + "'");
  for (const auto& e : entries) out << e << '\n';
  if (!out) throw ImageError("cannot write manifest '" + manifest.string() + "'");
}

}  // namespace scs::imaging

#include <cmath>
#include <cstdio>
#include <fstream>

#include "scs/app.hpp"
#include "scs/checkpoint.hpp"
#include "scs/gradcheck.hpp"

namespace scs::app {

namespace fs = std::filesystem;
using imaging::Image;
using imaging::LabImage;
using imaging::RgbImage;
using model::Mode;

namespace {

std::string indexed_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu%s", stem, i, ext);
  return buf;
}

fs::path manifest_path(const fs::path& dataset) {
  return fs::is_directory(dataset) ? dataset / "manifest.txt" : dataset;
}

Tensor<float> to_tensor(const Image& img) {
  return Tensor<float>(Shape{1, img.channels, img.height, img.width}, img.data);
}

LabImage to_lab(const Tensor<float>& t) {
  const auto& s = t.shape();
  LabImage out(s[2], s[3]);
  const auto d = t.data();
  out.data.assign(d.begin(), d.end());
  return out;
}

std::string check_scale(double p) {
  if (!std::isfinite(p) || !(p >= 1.0)) return "scale must be a finite number >= 1";
  return "";
}

// Largest crop whose downsampled extent is a multiple of 4 (two stride-2
// encoder stages), taken from the top-left corner.
RgbImage crop_for_model(const RgbImage& hr, double p) {
  auto extent = [p](std::int64_t n) {
    const auto low = static_cast<std::int64_t>(std::floor(static_cast<double>(n) / p)) / 4 * 4;
    if (low < 4) return std::int64_t{0};
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(low) * p));
  };
  const auto h = extent(hr.height), w = extent(hr.width);
  if (h == 0 || w == 0) {
    throw DataError("image of " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                    " is too small for scale " + std::to_string(p));
  }
  RgbImage out(h, w);
  for (std::int64_t c = 0; c < 3; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) out.at(c, y, x) = hr.at(c, y, x);
  return out;
}

std::vector<RgbImage> read_dataset(const fs::path& dataset, int limit, std::vector<std::string>* names) {
  const fs::path manifest = manifest_path(dataset);
  if (!fs::exists(manifest)) throw DataError("dataset manifest not found: " + manifest.string());
  std::vector<fs::path> paths;
  try {
    paths = imaging::read_manifest(manifest);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  if (limit > 0 && paths.size() > static_cast<std::size_t>(limit)) paths.resize(static_cast<std::size_t>(limit));
  if (paths.empty()) throw DataError("dataset is empty: " + manifest.string());
  std::vector<RgbImage> images;
  for (const auto& p : paths) {
    try {
      images.push_back(imaging::read_image(p));
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    if (names) names->push_back(p.filename().string());
  }
  return images;
}

RgbImage read_input(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("file not found: " + path.string());
  try {
    return imaging::read_image(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

}  // namespace

std::vector<RgbImage> load_dataset(const RunConfig& config, std::vector<std::string>* names) {
  if (config.data_path == "synth") {
    if (config.data_size < 1) throw UsageError("data.size must be >= 1 for the synthetic dataset");
    if (config.data_image_size < 8) throw UsageError("data.image_size must be >= 8");
    if (names) {
      for (int i = 0; i < config.data_size; ++i) names->push_back(indexed_name("synth", static_cast<std::size_t>(i), ""));
    }
    return imaging::synth_dataset(config.data_seed, config.data_size, config.data_image_size);
  }
  return read_dataset(config.data_path, config.data_size, names);
}

std::unique_ptr<model::ScsNet<float>> load_model(const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
  try {
    const Checkpoint ckpt = read_checkpoint(checkpoint);
    auto net = std::make_unique<model::ScsNet<float>>(model_config_from_json(ckpt.meta.at("model")), 0);
    import_params(net->params(), ckpt);
    return net;
  } catch (const CheckpointError& e) {
    throw DataError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(checkpoint.string() + ": malformed checkpoint metadata (" + e.what() + ")");
  }
}

LabImage colorize(const model::ScsNet<float>& net, const Image& source_l, const LabImage* reference, Mode mode,
                  double p) {
  if (source_l.channels != 1) throw DataError("source must be a single lightness plane");
  if (source_l.height % 4 != 0 || source_l.width % 4 != 0 || source_l.height < 4 || source_l.width < 4) {
    throw DataError("input size " + std::to_string(source_l.height) + "x" + std::to_string(source_l.width) +
                    " must be a positive multiple of 4 in each dimension");
  }
  std::optional<Tensor<float>> ref;
  if (mode == Mode::kRef) {
    if (!reference) throw UsageError("ref mode needs a reference image");
    if (reference->height != source_l.height || reference->width != source_l.width) {
      throw DataError("reference size differs from the source size");
    }
    ref = to_tensor(*reference);
  }
  NoGradScope<float> no_grad;
  return to_lab(net.generator().forward(to_tensor(source_l), ref, mode, p));
}

std::uint64_t eval_reference_seed(std::uint64_t base, std::size_t index) {
  return derive_seed(base, 4, static_cast<std::uint64_t>(index));
}

Predictor model_predictor(const model::ScsNet<float>& net, std::uint64_t reference_seed, imaging::ElasticParams augment) {
  return [&net, reference_seed, augment](const imaging::SamplePair& pair, std::size_t index, Mode mode) {
    LabImage ref;
    if (mode == Mode::kRef) ref = imaging::augment_reference(pair.source_lab, eval_reference_seed(reference_seed, index), augment);
    return imaging::lab_to_rgb(colorize(net, pair.source_l, mode == Mode::kRef ? &ref : nullptr, mode, pair.scale));
  };
}

EvalResult evaluate_dataset(const std::vector<RgbImage>& images, const std::vector<std::string>& names, double p,
                            Mode mode, const Predictor& predictor) {
  if (images.empty()) throw DataError("evaluation dataset is empty");
  if (!names.empty() && names.size() != images.size()) throw std::invalid_argument("one name per image required");
  if (!std::isfinite(p) || p <= 1.0) throw UsageError("eval scale must exceed 1");
  EvalResult result;
  double psnr = 0, ssim = 0, cn = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto pair = imaging::make_pair(crop_for_model(images[i], p), p);
    const RgbImage pred = predictor(pair, i, mode);
    if (pred.height != pair.target_rgb.height || pred.width != pair.target_rgb.width) {
      throw DataError("prediction size differs from target for image " + std::to_string(i));
    }
    const auto report = metrics::evaluate(pred, pair.target_rgb);
    result.rows.push_back({names.empty() ? indexed_name("image", i, "") : names[i], report});
    psnr += report.psnr;
    ssim += report.ssim;
    cn += report.cn;
  }
  const double n = static_cast<double>(images.size());
  result.mean = {psnr / n, ssim / n, cn / n};
  return result;
}

void write_eval_report(const EvalResult& result, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %10s %8s %8s\n", "image", "psnr", "ssim", "cn");
  out << buf;
  auto row = [&](const std::string& name, const metrics::MetricReport& r) {
    std::snprintf(buf, sizeof(buf), "%-24s %10s %8.4f %8.4f\n", name.c_str(), metrics::format_psnr(r.psnr).c_str(),
                  r.ssim, r.cn);
    out << buf;
  };
  for (const auto& r : result.rows) row(r.name, r.report);
  row("mean", result.mean);
  out << "\nimage,psnr,ssim,cn\n";
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f\n", r.name.c_str(), metrics::format_psnr(r.report.psnr).c_str(),
                  r.report.ssim, r.report.cn);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mean,%s,%.6f,%.6f\n", metrics::format_psnr(result.mean.psnr).c_str(),
                result.mean.ssim, result.mean.cn);
  out << buf;
}

void cmd_datagen(const fs::path& out_dir, int n, int size, std::uint64_t seed, std::ostream& log) {
  if (n < 1) throw UsageError("--n must be >= 1");
  if (size < 8) throw UsageError("--size must be >= 8");
  if (out_dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::string> entries;
  for (int i = 0; i < n; ++i) {
    const auto name = indexed_name("img", static_cast<std::size_t>(i), ".png");
    try {
      imaging::write_image(out_dir / name, imaging::synth_image(seed, i, size));
    } catch (const imaging::ImageError& e) {
      throw DataError(e.what());
    }
    entries.push_back(name);
  }
  imaging::write_manifest(out_dir / "manifest.txt", entries);
  log << "wrote " << n << " images to " << out_dir.string() << "\n";
}

void cmd_train(const fs::path& config_path, const fs::path& out_dir, bool resume, std::ostream& log) {
  if (out_dir.empty()) throw UsageError("--out is required");
  RunConfig config = load_run_config(config_path);
  apply_env_overrides(config);
  try {
    config.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(config_path.string() + ": " + e.what());
  }
  if (config.checkpoint_every < 1) throw UsageError(config_path.string() + ": train.checkpoint_every must be >= 1");
  const fs::path latest = out_dir / "latest.ckpt";
  if (resume && !fs::exists(latest)) throw DataError("nothing to resume: " + latest.string() + " not found");

  training::Trainer trainer(config.train, load_dataset(config));
  if (resume) {
    try {
      trainer.load(latest);
    } catch (const CheckpointError& e) {
      throw DataError(e.what());
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream(out_dir / "config.txt") << dump_run_config(config);
  std::ofstream log_file(out_dir / "train.log", resume ? std::ios::app : std::ios::trunc);
  if (!log_file) throw DataError("cannot write " + (out_dir / "train.log").string());

  log << "training " << trainer.total_steps() << " steps (" << trainer.completed_steps() << " done)\n";
  trainer.run(-1, [&](const training::StepLog& l) {
    const auto line = training::format_log_line(l);
    log_file << line << "\n";
    log_file.flush();
    log << line << "\n";
    if (l.step % config.checkpoint_every == 0 || trainer.done()) {
      trainer.save(out_dir / indexed_name("step", static_cast<std::size_t>(l.step), ".ckpt"));
      trainer.save(latest);
    }
  });
  if (!fs::exists(latest)) trainer.save(latest);
}

void cmd_colorize(const fs::path& checkpoint, const fs::path& input, double p, const std::optional<fs::path>& reference,
                  Mode mode, const fs::path& output, std::ostream& log) {
  if (const auto bad = check_scale(p); !bad.empty()) throw UsageError("--scale: " + bad);
  if (mode == Mode::kRef && !reference) throw UsageError("--mode ref requires --ref");
  if (output.empty()) throw UsageError("--out is required");
  if (mode == Mode::kAuto && reference) log << "warning: --ref is ignored in auto mode\n";

  const auto net = load_model(checkpoint);
  const Image source_l = imaging::rgb_to_lab(read_input(input)).l_channel();
  LabImage ref;
  if (mode == Mode::kRef) {
    ref = imaging::rgb_to_lab(read_input(*reference));
    if (ref.height != source_l.height || ref.width != source_l.width) {
      Image resized = imaging::bicubic_resize(ref, source_l.height, source_l.width);
      ref.height = resized.height;
      ref.width = resized.width;
      ref.data = std::move(resized.data);
    }
  }
  const LabImage out = colorize(*net, source_l, mode == Mode::kRef ? &ref : nullptr, mode, p);
  try {
    imaging::write_image(output, imaging::lab_to_rgb(out));
  } catch (const imaging::ImageError& e) {
    throw DataError(e.what());
  }
  log << "wrote " << out.width << "x" << out.height << " image to " << output.string() << "\n";
}

EvalResult cmd_eval(const fs::path& checkpoint, const fs::path& dataset, double p, Mode mode, std::ostream& out) {
  if (!std::isfinite(p) || p <= 1.0) throw UsageError("--scale must exceed 1");
  const auto net = load_model(checkpoint);
  std::vector<std::string> names;
  const auto images = read_dataset(dataset, 0, &names);
  auto result = evaluate_dataset(images, names, p, mode, model_predictor(*net));
  write_eval_report(result, out);
  return result;
}

bool cmd_gradcheck(std::uint64_t seed, int seeds, bool corrupted, std::ostream& out) {
  if (seeds < 1) throw UsageError("--seeds must be >= 1");
  auto cases = gradcheck::primitive_cases();
  if (corrupted) cases.push_back(gradcheck::corrupted_case());
  const auto rows = gradcheck::run_suite(cases, seeds, seed, true);
  out << gradcheck::format_table(rows);
  std::string failed;
  for (const auto& r : rows) {
    if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name;
  }
  if (failed.empty()) {
    out << "all " << rows.size() << " checks passed\n";
    return true;
  }
  out << "FAILED: " << failed << "\n";
  return false;
}

}  // namespace scs::app

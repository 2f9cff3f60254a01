#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scs/imaging.hpp"
#include "scs/metrics.hpp"
#include "scs/model.hpp"
#include "scs/training.hpp"

namespace scs::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Bad flags, bad config keys or values.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable inputs, empty datasets, incompatible checkpoints.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  training::TrainConfig train;
  /// Manifest file, a directory holding manifest.txt, or "synth" for an
  /// in-memory synthetic set.
  std::string data_path = "synth";
  std::uint64_t data_seed = 1;
  /// Number of images to use (0 = whole manifest). Required for "synth".
  int data_size = 64;
  int data_image_size = 64;
  int checkpoint_every = 100;
  model::Mode mode = model::Mode::kAuto;
};

/// Flat "key = value" lines; '#' starts a comment. Unknown keys and
/// unparsable values raise UsageError naming the key and line.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key with its current value, in a form parse_run_config accepts.
std::string dump_run_config(const RunConfig& config);
std::vector<std::string> run_config_keys();
/// SCS_SEED, when set, replaces train.seed.
void apply_env_overrides(RunConfig& config);

/// Loads the HR images named by config (manifest or synthetic).
std::vector<imaging::RgbImage> load_dataset(const RunConfig& config, std::vector<std::string>* names = nullptr);

// Inference.

/// Rebuilds the model recorded in a checkpoint and loads its weights.
std::unique_ptr<model::ScsNet<float>> load_model(const std::filesystem::path& checkpoint);

/// Runs the generator on one image. `source_l` is [1,H,W] lightness in
/// [0,1]; `reference` (Lab, same H and W) is required in Ref mode and
/// ignored in Auto mode.
imaging::LabImage colorize(const model::ScsNet<float>& net, const imaging::Image& source_l,
                           const imaging::LabImage* reference, model::Mode mode, double p);

/// Seed for the self-reference of evaluation image `index`.
std::uint64_t eval_reference_seed(std::uint64_t base, std::size_t index);

/// Produces an RGB prediction for one evaluation pair (image index given
/// for seeding).
using Predictor = std::function<imaging::RgbImage(const imaging::SamplePair&, std::size_t, model::Mode)>;

/// Predictor backed by a trained model; Ref mode uses the elastically
/// augmented downsampled ground truth as reference.
Predictor model_predictor(const model::ScsNet<float>& net, std::uint64_t reference_seed = 1,
                          imaging::ElasticParams augment = {});

struct EvalRow {
  std::string name;
  metrics::MetricReport report;
};

struct EvalResult {
  std::vector<EvalRow> rows;
  metrics::MetricReport mean;
};

EvalResult evaluate_dataset(const std::vector<imaging::RgbImage>& images, const std::vector<std::string>& names,
                            double p, model::Mode mode, const Predictor& predictor);

/// Human-readable table followed by comma-separated rows.
void write_eval_report(const EvalResult& result, std::ostream& out);

// Commands. Each validates its arguments before touching the filesystem and
// throws UsageError / DataError / training::DivergenceError on failure.

void cmd_datagen(const std::filesystem::path& out_dir, int n, int size, std::uint64_t seed, std::ostream& log);
void cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, bool resume,
               std::ostream& log);
void cmd_colorize(const std::filesystem::path& checkpoint, const std::filesystem::path& input, double p,
                  const std::optional<std::filesystem::path>& reference, model::Mode mode,
                  const std::filesystem::path& output, std::ostream& log);
EvalResult cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset, double p,
                    model::Mode mode, std::ostream& out);
/// Returns true when every check passes. With `corrupted`, the negative
/// control case is appended.
bool cmd_gradcheck(std::uint64_t seed, int seeds, bool corrupted, std::ostream& out);

/// Parses argv, runs the chosen command and maps failures to exit codes.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace scs::app

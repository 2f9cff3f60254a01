#include <CLI11.hpp>
#include <fstream>

#include "scs/app.hpp"

namespace scs::app {

namespace {

model::Mode mode_arg(const std::string& text) {
  if (text == "auto") return model::Mode::kAuto;
  if (text == "ref") return model::Mode::kRef;
  throw UsageError("--mode must be auto or ref, got '" + text + "'");
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint colorization and arbitrary-scale super-resolution"};
  app.require_subcommand(1);

  std::string out_path, config_path, ckpt, input, ref, mode = "auto", dataset, report;
  int n = 0, size = 64, seeds = 20;
  std::uint64_t seed = 1;
  double scale = 0;
  bool resume = false, corrupted = false;

  auto* datagen = app.add_subcommand("datagen", "Write a seeded synthetic PNG dataset with a manifest");
  datagen->add_option("--out", out_path, "Output directory")->required();
  datagen->add_option("--n", n, "Number of images")->required();
  datagen->add_option("--size", size, "Image side in pixels");
  datagen->add_option("--seed", seed, "Dataset seed");

  auto* train = app.add_subcommand("train", "Train from a config file");
  train->add_option("--config", config_path, "key = value config file")->required();
  train->add_option("--out", out_path, "Checkpoint directory")->required();
  train->add_flag("--resume", resume, "Continue from <out>/latest.ckpt");

  auto* colorize = app.add_subcommand("colorize", "Colorize and upscale one grayscale image");
  colorize->add_option("--ckpt", ckpt, "Checkpoint")->required();
  colorize->add_option("--input", input, "Grayscale input image")->required();
  colorize->add_option("--scale", scale, "Magnification factor")->required();
  colorize->add_option("--ref", ref, "Color reference image (ref mode)");
  colorize->add_option("--mode", mode, "auto or ref");
  colorize->add_option("--out", out_path, "Output image")->required();

  auto* eval = app.add_subcommand("eval", "Report PSNR, SSIM and colorfulness over a dataset");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--dataset", dataset, "Dataset directory or manifest")->required();
  eval->add_option("--scale", scale, "Magnification factor")->required();
  eval->add_option("--mode", mode, "auto or ref");
  eval->add_option("--report", report, "Also write the report to this file");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  grad->add_option("--seed", seed, "Base seed");
  grad->add_option("--seeds", seeds, "Seeds per check");
  grad->add_flag("--corrupted", corrupted, "Append a case with a deliberately wrong adjoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (app.get_subcommands().size() == 1) err << app.get_subcommands().front()->help();
    return kExitUsage;
  }

  try {
    if (datagen->parsed()) {
      cmd_datagen(out_path, n, size, seed, out);
    } else if (train->parsed()) {
      cmd_train(config_path, out_path, resume, out);
    } else if (colorize->parsed()) {
      std::optional<std::filesystem::path> reference;
      if (!ref.empty()) reference = ref;
      cmd_colorize(ckpt, input, scale, reference, mode_arg(mode), out_path, out);
    } else if (eval->parsed()) {
      const auto m = mode_arg(mode);
      if (report.empty()) {
        cmd_eval(ckpt, dataset, scale, m, out);
      } else {
        const auto result = cmd_eval(ckpt, dataset, scale, m, out);
        std::ofstream file(report);
        if (!file) throw DataError("cannot write " + report);
        write_eval_report(result, file);
      }
    } else if (grad->parsed()) {
      if (!cmd_gradcheck(seed, seeds, corrupted, out)) return kExitNumerical;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const training::DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace scs::app

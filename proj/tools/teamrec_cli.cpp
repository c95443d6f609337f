// Command-line front end: generate / train / recognize / bench / eval.
// Every run is deterministic for a fixed (config, seed, backend).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "teamrec/config.hpp"
#include "teamrec/harness.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string backend = "sequential";
  std::string out_dir;
};

teamrec::FrameworkConfig effective_config(const GlobalArgs& g) {
  teamrec::FrameworkConfig cfg;
  if (!g.config_path.empty()) {
    if (!std::filesystem::exists(g.config_path)) throw teamrec::IoError("missing config file: " + g.config_path);
    cfg = teamrec::parse_config(g.config_path);
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teamwork activity recognition harness"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalArgs g;
  app.add_option("--config", g.config_path, "configuration file (section.key = value lines)");
  app.add_option("--seed", g.seed, "master seed overriding the config");
  app.add_option("--backend", g.backend, "sequential | parallel:N");
  app.add_option("--out", g.out_dir, "output directory overriding the config");

  std::string data_dir, model_dir, dataset_dir, predictions_path;

  auto* generate = app.add_subcommand("generate", "write the synthetic scenario dataset");
  generate->add_option("--data", data_dir, "dataset root (default: paths.data_dir)");

  auto* train = app.add_subcommand("train", "train discretizer, role model and action bank");
  train->add_option("--data", data_dir, "dataset root (default: paths.data_dir)");
  train->add_option("--models", model_dir, "model directory (default: paths.model_dir)");

  auto* recognize = app.add_subcommand("recognize", "label scenarios with the trained models");
  recognize->add_option("--data", dataset_dir, "scenario directory (default: <data_dir>/test)");
  recognize->add_option("--models", model_dir, "model directory (default: paths.model_dir)");

  auto* bench = app.add_subcommand("bench", "pipeline timing, equality and speedup report");

  auto* eval = app.add_subcommand("eval", "confusion matrix from a predictions file");
  eval->add_option("--predictions", predictions_path, "predictions file (default: <out_dir>/predictions.txt)");

  CLI11_PARSE(app, argc, argv);

  try {
    teamrec::FrameworkConfig cfg = effective_config(g);
    const teamrec::Backend backend = teamrec::parse_backend(g.backend);
    if (!data_dir.empty()) cfg.data_dir = data_dir;
    if (!model_dir.empty()) cfg.model_dir = model_dir;

    if (generate->parsed()) {
      teamrec::cmd_generate(cfg);
      std::cout << "dataset written to " << cfg.data_dir << "\n";
    } else if (train->parsed()) {
      const teamrec::TrainReport rep = teamrec::cmd_train(cfg, backend);
      std::cout << rep.log;
      std::cout << "models written to " << cfg.model_dir << "\n";
    } else if (recognize->parsed()) {
      const std::filesystem::path dir =
          dataset_dir.empty() ? std::filesystem::path(cfg.data_dir) / "test" : std::filesystem::path(dataset_dir);
      const teamrec::RecognizeReport rep = teamrec::cmd_recognize(cfg, backend, dir);
      std::cout << teamrec::format_predictions(rep.rows);
      if (rep.confusion) {
        std::cout << "\n" << teamrec::format_confusion_text(*rep.confusion);
        std::printf("macro_recall %.1f%%\n", rep.confusion->macro_recall() * 100.0);
      }
      std::cout << "artifacts written to " << cfg.out_dir << "\n";
    } else if (bench->parsed()) {
      const teamrec::BenchReport rep = teamrec::cmd_bench(cfg, backend);
      std::cout << rep.text;
    } else if (eval->parsed()) {
      const std::filesystem::path path = predictions_path.empty()
                                             ? std::filesystem::path(cfg.out_dir) / "predictions.txt"
                                             : std::filesystem::path(predictions_path);
      const teamrec::ConfusionMatrix cm = teamrec::cmd_eval(cfg, path);
      std::cout << teamrec::format_confusion_text(cm);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mvrl/harness/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::int64_t seed = -1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out, "override the output directory");
}

int run_kind(const std::string& kind, const CommonOpts& opts) {
  mvrl::ExperimentConfig config = mvrl::load_config(opts.config_path);
  if (!config.experiment.empty() && config.experiment != kind)
    throw std::runtime_error("config experiment '" + config.experiment +
                             "' does not match subcommand '" + kind + "'");
  config.experiment = kind;
  if (opts.seed >= 0) config.seed = static_cast<std::uint64_t>(opts.seed);
  if (!opts.out.empty()) config.out = opts.out;
  try {
    mvrl::run_experiment(config);
  } catch (const std::exception& e) {
    // Partial artifacts stay in place; the marker names the failure.
    std::ofstream marker(config.out + "/error.marker");
    marker << e.what() << "\n";
    throw;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view reinforcement learning experiments"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"train-mf", "train-mf-independent", "train-model",
                                          "mb-mpc", "mvpt"};
  std::map<std::string, CommonOpts> opts;
  for (const std::string& kind : kinds) {
    CLI::App* cmd = app.add_subcommand(kind, "run the " + kind + " experiment");
    add_common(cmd, opts[kind]);
  }

  CommonOpts analyze_opts;
  std::string checkpoint;
  CLI::App* analyze = app.add_subcommand("analyze", "latent-space analysis of a trained model");
  analyze->add_option("--checkpoint", checkpoint, "model checkpoint file")->required();
  analyze->add_option("--config", analyze_opts.config_path, "experiment config file")->required();
  analyze->add_option("--seed", analyze_opts.seed, "override the config seed");
  analyze->add_option("--out", analyze_opts.out, "output directory (default: alongside checkpoint)");

  std::vector<std::string> compare_dirs;
  double threshold = 195.0;
  std::string summary_out = "summary.csv";
  CLI::App* compare = app.add_subcommand("compare", "summarize interactions-to-success across runs");
  compare->add_option("dirs", compare_dirs, "completed run directories")->required();
  compare->add_option("--threshold", threshold, "success threshold (default 195)");
  compare->add_option("--out", summary_out, "summary csv path");

  try {
    app.parse(argc, argv);

    for (const std::string& kind : kinds)
      if (app.got_subcommand(kind)) return run_kind(kind, opts[kind]);

    if (app.got_subcommand("analyze")) {
      mvrl::ExperimentConfig config = mvrl::load_config(analyze_opts.config_path);
      if (analyze_opts.seed >= 0) config.seed = static_cast<std::uint64_t>(analyze_opts.seed);
      std::string out_dir = analyze_opts.out;
      if (out_dir.empty()) out_dir = config.out + "/analysis";
      mvrl::analyze_model(checkpoint, config, out_dir);
      std::cout << "analysis written to " << out_dir << "\n";
      return 0;
    }

    if (app.got_subcommand("compare")) {
      mvrl::CompareSummary summary = mvrl::compare_runs(compare_dirs, threshold);
      std::ofstream out(summary_out);
      out << summary.csv;
      std::cout << summary.text_table;
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

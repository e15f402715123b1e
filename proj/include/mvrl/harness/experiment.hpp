#pragma once

#include <string>
#include <vector>

#include "mvrl/harness/config.hpp"

namespace mvrl {

// Executes the configured pipeline, writing metrics.csv, losses.csv,
// checkpoints, SVG learning-curve plots, and config.resolved under
// config.out. Fully reproducible from (config, seed).
void run_experiment(const ExperimentConfig& config);

struct CompareSummary {
  std::string csv;         // per-method aggregation
  std::string text_table;  // aligned table with per-run details
};

// Interactions-to-success per run (first cadence point whose aggregate view
// reaches the threshold), aggregated per method with mean and std over seeds.
CompareSummary compare_runs(const std::vector<std::string>& run_dirs, double threshold = 195.0);

// Emits per-dim log-variance, cross-view mean-distance, key-set, and decoder
// saliency tables (CSV + SVG) for a trained model checkpoint.
void analyze_model(const std::string& checkpoint_path, const ExperimentConfig& config,
                   const std::string& out_dir);

}  // namespace mvrl

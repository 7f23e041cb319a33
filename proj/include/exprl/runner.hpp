#pragma once

// Experiment orchestration: seed sweeps with per-run output directories,
// aggregate curves and AUC tables, strategy comparisons, the tap-layer
// sweep, and the raw-pixel ablation.

#include <cstdint>
#include <string>
#include <vector>

#include "exprl/config.hpp"
#include "exprl/metrics.hpp"

namespace exprl::runner {

struct RunResult {
  std::uint64_t seed = 0;
  metrics::LearningCurve curve;
  std::vector<metrics::EpochResidual> residuals;
  int final_sigma_version = 0;
  std::string run_dir;  // empty when files were not written
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  metrics::LearningCurve aggregate;
  double ref_max = 0.0;
  std::string output_dir;
};

// One run per seed (parallel up to cfg.jobs); with write_files, each run
// gets output_dir/seed_<k>/ with manifest.json + curve.csv (+ bonuses.csv,
// checkpoints), followed by aggregate_curve.csv and auc_table.csv.
ExperimentResult run_experiment(const config::ExperimentConfig& cfg, bool write_files = true);

struct CompareEntry {
  std::string strategy;
  std::string dir;
  double auc100 = 0.0;
  double final_score = 0.0;
};

struct CompareReport {
  std::vector<CompareEntry> entries;
  std::string winner;  // strategy name or "tie"
};

// Reads >= 2 experiment output directories (aggregate curve + manifests),
// refuses mismatched env configs, writes comparison.csv + comparison.svg
// into out_dir and declares the winner by AUC-100.
CompareReport compare(const std::vector<std::string>& experiment_dirs, const std::string& out_dir);

struct TapEntry {
  int tap_index = 0;
  int encode_dim = 0;
  double auc100 = 0.0;
  double final_score = 0.0;
};

struct TapSweepReport {
  std::vector<TapEntry> entries;
};

TapSweepReport tap_sweep(const config::ExperimentConfig& cfg, const std::vector<int>& tap_indices,
                         bool write_files = true);

struct AblationRow {
  std::uint64_t seed = 0;
  double cv_raw = 0.0;          // coefficient of variation of e_bar, raw pixels
  double cv_encoded = 0.0;      // same, learned encoder
  double cv_bonus_raw = 0.0;    // CV of the decayed bonus term
  double cv_bonus_encoded = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  int raw_lower_count = 0;  // seeds with cv_raw < cv_encoded
};

// Runs the bonus pipeline twice per seed (raw-pixel identity encoding vs the
// configured learned encoder) on identical seeds and schedules, and reports
// per-seed bonus dispersion. Writes ablation.csv when write_files is set.
AblationReport ablate_pixels(const config::ExperimentConfig& cfg, bool write_files = true);

// AUC table for existing curve.csv files (the `auc` subcommand): one CSV row
// per file, strategy/seed/ref_max resolved from the sibling manifest.json.
std::string auc_table_for_files(const std::vector<std::string>& curve_files);

void dump_frames(const config::EnvConfig& env_cfg, int n_frames, std::uint64_t seed,
                 const std::string& out_dir);

}  // namespace exprl::runner

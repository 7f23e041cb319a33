// Command-line experiment runner. Exit codes: 0 success, 1 runtime failure,
// 2 configuration error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exprl/config.hpp"
#include "exprl/io.hpp"
#include "exprl/runner.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ','))
    if (!item.empty()) seeds.push_back(std::stoull(item));
  return seeds;
}

exprl::config::EnvConfig env_config_from_flags(const std::string& kind, int length, int width,
                                               int height) {
  exprl::config::EnvConfig env;
  if (kind == "pixel_chain") env.kind = exprl::config::EnvKind::PixelChain;
  else if (kind == "grid_maze") env.kind = exprl::config::EnvKind::GridMaze;
  else if (kind == "locked_treasure") env.kind = exprl::config::EnvKind::LockedTreasure;
  else throw exprl::config::ConfigError("dump-frames: unknown env kind '" + kind + "'");
  env.length = length;
  env.width = width;
  env.height = height;
  return env;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exprl: model-prediction exploration bonuses on pixel MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds_csv;
  std::string output_override;
  bool paper_scale = false;
  bool log_bonuses = false;
  int jobs = -1;

  auto add_config_options = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "experiment config file (or a manifest.json)")
        ->required();
    cmd->add_option("--seeds", seeds_csv, "comma-separated seed list override");
    cmd->add_option("--output", output_override, "output directory override");
    cmd->add_option("--jobs", jobs, "max concurrent runs (0 = hardware)");
    cmd->add_flag("--paper-scale", paper_scale,
                  "use the paper protocol: 50,000-step epochs, 10,000 test steps, 100 epochs");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment across seeds");
  add_config_options(run_cmd);
  run_cmd->add_flag("--log-bonuses", log_bonuses, "write per-step bonuses.csv for each run");

  CLI::App* compare_cmd = app.add_subcommand("compare", "compare experiment directories");
  std::vector<std::string> compare_dirs;
  std::string compare_out = "comparison";
  compare_cmd->add_option("dirs", compare_dirs, "experiment output directories")
      ->expected(2, -1)
      ->required();
  compare_cmd->add_option("--output", compare_out, "directory for comparison.csv/svg");

  CLI::App* auc_cmd = app.add_subcommand("auc", "print an AUC-100 table for curve.csv files");
  std::vector<std::string> curve_files;
  auc_cmd->add_option("files", curve_files, "curve.csv files")->required();

  CLI::App* tap_cmd = app.add_subcommand("tap-sweep", "sweep the encoder tap layer");
  std::string taps_csv = "4,6";
  add_config_options(tap_cmd);
  tap_cmd->add_option("--taps", taps_csv, "comma-separated tap indices (default 4,6)");

  CLI::App* ablate_cmd =
      app.add_subcommand("ablate-pixels", "raw-pixel vs encoded bonus dispersion report");
  add_config_options(ablate_cmd);

  CLI::App* dump_cmd = app.add_subcommand("dump-frames", "write random-play frames as PGM files");
  std::string dump_env = "pixel_chain";
  int dump_length = 20, dump_width = 9, dump_height = 9, dump_frames_n = 32;
  std::uint64_t dump_seed = 1;
  std::string dump_out = "frames";
  dump_cmd->add_option("--env", dump_env, "pixel_chain | grid_maze | locked_treasure");
  dump_cmd->add_option("--length", dump_length, "pixel_chain length");
  dump_cmd->add_option("--width", dump_width, "maze width");
  dump_cmd->add_option("--height", dump_height, "maze height");
  dump_cmd->add_option("--frames", dump_frames_n, "number of frames");
  dump_cmd->add_option("--seed", dump_seed, "random-play seed");
  dump_cmd->add_option("--output", dump_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto load_with_overrides = [&]() {
    exprl::config::ExperimentConfig cfg = exprl::config::load_config_file(config_path);
    if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (jobs >= 0) cfg.jobs = jobs;
    if (paper_scale) exprl::config::apply_paper_scale(cfg);
    if (log_bonuses) cfg.log_bonuses = true;
    cfg.resolve_and_validate();
    return cfg;
  };

  try {
    if (run_cmd->parsed()) {
      const exprl::config::ExperimentConfig cfg = load_with_overrides();
      const exprl::runner::ExperimentResult result = exprl::runner::run_experiment(cfg);
      const exprl::metrics::Auc100Result auc =
          exprl::metrics::auc100(result.aggregate, result.ref_max);
      std::printf("%zu run(s) under %s; aggregate auc100 = %.6f, final score = %.6f\n",
                  result.runs.size(), result.output_dir.c_str(), auc.value,
                  result.aggregate.points.back().score);
    } else if (compare_cmd->parsed()) {
      const exprl::runner::CompareReport report = exprl::runner::compare(compare_dirs, compare_out);
      for (const exprl::runner::CompareEntry& e : report.entries)
        std::printf("%s,%s,%.6f,%.6f\n", e.strategy.c_str(), e.dir.c_str(), e.auc100,
                    e.final_score);
      std::printf("winner,%s\n", report.winner.c_str());
    } else if (auc_cmd->parsed()) {
      std::fputs(exprl::runner::auc_table_for_files(curve_files).c_str(), stdout);
    } else if (tap_cmd->parsed()) {
      const exprl::config::ExperimentConfig cfg = load_with_overrides();
      std::vector<int> taps;
      for (std::uint64_t v : parse_seed_list(taps_csv)) taps.push_back(static_cast<int>(v));
      const exprl::runner::TapSweepReport report = exprl::runner::tap_sweep(cfg, taps);
      std::printf("tap_index,encode_dim,auc100,final_score\n");
      for (const exprl::runner::TapEntry& e : report.entries)
        std::printf("%d,%d,%.6f,%.6f\n", e.tap_index, e.encode_dim, e.auc100, e.final_score);
    } else if (ablate_cmd->parsed()) {
      const exprl::config::ExperimentConfig cfg = load_with_overrides();
      const exprl::runner::AblationReport report = exprl::runner::ablate_pixels(cfg);
      std::printf("seed,cv_raw,cv_encoded,cv_bonus_raw,cv_bonus_encoded\n");
      for (const exprl::runner::AblationRow& r : report.rows)
        std::printf("%llu,%.6f,%.6f,%.6f,%.6f\n", static_cast<unsigned long long>(r.seed),
                    r.cv_raw, r.cv_encoded, r.cv_bonus_raw, r.cv_bonus_encoded);
      std::printf("raw_lower_count,%d\n", report.raw_lower_count);
    } else if (dump_cmd->parsed()) {
      exprl::runner::dump_frames(
          env_config_from_flags(dump_env, dump_length, dump_width, dump_height), dump_frames_n,
          dump_seed, dump_out);
      std::printf("wrote %d frame(s) to %s\n", dump_frames_n, dump_out.c_str());
    }
  } catch (const exprl::config::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

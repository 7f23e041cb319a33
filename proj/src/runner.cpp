#include "exprl/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "exprl/io.hpp"

namespace exprl::runner {

namespace fs = std::filesystem;

namespace {

std::string timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

void write_checkpoint(agent::Run& run, const std::string& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/q.net", std::ios::binary);
    run.q_net().save(out);
  }
  if (auto* dyn = run.dynamics_model()) {
    std::ofstream out(dir + "/dynamics.net", std::ios::binary);
    dyn->net().save(out);
  }
  if (const auto* handle = run.encoder_handle())
    encoder::save_encoder(*handle, run.autoencoder()->spec(), dir + "/encoder");
}

RunResult execute_single(const config::ExperimentConfig& cfg, std::uint64_t seed,
                         bool write_files) {
  const std::string started = timestamp_now();
  agent::Run run(cfg.env.make(), cfg.agent, cfg.strategy, cfg.encoder, cfg.dynamics, seed);
  run.set_bonus_logging(cfg.log_bonuses);

  std::string run_dir;
  if (write_files) {
    run_dir = cfg.output_dir + "/" + seed_dir_name(seed);
    fs::create_directories(run_dir);
  }
  for (int epoch = 1; epoch <= cfg.agent.total_epochs; ++epoch) {
    run.run_epoch();
    if (write_files && cfg.agent.checkpoint_period > 0 &&
        epoch % cfg.agent.checkpoint_period == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
      write_checkpoint(run, run_dir + "/checkpoints/" + name);
    }
  }

  RunResult result;
  result.seed = seed;
  result.curve = run.curve();
  result.residuals = run.residuals();
  result.final_sigma_version = run.sigma_version();
  result.run_dir = run_dir;

  if (write_files) {
    std::vector<io::CurveRow> rows;
    for (std::size_t i = 0; i < result.curve.points.size(); ++i) {
      io::CurveRow row;
      row.epoch = result.curve.points[i].epoch;
      row.mean_test_score = result.curve.points[i].score;
      row.mean_residual = result.residuals[i].mean;
      row.residual_cv = result.residuals[i].cv;
      row.sigma_version = 0;
      rows.push_back(row);
    }
    // sigma_version per epoch is reconstructed from the retrain schedule so
    // the curve file carries it without the run keeping a separate log.
    int version = result.final_sigma_version > 0 ? 1 : 0;
    for (auto& row : rows) {
      if (cfg.strategy.kind == explore::StrategyKind::ModelBonus &&
          cfg.encoder.regime == agent::EncoderRegime::Dynamic &&
          row.epoch % cfg.encoder.retrain_period == 0)
        ++version;
      row.sigma_version = version;
    }
    io::write_curve_csv(run_dir + "/curve.csv", rows);
    if (cfg.log_bonuses) {
      std::vector<std::vector<std::string>> bonus_rows;
      bonus_rows.reserve(run.bonus_log().size());
      for (const agent::BonusLogRow& b : run.bonus_log())
        bonus_rows.push_back({std::to_string(b.t), io::format_double(b.e),
                              io::format_double(b.e_bar), io::format_double(b.max_e),
                              io::format_double(b.r), io::format_double(b.r_bonus)});
      io::write_csv(run_dir + "/bonuses.csv", {"t", "e", "e_bar", "max_e", "r", "r_bonus"},
                    bonus_rows);
    }
    std::ofstream manifest(run_dir + "/manifest.json", std::ios::binary);
    manifest << config::manifest_json(cfg, seed, result.final_sigma_version, started,
                                      timestamp_now());
  }
  return result;
}

void run_all_seeds(const config::ExperimentConfig& cfg, bool write_files,
                   std::vector<RunResult>& results) {
  results.resize(cfg.seeds.size());
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cfg.seeds.size()));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      try {
        results[i] = execute_single(cfg, cfg.seeds[i], write_files);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty())
          first_error = "seed " + std::to_string(cfg.seeds[i]) + ": " + e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (!first_error.empty()) throw std::runtime_error("run failed at " + first_error);
}

metrics::LearningCurve aggregate_of(const std::vector<RunResult>& results) {
  std::vector<metrics::LearningCurve> curves;
  curves.reserve(results.size());
  for (const RunResult& r : results) curves.push_back(r.curve);
  return metrics::aggregate_trials(curves);
}

void write_aggregate_files(const config::ExperimentConfig& cfg, const ExperimentResult& result) {
  std::vector<std::vector<std::string>> agg_rows;
  for (const metrics::CurvePoint& p : result.aggregate.points)
    agg_rows.push_back({std::to_string(p.epoch), io::format_double(p.score)});
  io::write_csv(cfg.output_dir + "/aggregate_curve.csv", {"epoch", "mean_test_score"}, agg_rows);

  std::vector<std::vector<std::string>> auc_rows;
  for (const RunResult& r : result.runs) {
    const metrics::Auc100Result auc = metrics::auc100(r.curve, result.ref_max);
    auc_rows.push_back({explore::strategy_name(cfg.strategy.kind), std::to_string(r.seed),
                        io::format_double(auc.value),
                        io::format_double(r.curve.points.back().score)});
  }
  const metrics::Auc100Result agg_auc = metrics::auc100(result.aggregate, result.ref_max);
  auc_rows.push_back({explore::strategy_name(cfg.strategy.kind), "aggregate",
                      io::format_double(agg_auc.value),
                      io::format_double(result.aggregate.points.back().score)});
  io::write_csv(cfg.output_dir + "/auc_table.csv", {"strategy", "seed", "auc100", "final_score"},
                auc_rows);
}

}  // namespace

ExperimentResult run_experiment(const config::ExperimentConfig& cfg_in, bool write_files) {
  config::ExperimentConfig cfg = cfg_in;
  cfg.resolve_and_validate();
  if (cfg.agent.total_epochs < 2)
    throw config::ConfigError("config: total_epochs must be >= 2 for AUC reporting");
  ExperimentResult result;
  result.output_dir = cfg.output_dir;
  result.ref_max = cfg.env.make()->optimal_return();
  if (write_files) fs::create_directories(cfg.output_dir);
  run_all_seeds(cfg, write_files, result.runs);
  result.aggregate = aggregate_of(result.runs);
  if (write_files) write_aggregate_files(cfg, result);
  return result;
}

namespace {

struct LoadedExperiment {
  std::string dir;
  std::string strategy;
  std::map<std::string, std::string> env_keys;
  metrics::LearningCurve aggregate;
  double ref_max = 0.0;
};

LoadedExperiment load_experiment_dir(const std::string& dir) {
  LoadedExperiment exp;
  exp.dir = dir;
  const std::string agg_path = dir + "/aggregate_curve.csv";
  if (!fs::exists(agg_path))
    throw std::runtime_error("compare: " + agg_path + " not found (run the experiment first)");
  exp.aggregate = io::curve_from_rows(io::read_curve_csv(agg_path));

  // Any seed manifest carries the resolved config.
  std::string manifest_path;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      manifest_path = (entry.path() / "manifest.json").string();
      break;
    }
  }
  if (manifest_path.empty())
    throw std::runtime_error("compare: no seed manifest under " + dir);
  const config::ExperimentConfig cfg = config::load_config_file(manifest_path);
  exp.strategy = explore::strategy_name(cfg.strategy.kind);
  for (const auto& [key, value] : config::config_to_keys(cfg))
    if (key.rfind("env.", 0) == 0) exp.env_keys[key] = value;
  exp.ref_max = cfg.env.make()->optimal_return();
  return exp;
}

}  // namespace

CompareReport compare(const std::vector<std::string>& experiment_dirs,
                      const std::string& out_dir) {
  if (experiment_dirs.size() < 2)
    throw std::invalid_argument("compare: needs at least 2 experiment directories");
  std::vector<LoadedExperiment> exps;
  exps.reserve(experiment_dirs.size());
  for (const std::string& dir : experiment_dirs) exps.push_back(load_experiment_dir(dir));
  for (std::size_t i = 1; i < exps.size(); ++i)
    if (exps[i].env_keys != exps[0].env_keys)
      throw std::runtime_error("compare: environment configs differ between " + exps[0].dir +
                               " and " + exps[i].dir + "; refusing to compare");

  CompareReport report;
  double best = -1e300;
  bool tie = false;
  for (const LoadedExperiment& exp : exps) {
    CompareEntry entry;
    entry.strategy = exp.strategy;
    entry.dir = exp.dir;
    entry.auc100 = metrics::auc100(exp.aggregate, exp.ref_max).value;
    entry.final_score = exp.aggregate.points.back().score;
    if (entry.auc100 > best) {
      best = entry.auc100;
      report.winner = entry.strategy;
      tie = false;
    } else if (entry.auc100 == best) {
      tie = true;
    }
    report.entries.push_back(entry);
  }
  if (tie) report.winner = "tie";

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  for (const CompareEntry& e : report.entries)
    rows.push_back({e.strategy, e.dir, io::format_double(e.auc100),
                    io::format_double(e.final_score)});
  rows.push_back({"winner", report.winner, "", ""});
  io::write_csv(out_dir + "/comparison.csv", {"strategy", "dir", "auc100", "final_score"}, rows);

  std::vector<io::Series> series;
  for (const LoadedExperiment& exp : exps) {
    io::Series s;
    s.label = exp.strategy;
    for (const metrics::CurvePoint& p : exp.aggregate.points) {
      s.x.push_back(p.epoch);
      s.y.push_back(p.score);
    }
    series.push_back(std::move(s));
  }
  io::write_svg_chart(out_dir + "/comparison.svg", "mean test score per epoch", "epoch",
                      "mean test score", series);
  return report;
}

TapSweepReport tap_sweep(const config::ExperimentConfig& cfg_in,
                         const std::vector<int>& tap_indices, bool write_files) {
  config::ExperimentConfig base = cfg_in;
  base.resolve_and_validate();
  if (base.strategy.kind != explore::StrategyKind::ModelBonus)
    throw config::ConfigError("tap-sweep: strategy.kind must be model_bonus");
  if (tap_indices.empty()) throw config::ConfigError("tap-sweep: no tap indices given");
  const int n_hidden = base.encoder.hidden_widths.empty()
                           ? 8
                           : static_cast<int>(base.encoder.hidden_widths.size());
  for (int tap : tap_indices)
    if (tap < 1 || tap > n_hidden)
      throw config::ConfigError("tap-sweep: tap index " + std::to_string(tap) + " outside 1.." +
                                std::to_string(n_hidden));

  TapSweepReport report;
  std::vector<io::Series> series;
  for (int tap : tap_indices) {
    config::ExperimentConfig cfg = base;
    cfg.encoder.tap_index = tap;
    cfg.output_dir = base.output_dir + "/tap_" + std::to_string(tap);
    const ExperimentResult result = run_experiment(cfg, write_files);
    TapEntry entry;
    entry.tap_index = tap;
    const encoder::AutoencoderSpec spec = [&] {
      encoder::AutoencoderSpec s = encoder::default_spec(cfg.env.make()->frame_size());
      if (!cfg.encoder.hidden_widths.empty()) s.hidden_widths = cfg.encoder.hidden_widths;
      s.tap_index = tap;
      s.bottleneck_index = cfg.encoder.bottleneck_index;
      return s;
    }();
    entry.encode_dim = spec.tap_width();
    entry.auc100 = metrics::auc100(result.aggregate, result.ref_max).value;
    entry.final_score = result.aggregate.points.back().score;
    report.entries.push_back(entry);
    io::Series s;
    s.label = "tap " + std::to_string(tap);
    for (const metrics::CurvePoint& p : result.aggregate.points) {
      s.x.push_back(p.epoch);
      s.y.push_back(p.score);
    }
    series.push_back(std::move(s));
  }
  if (write_files) {
    fs::create_directories(base.output_dir);
    std::vector<std::vector<std::string>> rows;
    for (const TapEntry& e : report.entries)
      rows.push_back({std::to_string(e.tap_index), std::to_string(e.encode_dim),
                      io::format_double(e.auc100), io::format_double(e.final_score)});
    io::write_csv(base.output_dir + "/tap_sweep.csv",
                  {"tap_index", "encode_dim", "auc100", "final_score"}, rows);
    io::write_svg_chart(base.output_dir + "/tap_sweep.svg", "tap-layer sweep", "epoch",
                        "mean test score", series);
  }
  return report;
}

namespace {

// CV statistics of one bonus-pipeline run; bonus logging is forced on.
struct BonusCv {
  double cv_ebar = 0.0;
  double cv_bonus = 0.0;
};

BonusCv bonus_cv_of_run(const config::ExperimentConfig& cfg, std::uint64_t seed) {
  agent::Run run(cfg.env.make(), cfg.agent, cfg.strategy, cfg.encoder, cfg.dynamics, seed);
  run.set_bonus_logging(true);
  run.execute();
  std::vector<double> ebars;
  std::vector<double> bonuses;
  ebars.reserve(run.bonus_log().size());
  for (const agent::BonusLogRow& row : run.bonus_log()) {
    ebars.push_back(row.e_bar);
    bonuses.push_back(row.r_bonus - row.r);
  }
  BonusCv cv;
  cv.cv_ebar = metrics::sample_stats(ebars).cv;
  cv.cv_bonus = metrics::sample_stats(bonuses).cv;
  return cv;
}

}  // namespace

AblationReport ablate_pixels(const config::ExperimentConfig& cfg_in, bool write_files) {
  config::ExperimentConfig cfg = cfg_in;
  cfg.resolve_and_validate();
  if (cfg.strategy.kind != explore::StrategyKind::ModelBonus)
    throw config::ConfigError("ablate-pixels: strategy.kind must be model_bonus");

  config::ExperimentConfig raw_cfg = cfg;
  raw_cfg.encoder.regime = agent::EncoderRegime::RawPixels;
  config::ExperimentConfig enc_cfg = cfg;
  if (enc_cfg.encoder.regime == agent::EncoderRegime::RawPixels)
    enc_cfg.encoder.regime = agent::EncoderRegime::Dynamic;

  AblationReport report;
  for (std::uint64_t seed : cfg.seeds) {
    const BonusCv raw = bonus_cv_of_run(raw_cfg, seed);
    const BonusCv enc = bonus_cv_of_run(enc_cfg, seed);
    AblationRow row;
    row.seed = seed;
    row.cv_raw = raw.cv_ebar;
    row.cv_encoded = enc.cv_ebar;
    row.cv_bonus_raw = raw.cv_bonus;
    row.cv_bonus_encoded = enc.cv_bonus;
    if (row.cv_raw < row.cv_encoded) ++report.raw_lower_count;
    report.rows.push_back(row);
  }
  if (write_files) {
    fs::create_directories(cfg.output_dir);
    std::vector<std::vector<std::string>> rows;
    for (const AblationRow& r : report.rows)
      rows.push_back({std::to_string(r.seed), io::format_double(r.cv_raw),
                      io::format_double(r.cv_encoded), io::format_double(r.cv_bonus_raw),
                      io::format_double(r.cv_bonus_encoded)});
    rows.push_back({"raw_lower_count", std::to_string(report.raw_lower_count), "", "", ""});
    io::write_csv(cfg.output_dir + "/ablation.csv",
                  {"seed", "cv_raw", "cv_encoded", "cv_bonus_raw", "cv_bonus_encoded"}, rows);
  }
  return report;
}

std::string auc_table_for_files(const std::vector<std::string>& curve_files) {
  std::string out = "strategy,seed,auc100,final_score\n";
  for (const std::string& path : curve_files) {
    const metrics::LearningCurve curve = io::curve_from_rows(io::read_curve_csv(path));
    std::string strategy = "unknown";
    std::string seed = "-";
    double ref_max = 1.0;
    const fs::path manifest_path = fs::path(path).parent_path() / "manifest.json";
    if (fs::exists(manifest_path)) {
      const config::ExperimentConfig cfg = config::load_config_file(manifest_path.string());
      strategy = explore::strategy_name(cfg.strategy.kind);
      ref_max = cfg.env.make()->optimal_return();
      std::ifstream in(manifest_path);
      nlohmann::json manifest;
      in >> manifest;
      if (manifest.contains("seed")) seed = std::to_string(manifest["seed"].get<std::uint64_t>());
    }
    const metrics::Auc100Result auc = metrics::auc100(curve, ref_max);
    out += strategy + "," + seed + "," + io::format_double(auc.value) + "," +
           io::format_double(curve.points.back().score) + "\n";
  }
  return out;
}

void dump_frames(const config::EnvConfig& env_cfg, int n_frames, std::uint64_t seed,
                 const std::string& out_dir) {
  if (n_frames < 1) throw std::invalid_argument("dump-frames: n_frames must be >= 1");
  fs::create_directories(out_dir);
  std::unique_ptr<envs::MdpEnv> env = env_cfg.make();
  Rng rng(seed);
  envs::Frame frame = env->reset(rng.next_u64());
  for (int i = 0; i < n_frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.pgm", i);
    envs::write_pgm(frame, out_dir + "/" + name);
    if (env->episode_over())
      frame = env->reset(rng.next_u64());
    else
      frame = env->step(rng.next_index(env->num_actions())).frame;
  }
}

}  // namespace exprl::runner

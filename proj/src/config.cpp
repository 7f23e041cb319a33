#include "exprl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace exprl::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const std::string& item : split_commas(value))
    out.push_back(static_cast<int>(parse_int(key, item)));
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::unique_ptr<envs::MdpEnv> EnvConfig::make() const {
  switch (kind) {
    case EnvKind::PixelChain: return std::make_unique<envs::PixelChain>(length);
    case EnvKind::GridMaze: return std::make_unique<envs::GridMaze>(width, height);
    case EnvKind::LockedTreasure: return std::make_unique<envs::LockedTreasure>(width, height);
  }
  throw ConfigError("config: unknown env kind");
}

std::string EnvConfig::describe() const { return make()->name(); }

void ExperimentConfig::resolve_and_validate() {
  if (strategy.kind == explore::StrategyKind::ModelBonus && strategy.decay_c == 0.0)
    strategy.decay_c = 1.0 / static_cast<double>(agent.epoch_length);
  try {
    agent.validate();
    strategy.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  switch (env.kind) {
    case EnvKind::PixelChain:
      if (env.length < 2) throw ConfigError("config: env.length must be >= 2");
      break;
    case EnvKind::GridMaze:
    case EnvKind::LockedTreasure:
      if (env.width < 3 || env.height < 3)
        throw ConfigError("config: env.width/env.height must be >= 3");
      break;
  }
  if (encoder.tap_index < 1) throw ConfigError("config: encoder.tap_index must be >= 1");
  const int n_hidden = encoder.hidden_widths.empty()
                           ? 8
                           : static_cast<int>(encoder.hidden_widths.size());
  if (encoder.tap_index > n_hidden)
    throw ConfigError("config: encoder.tap_index outside 1.." + std::to_string(n_hidden));
  if (encoder.bottleneck_index < 1 || encoder.bottleneck_index > n_hidden)
    throw ConfigError("config: encoder.bottleneck_index outside 1.." + std::to_string(n_hidden));
  if (encoder.retrain_period < 1) throw ConfigError("config: encoder.retrain_period must be >= 1");
  if (encoder.dataset_frames < 1) throw ConfigError("config: encoder.dataset_frames must be >= 1");
  if (encoder.train_epochs < 0 || encoder.retrain_epochs < 0)
    throw ConfigError("config: encoder epochs must be >= 0");
  if (!(encoder.lr > 0.0)) throw ConfigError("config: encoder.lr must be positive");
  if (!(dynamics.lr > 0.0)) throw ConfigError("config: dynamics.lr must be positive");
  if (dynamics.epochs_per_retrain < 0)
    throw ConfigError("config: dynamics.epochs_per_retrain must be >= 0");
  if (!dynamics.hidden_widths.empty() && dynamics.hidden_widths.size() != 2)
    throw ConfigError("config: dynamics.hidden_widths needs exactly two entries");
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (output_dir.empty()) throw ConfigError("config: output_dir must not be empty");
  if (jobs < 0) throw ConfigError("config: jobs must be >= 0");
}

namespace {

// The strategy-specific keys; a config may only set the ones matching its
// strategy.kind.
const std::set<std::string> kEpsilonKeys = {"strategy.epsilon_start", "strategy.epsilon_end",
                                            "strategy.epsilon_anneal_steps"};
const std::set<std::string> kBoltzmannKeys = {"strategy.temperature"};
const std::set<std::string> kThompsonKeys = {"strategy.dropout_rate"};
const std::set<std::string> kBonusKeys = {"strategy.beta", "strategy.decay_c"};

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "env.kind") {
    if (value == "pixel_chain") cfg.env.kind = EnvKind::PixelChain;
    else if (value == "grid_maze") cfg.env.kind = EnvKind::GridMaze;
    else if (value == "locked_treasure") cfg.env.kind = EnvKind::LockedTreasure;
    else throw ConfigError("config: unknown env.kind '" + value + "'");
  } else if (key == "env.length") {
    cfg.env.length = static_cast<int>(parse_int(key, value));
  } else if (key == "env.width") {
    cfg.env.width = static_cast<int>(parse_int(key, value));
  } else if (key == "env.height") {
    cfg.env.height = static_cast<int>(parse_int(key, value));
  } else if (key == "strategy.kind") {
    try {
      cfg.strategy.kind = explore::strategy_from_name(value);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "strategy.epsilon_start") {
    cfg.strategy.epsilon.start = parse_double(key, value);
  } else if (key == "strategy.epsilon_end") {
    cfg.strategy.epsilon.end = parse_double(key, value);
  } else if (key == "strategy.epsilon_anneal_steps") {
    cfg.strategy.epsilon.anneal_steps = parse_int(key, value);
  } else if (key == "strategy.temperature") {
    cfg.strategy.temperature = parse_double(key, value);
  } else if (key == "strategy.dropout_rate") {
    cfg.strategy.dropout_rate = parse_double(key, value);
  } else if (key == "strategy.beta") {
    cfg.strategy.beta = parse_double(key, value);
  } else if (key == "strategy.decay_c") {
    cfg.strategy.decay_c = parse_double(key, value);
  } else if (key == "agent.gamma") {
    cfg.agent.gamma = parse_double(key, value);
  } else if (key == "agent.epoch_length") {
    cfg.agent.epoch_length = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.test_steps") {
    cfg.agent.test_steps = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.total_epochs") {
    cfg.agent.total_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.replay_batch") {
    cfg.agent.replay_batch = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.replay_updates_per_epoch") {
    cfg.agent.replay_updates_per_epoch = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.target_sync_period") {
    cfg.agent.target_sync_period = static_cast<int>(parse_int(key, value));
  } else if (key == "agent.q_hidden_widths") {
    cfg.agent.q_hidden_widths = parse_int_list(key, value);
  } else if (key == "agent.lr") {
    cfg.agent.lr = parse_double(key, value);
  } else if (key == "agent.momentum") {
    cfg.agent.momentum = parse_double(key, value);
  } else if (key == "agent.capacity") {
    cfg.agent.capacity = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "agent.checkpoint_period") {
    cfg.agent.checkpoint_period = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.regime") {
    try {
      cfg.encoder.regime = agent::regime_from_name(value);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "encoder.hidden_widths") {
    cfg.encoder.hidden_widths = parse_int_list(key, value);
  } else if (key == "encoder.tap_index") {
    cfg.encoder.tap_index = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.bottleneck_index") {
    cfg.encoder.bottleneck_index = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.train_epochs") {
    cfg.encoder.train_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.retrain_epochs") {
    cfg.encoder.retrain_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.retrain_period") {
    cfg.encoder.retrain_period = static_cast<int>(parse_int(key, value));
  } else if (key == "encoder.lr") {
    cfg.encoder.lr = parse_double(key, value);
  } else if (key == "encoder.dataset_frames") {
    cfg.encoder.dataset_frames = static_cast<int>(parse_int(key, value));
  } else if (key == "dynamics.hidden_widths") {
    cfg.dynamics.hidden_widths = parse_int_list(key, value);
  } else if (key == "dynamics.lr") {
    cfg.dynamics.lr = parse_double(key, value);
  } else if (key == "dynamics.epochs_per_retrain") {
    cfg.dynamics.epochs_per_retrain = static_cast<int>(parse_int(key, value));
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const std::string& item : split_commas(value))
      cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "log_bonuses") {
    cfg.log_bonuses = parse_bool(key, value);
  } else if (key == "jobs") {
    cfg.jobs = static_cast<int>(parse_int(key, value));
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void check_strategy_fields(const explore::StrategyKind kind,
                           const std::set<std::string>& seen) {
  std::set<std::string> allowed;
  switch (kind) {
    case explore::StrategyKind::EpsilonGreedy: allowed = kEpsilonKeys; break;
    case explore::StrategyKind::Boltzmann: allowed = kBoltzmannKeys; break;
    case explore::StrategyKind::Thompson: allowed = kThompsonKeys; break;
    case explore::StrategyKind::ModelBonus:
      allowed = kBonusKeys;
      allowed.insert(kEpsilonKeys.begin(), kEpsilonKeys.end());
      break;
  }
  for (const std::string& key : seen) {
    if (key.rfind("strategy.", 0) != 0 || key == "strategy.kind") continue;
    if (!allowed.contains(key))
      throw ConfigError("config: key '" + key + "' does not apply to strategy '" +
                        explore::strategy_name(kind) + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  // strategy.kind has to be applied first so kind-specific checks make sense.
  std::vector<std::pair<std::string, std::string>> pairs;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config: line " + std::to_string(line_no) + " has an empty key or value");
    if (!seen.insert(key).second)
      throw ConfigError("config: duplicate key '" + key + "'");
    pairs.emplace_back(key, value);
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return (a.first == "strategy.kind") > (b.first == "strategy.kind");
  });
  for (const auto& [key, value] : pairs) apply_key(cfg, key, value);
  check_strategy_fields(cfg.strategy.kind, seen);
  cfg.resolve_and_validate();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: bad manifest JSON: ") + e.what());
    }
    if (!manifest.contains("config") || !manifest["config"].is_object())
      throw ConfigError("config: manifest has no 'config' object");
    std::string flat;
    for (const auto& [key, value] : manifest["config"].items()) {
      flat += key;
      flat += " = ";
      flat += value.is_string() ? value.get<std::string>() : value.dump();
      flat += "\n";
    }
    return parse_config_text(flat);
  }
  return parse_config_text(text);
}

std::map<std::string, std::string> config_to_keys(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> keys;
  switch (cfg.env.kind) {
    case EnvKind::PixelChain:
      keys["env.kind"] = "pixel_chain";
      keys["env.length"] = std::to_string(cfg.env.length);
      break;
    case EnvKind::GridMaze:
    case EnvKind::LockedTreasure:
      keys["env.kind"] = cfg.env.kind == EnvKind::GridMaze ? "grid_maze" : "locked_treasure";
      keys["env.width"] = std::to_string(cfg.env.width);
      keys["env.height"] = std::to_string(cfg.env.height);
      break;
  }
  keys["strategy.kind"] = explore::strategy_name(cfg.strategy.kind);
  const bool uses_epsilon = cfg.strategy.kind == explore::StrategyKind::EpsilonGreedy ||
                            cfg.strategy.kind == explore::StrategyKind::ModelBonus;
  if (uses_epsilon) {
    keys["strategy.epsilon_start"] = format_double(cfg.strategy.epsilon.start);
    keys["strategy.epsilon_end"] = format_double(cfg.strategy.epsilon.end);
    keys["strategy.epsilon_anneal_steps"] = std::to_string(cfg.strategy.epsilon.anneal_steps);
  }
  if (cfg.strategy.kind == explore::StrategyKind::Boltzmann)
    keys["strategy.temperature"] = format_double(cfg.strategy.temperature);
  if (cfg.strategy.kind == explore::StrategyKind::Thompson)
    keys["strategy.dropout_rate"] = format_double(cfg.strategy.dropout_rate);
  if (cfg.strategy.kind == explore::StrategyKind::ModelBonus) {
    keys["strategy.beta"] = format_double(cfg.strategy.beta);
    keys["strategy.decay_c"] = format_double(cfg.strategy.decay_c);
  }
  keys["agent.gamma"] = format_double(cfg.agent.gamma);
  keys["agent.epoch_length"] = std::to_string(cfg.agent.epoch_length);
  keys["agent.test_steps"] = std::to_string(cfg.agent.test_steps);
  keys["agent.total_epochs"] = std::to_string(cfg.agent.total_epochs);
  keys["agent.replay_batch"] = std::to_string(cfg.agent.replay_batch);
  keys["agent.replay_updates_per_epoch"] = std::to_string(cfg.agent.replay_updates_per_epoch);
  keys["agent.target_sync_period"] = std::to_string(cfg.agent.target_sync_period);
  keys["agent.q_hidden_widths"] = join_ints(cfg.agent.q_hidden_widths);
  keys["agent.lr"] = format_double(cfg.agent.lr);
  keys["agent.momentum"] = format_double(cfg.agent.momentum);
  keys["agent.capacity"] = std::to_string(cfg.agent.capacity);
  keys["agent.checkpoint_period"] = std::to_string(cfg.agent.checkpoint_period);
  if (cfg.strategy.kind == explore::StrategyKind::ModelBonus) {
    keys["encoder.regime"] = agent::regime_name(cfg.encoder.regime);
    if (!cfg.encoder.hidden_widths.empty())
      keys["encoder.hidden_widths"] = join_ints(cfg.encoder.hidden_widths);
    keys["encoder.tap_index"] = std::to_string(cfg.encoder.tap_index);
    keys["encoder.bottleneck_index"] = std::to_string(cfg.encoder.bottleneck_index);
    keys["encoder.train_epochs"] = std::to_string(cfg.encoder.train_epochs);
    keys["encoder.retrain_epochs"] = std::to_string(cfg.encoder.retrain_epochs);
    keys["encoder.retrain_period"] = std::to_string(cfg.encoder.retrain_period);
    keys["encoder.lr"] = format_double(cfg.encoder.lr);
    keys["encoder.dataset_frames"] = std::to_string(cfg.encoder.dataset_frames);
    if (!cfg.dynamics.hidden_widths.empty())
      keys["dynamics.hidden_widths"] = join_ints(cfg.dynamics.hidden_widths);
    keys["dynamics.lr"] = format_double(cfg.dynamics.lr);
    keys["dynamics.epochs_per_retrain"] = std::to_string(cfg.dynamics.epochs_per_retrain);
  }
  std::string seeds;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i) seeds += ",";
    seeds += std::to_string(cfg.seeds[i]);
  }
  keys["seeds"] = seeds;
  keys["output_dir"] = cfg.output_dir;
  keys["log_bonuses"] = cfg.log_bonuses ? "true" : "false";
  keys["jobs"] = std::to_string(cfg.jobs);
  return keys;
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_to_keys(cfg)) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.agent.epoch_length = 50000;
  cfg.agent.test_steps = 10000;
  cfg.agent.total_epochs = 100;
  if (cfg.strategy.kind == explore::StrategyKind::ModelBonus)
    cfg.strategy.decay_c = 1.0 / 50000.0;
}

std::string manifest_json(const ExperimentConfig& cfg, std::uint64_t seed,
                          int final_sigma_version, const std::string& started_at,
                          const std::string& finished_at) {
  nlohmann::json manifest;
  manifest["seed"] = seed;
  manifest["env"] = cfg.env.describe();
  manifest["strategy"] = explore::strategy_name(cfg.strategy.kind);
  manifest["final_sigma_version"] = final_sigma_version;
  manifest["started_at"] = started_at;
  manifest["finished_at"] = finished_at;
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [key, value] : config_to_keys(cfg)) config[key] = value;
  manifest["config"] = config;
  return manifest.dump(2) + "\n";
}

}  // namespace exprl::config

#pragma once

// Experiment configuration: flat `section.key = value` text files, strict
// validation (unknown keys rejected), and a JSON manifest embedding that
// round-trips back into an identical resolved config.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "exprl/agent.hpp"
#include "exprl/envs.hpp"
#include "exprl/explore.hpp"

namespace exprl::config {

// Raised for malformed or invalid configuration; the CLI maps it to exit 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvKind { PixelChain, GridMaze, LockedTreasure };

struct EnvConfig {
  EnvKind kind = EnvKind::PixelChain;
  int length = 20;  // pixel_chain
  int width = 9;    // mazes
  int height = 9;

  std::unique_ptr<envs::MdpEnv> make() const;
  std::string describe() const;
  bool operator==(const EnvConfig&) const = default;
};

struct ExperimentConfig {
  EnvConfig env;
  explore::StrategyConfig strategy;
  agent::AgentConfig agent;
  agent::EncoderConfig encoder;
  agent::DynamicsConfig dynamics;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "runs/experiment";
  bool log_bonuses = false;
  int jobs = 0;  // 0 = hardware concurrency

  // Fills derived defaults (decay_c = 1/epoch_length when unset) and checks
  // every field; throws ConfigError on violations.
  void resolve_and_validate();
};

// Parses the flat text format ('#' comments, `key = value` lines). Unknown
// keys and fields of strategies other than the configured kind are rejected.
ExperimentConfig parse_config_text(const std::string& text);

// Accepts either the flat text format or a manifest.json produced by a run
// (detected by a leading '{').
ExperimentConfig load_config_file(const std::string& path);

// The resolved key/value view used for manifests; parse_config_text on the
// rendered text reproduces the same config.
std::map<std::string, std::string> config_to_keys(const ExperimentConfig& cfg);
std::string config_to_text(const ExperimentConfig& cfg);

// Paper-scale protocol: 50,000-step epochs, 10,000 test steps, 100 epochs.
void apply_paper_scale(ExperimentConfig& cfg);

std::string manifest_json(const ExperimentConfig& cfg, std::uint64_t seed,
                          int final_sigma_version, const std::string& started_at,
                          const std::string& finished_at);

}  // namespace exprl::config

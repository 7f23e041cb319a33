#pragma once

// One full learning run: Q-learning with experience replay driven by one of
// the four exploration strategies. Per step the agent selects an action,
// observes the transition, computes the bonus-augmented reward (model_bonus
// only) and stores the transition in the memory bank. At each epoch boundary
// it replays minibatch Q-updates from the bank, retrains the dynamics model,
// periodically retrains the encoder (dynamic regime), syncs the target
// network, and records a greedy evaluation score.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "exprl/dynamics.hpp"
#include "exprl/encoder.hpp"
#include "exprl/envs.hpp"
#include "exprl/explore.hpp"
#include "exprl/metrics.hpp"
#include "exprl/nn.hpp"
#include "exprl/replay.hpp"
#include "exprl/rng.hpp"

namespace exprl::agent {

enum class EncoderRegime { Static, Dynamic, RawPixels };

const char* regime_name(EncoderRegime regime);
EncoderRegime regime_from_name(const std::string& name);

struct EncoderConfig {
  EncoderRegime regime = EncoderRegime::Dynamic;
  std::vector<int> hidden_widths;  // empty selects the default hourglass
  int tap_index = 6;
  int bottleneck_index = 4;
  int train_epochs = 10;    // static pretraining passes
  int retrain_epochs = 3;   // passes per dynamic retrain
  int retrain_period = 5;   // epochs between dynamic retrains
  double lr = 2.0;          // loss averages over output width, so lr scales with it
  int dataset_frames = 5500;  // static corpus size / dynamic window cap
};

struct DynamicsConfig {
  std::vector<int> hidden_widths;  // empty selects (code_width, code_width)
  double lr = 0.01;
  int epochs_per_retrain = 1;  // full passes over the bank per boundary
};

struct AgentConfig {
  double gamma = 0.99;
  int epoch_length = 2000;
  int test_steps = 400;
  int total_epochs = 100;
  int replay_batch = 32;
  int replay_updates_per_epoch = 500;
  int target_sync_period = 1;  // epochs
  std::vector<int> q_hidden_widths = {64, 64};
  double lr = 0.01;
  double momentum = 0.0;
  std::size_t capacity = 50000;
  int checkpoint_period = 10;  // epochs; 0 disables

  void validate() const;
};

// Standard Q-learning backup against the target network's values.
double q_target(double r_bonus, bool terminal, std::span<const double> q_next, double gamma);

struct BonusLogRow {
  long long t = 0;
  double e = 0.0;
  double e_bar = 0.0;
  double max_e = 0.0;  // running maximum after this observation
  double r = 0.0;
  double r_bonus = 0.0;
};

class Run {
 public:
  Run(std::unique_ptr<envs::MdpEnv> env, AgentConfig agent_cfg,
      explore::StrategyConfig strategy, EncoderConfig encoder_cfg, DynamicsConfig dynamics_cfg,
      std::uint64_t seed);

  // One environment step: select, step, bonus bookkeeping, store.
  void step_once();
  // Boundary work: replay updates, dynamics retrain, periodic encoder
  // retrain, target sync, greedy evaluation.
  void epoch_boundary();
  // epoch_length steps followed by the boundary.
  void run_epoch();
  void execute();  // all total_epochs epochs

  double evaluate_greedy(int test_steps);

  const metrics::LearningCurve& curve() const { return curve_; }
  const std::vector<metrics::EpochResidual>& residuals() const { return residuals_; }
  const std::vector<BonusLogRow>& bonus_log() const { return bonus_log_; }
  void set_bonus_logging(bool enabled) { log_bonuses_ = enabled; }

  const replay::MemoryBank& bank() const { return bank_; }
  const replay::FramePool& pool() const { return pool_; }
  nn::Network& q_net() { return q_net_; }
  dynamics::DynamicsModel* dynamics_model() { return dynamics_ ? &*dynamics_ : nullptr; }
  encoder::Autoencoder* autoencoder() { return autoencoder_ ? &*autoencoder_ : nullptr; }
  const encoder::EncoderHandle* encoder_handle() const {
    return handle_ ? &*handle_ : nullptr;
  }
  const explore::BonusAccountant* accountant() const { return accountant_ ? &*accountant_ : nullptr; }
  const explore::StrategyConfig& strategy() const { return strategy_; }
  const AgentConfig& agent_config() const { return agent_cfg_; }
  const EncoderConfig& encoder_config() const { return encoder_cfg_; }

  long long global_step() const { return global_step_; }
  int epoch_index() const { return epoch_index_; }
  int sigma_version() const;
  int encode_width() const { return encode_width_; }
  envs::MdpEnv& env() { return *env_; }

  // Encoded representation of a frame under the current handle (identity in
  // the raw-pixels regime).
  const std::vector<double>& encode(const envs::Frame& frame);

 private:
  int select_action(const envs::Frame& frame);
  void replay_update();
  void sync_target();

  std::unique_ptr<envs::MdpEnv> env_;
  AgentConfig agent_cfg_;
  explore::StrategyConfig strategy_;
  EncoderConfig encoder_cfg_;
  DynamicsConfig dynamics_cfg_;
  std::uint64_t seed_;

  Rng action_rng_;
  Rng replay_rng_;
  Rng episode_rng_;
  Rng eval_rng_;

  nn::Network q_net_;
  nn::Network target_net_;
  nn::Trainer q_trainer_;

  std::optional<encoder::Autoencoder> autoencoder_;
  std::optional<encoder::EncoderHandle> handle_;
  encoder::EncodeCache cache_;
  std::optional<dynamics::DynamicsModel> dynamics_;
  std::optional<explore::BonusAccountant> accountant_;
  int encode_width_ = 0;

  replay::FramePool pool_;
  replay::MemoryBank bank_;

  envs::Frame current_frame_;
  bool episode_over_ = false;
  long long global_step_ = 1;
  int epoch_index_ = 0;

  metrics::LearningCurve curve_;
  std::vector<metrics::EpochResidual> residuals_;
  std::vector<double> epoch_ebar_;
  std::vector<BonusLogRow> bonus_log_;
  bool log_bonuses_ = false;
};

}  // namespace exprl::agent

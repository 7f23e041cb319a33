#include "exprl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace exprl::agent {

namespace {

// Substream tags; shared streams must stay identical across strategies so a
// beta=0 model_bonus run replays an epsilon-greedy run bit for bit.
constexpr std::uint64_t kStreamAction = 0x01;
constexpr std::uint64_t kStreamReplay = 0x02;
constexpr std::uint64_t kStreamEpisode = 0x03;
constexpr std::uint64_t kStreamEval = 0x04;
constexpr std::uint64_t kStreamQInit = 0x05;
constexpr std::uint64_t kStreamEncoder = 0x06;
constexpr std::uint64_t kStreamDynamics = 0x07;
constexpr std::uint64_t kStreamDataset = 0x08;

std::vector<nn::LayerSpec> q_layers(int input_width, const std::vector<int>& hidden,
                                    int num_actions, double dropout_rate) {
  std::vector<nn::LayerSpec> layers;
  int in = input_width;
  for (int w : hidden) {
    layers.push_back({in, w, nn::Activation::Rectifier, dropout_rate});
    in = w;
  }
  layers.push_back({in, num_actions, nn::Activation::Identity, 0.0});
  return layers;
}

}  // namespace

const char* regime_name(EncoderRegime regime) {
  switch (regime) {
    case EncoderRegime::Static: return "static";
    case EncoderRegime::Dynamic: return "dynamic";
    case EncoderRegime::RawPixels: return "raw_pixels";
  }
  return "dynamic";
}

EncoderRegime regime_from_name(const std::string& name) {
  if (name == "static") return EncoderRegime::Static;
  if (name == "dynamic") return EncoderRegime::Dynamic;
  if (name == "raw_pixels") return EncoderRegime::RawPixels;
  throw std::invalid_argument("agent: unknown encoder regime '" + name + "'");
}

void AgentConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("agent: gamma outside (0,1)");
  if (epoch_length < 1) throw std::invalid_argument("agent: epoch_length must be >= 1");
  if (total_epochs < 1) throw std::invalid_argument("agent: total_epochs must be >= 1");
  if (test_steps < 0) throw std::invalid_argument("agent: test_steps must be >= 0");
  if (replay_batch < 1) throw std::invalid_argument("agent: replay_batch must be >= 1");
  if (replay_updates_per_epoch < 0)
    throw std::invalid_argument("agent: replay_updates_per_epoch must be >= 0");
  if (target_sync_period < 1) throw std::invalid_argument("agent: target_sync_period must be >= 1");
  if (capacity < 1) throw std::invalid_argument("agent: capacity must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("agent: lr must be positive");
  if (q_hidden_widths.empty()) throw std::invalid_argument("agent: q_hidden_widths empty");
}

double q_target(double r_bonus, bool terminal, std::span<const double> q_next, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("agent: gamma outside [0,1)");
  if (terminal) return r_bonus;
  return r_bonus + gamma * *std::max_element(q_next.begin(), q_next.end());
}

Run::Run(std::unique_ptr<envs::MdpEnv> env, AgentConfig agent_cfg,
         explore::StrategyConfig strategy, EncoderConfig encoder_cfg,
         DynamicsConfig dynamics_cfg, std::uint64_t seed)
    : env_(std::move(env)),
      agent_cfg_(agent_cfg),
      strategy_(strategy),
      encoder_cfg_(encoder_cfg),
      dynamics_cfg_(dynamics_cfg),
      seed_(seed),
      action_rng_(substream_seed(seed, kStreamAction)),
      replay_rng_(substream_seed(seed, kStreamReplay)),
      episode_rng_(substream_seed(seed, kStreamEpisode)),
      eval_rng_(substream_seed(seed, kStreamEval)),
      q_net_(q_layers(env_->frame_size(), agent_cfg.q_hidden_widths, env_->num_actions(),
                      strategy.kind == explore::StrategyKind::Thompson ? strategy.dropout_rate
                                                                       : 0.0),
             substream_seed(seed, kStreamQInit)),
      target_net_(q_net_),
      q_trainer_(agent_cfg.lr, agent_cfg.momentum),
      bank_(agent_cfg.capacity) {
  agent_cfg_.validate();
  strategy_.validate();
  if (strategy_.kind == explore::StrategyKind::ModelBonus) {
    if (!(strategy_.decay_c > 0.0))
      throw std::invalid_argument("agent: model_bonus decay constant must be resolved > 0");
    accountant_.emplace(strategy_.beta, strategy_.decay_c);
    if (encoder_cfg_.regime == EncoderRegime::RawPixels) {
      cache_.bind_identity();
      encode_width_ = env_->frame_size();
    } else {
      encoder::AutoencoderSpec spec = encoder::default_spec(env_->frame_size());
      if (!encoder_cfg_.hidden_widths.empty()) spec.hidden_widths = encoder_cfg_.hidden_widths;
      spec.tap_index = encoder_cfg_.tap_index;
      spec.bottleneck_index = encoder_cfg_.bottleneck_index;
      spec.validate();
      autoencoder_.emplace(spec, substream_seed(seed, kStreamEncoder));
      if (encoder_cfg_.regime == EncoderRegime::Static) {
        auto corpus_env = env_->clone_fresh();
        encoder::FrameDataset corpus = encoder::build_static_dataset(
            *corpus_env, encoder_cfg_.dataset_frames, substream_seed(seed, kStreamDataset));
        autoencoder_->train(corpus, encoder_cfg_.train_epochs, encoder_cfg_.lr);
      }
      handle_.emplace(autoencoder_->snapshot());
      cache_.bind(&*handle_);
      encode_width_ = handle_->tap_width();
    }
    std::vector<int> hidden = dynamics_cfg_.hidden_widths.empty()
                                  ? dynamics::DynamicsModel::default_hidden(encode_width_)
                                  : dynamics_cfg_.hidden_widths;
    dynamics_.emplace(encode_width_, env_->num_actions(), hidden,
                      substream_seed(seed, kStreamDynamics));
  }
  current_frame_ = env_->reset(episode_rng_.next_u64());
}

int Run::sigma_version() const {
  if (handle_) return handle_->version();
  return 0;
}

const std::vector<double>& Run::encode(const envs::Frame& frame) { return cache_.encode(frame); }

int Run::select_action(const envs::Frame& frame) {
  switch (strategy_.kind) {
    case explore::StrategyKind::EpsilonGreedy:
    case explore::StrategyKind::ModelBonus: {
      const std::vector<double> q = q_net_.forward(frame.pixels, nn::Mode::Eval);
      return explore::select_epsilon_greedy(q, strategy_.epsilon.at(global_step_), action_rng_);
    }
    case explore::StrategyKind::Boltzmann: {
      const std::vector<double> q = q_net_.forward(frame.pixels, nn::Mode::Eval);
      return explore::select_boltzmann(q, strategy_.temperature, action_rng_);
    }
    case explore::StrategyKind::Thompson:
      return explore::select_thompson(q_net_, frame.pixels, action_rng_);
  }
  throw std::logic_error("agent: unreachable strategy kind");
}

void Run::step_once() {
  if (episode_over_) {
    current_frame_ = env_->reset(episode_rng_.next_u64());
    episode_over_ = false;
  }
  const int action = select_action(current_frame_);
  envs::StepResult sr = env_->step(action);

  double r_bonus = sr.reward;
  if (strategy_.kind == explore::StrategyKind::ModelBonus) {
    // Copied: the raw-pixels regime reuses one scratch buffer per encode.
    const std::vector<double> code_t = encode(current_frame_);
    const std::vector<double>& code_t1 = encode(sr.frame);
    const double e = dynamics_->prediction_error(code_t, action, code_t1);
    const explore::BonusAccountant::Observation obs = accountant_->observe(e, sr.reward);
    r_bonus = obs.r_bonus;
    epoch_ebar_.push_back(obs.e_bar);
    if (log_bonuses_)
      bonus_log_.push_back(
          {global_step_, e, obs.e_bar, accountant_->max_e(), sr.reward, r_bonus});
  }

  replay::Transition t;
  t.frame_t = pool_.intern(current_frame_);
  t.frame_t1 = pool_.intern(sr.frame);
  t.action = action;
  t.r = sr.reward;
  t.r_bonus = r_bonus;
  t.terminal = sr.terminal;
  t.step_index = global_step_;
  bank_.store(t);

  episode_over_ = sr.terminal;
  current_frame_ = std::move(sr.frame);
  ++global_step_;
}

void Run::replay_update() {
  if (bank_.empty()) return;
  const int batch = agent_cfg_.replay_batch;
  const int frame_size = env_->frame_size();
  const int num_actions = env_->num_actions();

  nn::Matrix inputs(batch, frame_size);
  nn::Matrix next_inputs(batch, frame_size);
  std::vector<const replay::Transition*> picked(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const replay::Transition& t = bank_.at(
        static_cast<std::size_t>(replay_rng_.next_index(static_cast<int>(bank_.size()))));
    picked[static_cast<std::size_t>(b)] = &t;
    inputs.row(b) = Eigen::Map<const Eigen::RowVectorXd>(pool_.get(t.frame_t).pixels.data(),
                                                         frame_size);
    next_inputs.row(b) = Eigen::Map<const Eigen::RowVectorXd>(pool_.get(t.frame_t1).pixels.data(),
                                                              frame_size);
  }
  const nn::Matrix q_next = target_net_.forward_batch(next_inputs, nn::Mode::Eval);
  nn::Matrix outputs = q_net_.forward_batch(inputs, nn::Mode::Train);
  nn::TrainBatch train{std::move(inputs), outputs};
  for (int b = 0; b < batch; ++b) {
    const replay::Transition& t = *picked[static_cast<std::size_t>(b)];
    std::span<const double> row(q_next.row(b).data(), static_cast<std::size_t>(num_actions));
    train.targets(b, t.action) = q_target(t.r_bonus, t.terminal, row, agent_cfg_.gamma);
  }
  q_trainer_.apply_gradients(q_net_, q_net_.backward(train));
}

void Run::sync_target() { target_net_ = q_net_; }

void Run::epoch_boundary() {
  ++epoch_index_;
  for (int u = 0; u < agent_cfg_.replay_updates_per_epoch; ++u) replay_update();
  if (strategy_.kind == explore::StrategyKind::ModelBonus) {
    dynamics_->retrain(bank_, pool_, cache_, dynamics_cfg_.epochs_per_retrain, dynamics_cfg_.lr);
    if (encoder_cfg_.regime == EncoderRegime::Dynamic &&
        epoch_index_ % encoder_cfg_.retrain_period == 0) {
      const std::size_t window =
          std::min<std::size_t>(bank_.size(), static_cast<std::size_t>(encoder_cfg_.dataset_frames));
      std::vector<std::vector<double>> rows;
      rows.reserve(window);
      for (std::size_t i = bank_.size() - window; i < bank_.size(); ++i)
        rows.push_back(pool_.get(bank_.at(i).frame_t).pixels);
      const encoder::FrameDataset recent = encoder::dataset_from_rows(rows);
      handle_.emplace(
          autoencoder_->retrain(recent, encoder_cfg_.retrain_epochs, encoder_cfg_.lr));
      cache_.bind(&*handle_);
    }
  }
  if (epoch_index_ % agent_cfg_.target_sync_period == 0) sync_target();
  const double score = evaluate_greedy(agent_cfg_.test_steps);
  curve_.points.push_back({epoch_index_, score});
  residuals_.push_back([&] {
    const metrics::SampleStats stats = metrics::sample_stats(epoch_ebar_);
    return metrics::EpochResidual{stats.mean, stats.cv};
  }());
  epoch_ebar_.clear();
}

void Run::run_epoch() {
  for (int s = 0; s < agent_cfg_.epoch_length; ++s) step_once();
  epoch_boundary();
}

void Run::execute() {
  for (int e = 0; e < agent_cfg_.total_epochs; ++e) run_epoch();
}

double Run::evaluate_greedy(int test_steps) {
  std::unique_ptr<envs::MdpEnv> env = env_->clone_fresh();
  envs::Frame frame = env->reset(eval_rng_.next_u64());
  double episode_return = 0.0;
  double completed_sum = 0.0;
  int completed = 0;
  for (int s = 0; s < test_steps; ++s) {
    const std::vector<double> q = q_net_.forward(frame.pixels, nn::Mode::Eval);
    const envs::StepResult sr = env->step(explore::argmax_lowest(q));
    episode_return += sr.reward;
    if (sr.terminal) {
      completed_sum += episode_return;
      ++completed;
      episode_return = 0.0;
      frame = env->reset(eval_rng_.next_u64());
    } else {
      frame = sr.frame;
    }
  }
  if (completed == 0) {
    std::cerr << "[exprl] warning: greedy evaluation completed no episodes\n";
    return 0.0;
  }
  return completed_sum / completed;
}

}  // namespace exprl::agent

#include "exprl/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace exprl::dynamics {

namespace instrumentation {
namespace {
std::atomic<long long> g_models{0};
}
long long dynamics_models_constructed() { return g_models.load(); }
void reset_counters() { g_models.store(0); }
}  // namespace instrumentation

namespace {

std::vector<nn::LayerSpec> build_layers(int code_width, int num_actions,
                                        const std::vector<int>& hidden) {
  if (hidden.size() != 2)
    throw std::invalid_argument("dynamics: exactly two hidden layers expected");
  std::vector<nn::LayerSpec> layers;
  int in = code_width + num_actions;
  for (int w : hidden) {
    layers.push_back({in, w, nn::Activation::Rectifier, 0.0});
    in = w;
  }
  layers.push_back({in, code_width, nn::Activation::Identity, 0.0});
  return layers;
}

}  // namespace

DynamicsModel::DynamicsModel(int code_width, int num_actions, std::vector<int> hidden_widths,
                             std::uint64_t seed)
    : code_width_(code_width),
      num_actions_(num_actions),
      net_(build_layers(code_width, num_actions, hidden_widths), substream_seed(seed, 0x51u)),
      batch_rng_(substream_seed(seed, 0x52u)),
      input_buffer_(static_cast<std::size_t>(code_width + num_actions), 0.0) {
  if (code_width <= 0 || num_actions <= 0)
    throw std::invalid_argument("dynamics: widths must be positive");
  instrumentation::g_models.fetch_add(1);
}

void DynamicsModel::fill_input(std::span<const double> code, int action, double* out) const {
  if (static_cast<int>(code.size()) != code_width_)
    throw std::invalid_argument("dynamics: code width mismatch");
  if (action < 0 || action >= num_actions_)
    throw std::invalid_argument("dynamics: action outside the action set");
  std::copy(code.begin(), code.end(), out);
  std::fill(out + code_width_, out + code_width_ + num_actions_, 0.0);
  out[code_width_ + action] = 1.0;
}

std::vector<double> DynamicsModel::predict(std::span<const double> code, int action) {
  fill_input(code, action, input_buffer_.data());
  return net_.forward(input_buffer_, nn::Mode::Eval);
}

double DynamicsModel::prediction_error(std::span<const double> code, int action,
                                       std::span<const double> next_code) {
  if (next_code.size() != code.size())
    throw std::invalid_argument("dynamics: next-code width mismatch");
  const std::vector<double> predicted = predict(code, action);
  double e = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = next_code[i] - predicted[i];
    e += d * d;
  }
  return e;
}

void DynamicsModel::retrain(const replay::MemoryBank& bank, const replay::FramePool& pool,
                            encoder::EncodeCache& cache, int epochs, double lr) {
  if (bank.empty()) {
    std::cerr << "[exprl] warning: dynamics retrain skipped, memory bank is empty\n";
    return;
  }
  if (epochs <= 0) return;
  const std::size_t n = bank.size();
  const int in_width = code_width_ + num_actions_;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  nn::Trainer trainer(lr);
  constexpr std::size_t kBatch = 32;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i],
                order[static_cast<std::size_t>(batch_rng_.next_index(static_cast<int>(i + 1)))]);
    for (std::size_t begin = 0; begin < n; begin += kBatch) {
      const std::size_t count = std::min(kBatch, n - begin);
      nn::TrainBatch batch;
      batch.inputs.resize(static_cast<Eigen::Index>(count), in_width);
      batch.targets.resize(static_cast<Eigen::Index>(count), code_width_);
      for (std::size_t b = 0; b < count; ++b) {
        const replay::Transition& t = bank.at(order[begin + b]);
        const std::vector<double>& code_t = cache.encode(pool.get(t.frame_t));
        const std::vector<double>& code_t1 = cache.encode(pool.get(t.frame_t1));
        double* row = batch.inputs.row(static_cast<Eigen::Index>(b)).data();
        fill_input(code_t, t.action, row);
        batch.targets.row(static_cast<Eigen::Index>(b)) =
            Eigen::Map<const Eigen::RowVectorXd>(code_t1.data(),
                                                 static_cast<Eigen::Index>(code_t1.size()));
      }
      const double loss = trainer.step(net_, batch);
      if (!std::isfinite(loss)) throw std::runtime_error("dynamics: training diverged");
    }
  }
}

}  // namespace exprl::dynamics

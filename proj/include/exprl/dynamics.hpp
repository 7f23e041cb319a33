#pragma once

// Learned dynamics predictor over encoded states: predicts the next code
// from (code, one-hot action) and scores transitions by squared Euclidean
// prediction error.

#include <cstdint>
#include <span>
#include <vector>

#include "exprl/encoder.hpp"
#include "exprl/nn.hpp"
#include "exprl/replay.hpp"
#include "exprl/rng.hpp"

namespace exprl::dynamics {

class DynamicsModel {
 public:
  // Two rectifier hidden layers (default width = code width) and an identity
  // output layer of code width; input is code ++ one-hot action.
  DynamicsModel(int code_width, int num_actions, std::vector<int> hidden_widths,
                std::uint64_t seed);

  static std::vector<int> default_hidden(int code_width) { return {code_width, code_width}; }

  std::vector<double> predict(std::span<const double> code, int action);

  // Squared Euclidean norm of (next_code - predict(code, action)).
  double prediction_error(std::span<const double> code, int action,
                          std::span<const double> next_code);

  // One training pass per epoch over the bank in minibatches of 32, pairs
  // re-encoded with the current handle via the cache. Empty bank is a no-op
  // with a warning. Zero epochs leaves the model unchanged.
  void retrain(const replay::MemoryBank& bank, const replay::FramePool& pool,
               encoder::EncodeCache& cache, int epochs, double lr);

  int code_width() const { return code_width_; }
  int num_actions() const { return num_actions_; }
  nn::Network& net() { return net_; }
  const nn::Network& net() const { return net_; }

 private:
  void fill_input(std::span<const double> code, int action, double* out) const;

  int code_width_;
  int num_actions_;
  nn::Network net_;
  Rng batch_rng_;
  std::vector<double> input_buffer_;
};

namespace instrumentation {
long long dynamics_models_constructed();
void reset_counters();
}  // namespace instrumentation

}  // namespace exprl::dynamics

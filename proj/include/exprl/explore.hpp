#pragma once

// Action-selection strategies and the model-prediction bonus accountant.
// The accountant keeps the running maximum error, normalizes each new error
// against the pre-update maximum, and applies the 1/t time decay before the
// maximum and the step counter advance; that ordering is normative and is
// what the reference trace in the test suite checks.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exprl/nn.hpp"
#include "exprl/rng.hpp"

namespace exprl::explore {

class BonusAccountant {
 public:
  BonusAccountant(double beta, double decay_c);

  struct Observation {
    double r_bonus = 0.0;
    double e_bar = 0.0;
  };

  // Given the raw prediction error e and the environment reward r:
  //   e_bar   = e / max_e            (pre-update max_e)
  //   r_bonus = r + beta * e_bar / (t * C)
  //   max_e  <- max(max_e, e); t <- t + 1
  // e_bar may exceed 1 on a record-setting step.
  Observation observe(double e, double r);

  double max_e() const { return max_e_; }
  long long t() const { return t_; }
  double beta() const { return beta_; }
  double decay_c() const { return decay_c_; }

 private:
  double max_e_ = 1.0;
  long long t_ = 1;
  double beta_;
  double decay_c_;
};

// Time-decayed novelty, e_bar / (t * C).
double novelty(double e_bar, long long t, double decay_c);

// Lowest index wins ties everywhere, for replayable determinism.
int argmax_lowest(std::span<const double> values);

// Softmax of q / tau with max-subtraction; probabilities sum to 1.
std::vector<double> softmax(std::span<const double> q, double tau);

int select_epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng);
int select_boltzmann(std::span<const double> q, double tau, Rng& rng);

// One fresh dropout mask, one masked forward pass, argmax of the result.
int select_thompson(nn::Network& qnet, std::span<const double> input, Rng& rng);

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  long long anneal_steps = 20000;

  // Linear anneal; step is 1-based, value reaches `end` at step anneal_steps+1.
  double at(long long step) const;
};

enum class StrategyKind { EpsilonGreedy, Boltzmann, Thompson, ModelBonus };

const char* strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::EpsilonGreedy;
  EpsilonSchedule epsilon;      // epsilon_greedy, model_bonus
  double temperature = 0.1;     // boltzmann
  double dropout_rate = 0.1;    // thompson
  double beta = 0.05;           // model_bonus
  double decay_c = 0.0;         // model_bonus; 0 means 1/epoch_length at resolve time

  void validate() const;
};

}  // namespace exprl::explore

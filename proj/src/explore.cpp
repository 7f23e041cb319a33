#include "exprl/explore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exprl::explore {

BonusAccountant::BonusAccountant(double beta, double decay_c) : beta_(beta), decay_c_(decay_c) {
  if (beta < 0.0) throw std::invalid_argument("explore: beta must be nonnegative");
  if (!(decay_c > 0.0)) throw std::invalid_argument("explore: decay constant must be positive");
}

BonusAccountant::Observation BonusAccountant::observe(double e, double r) {
  if (!std::isfinite(e) || e < 0.0)
    throw std::runtime_error("explore: non-finite or negative prediction error at t=" +
                             std::to_string(t_) + " (e=" + std::to_string(e) + ")");
  Observation obs;
  obs.e_bar = e / max_e_;
  obs.r_bonus = r + beta_ * novelty(obs.e_bar, t_, decay_c_);
  if (e > max_e_) max_e_ = e;
  ++t_;
  return obs;
}

double novelty(double e_bar, long long t, double decay_c) {
  return e_bar / (static_cast<double>(t) * decay_c);
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("explore: argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> softmax(std::span<const double> q, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("explore: temperature must be positive");
  if (q.empty()) throw std::invalid_argument("explore: softmax of empty vector");
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> p(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    p[i] = std::exp((q[i] - top) / tau);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

int select_epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("explore: empty action values");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("explore: epsilon outside [0,1]");
  if (epsilon > 0.0 && rng.next_double() < epsilon)
    return rng.next_index(static_cast<int>(q.size()));
  return argmax_lowest(q);
}

int select_boltzmann(std::span<const double> q, double tau, Rng& rng) {
  const std::vector<double> p = softmax(q, tau);
  const double u = rng.next_double();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

int select_thompson(nn::Network& qnet, std::span<const double> input, Rng& rng) {
  const nn::DropoutMask mask = qnet.sample_dropout_mask(rng);
  const std::vector<double> q = qnet.forward_masked(input, mask);
  return argmax_lowest(q);
}

double EpsilonSchedule::at(long long step) const {
  if (anneal_steps <= 0) return end;
  const double progress =
      std::clamp(static_cast<double>(step - 1) / static_cast<double>(anneal_steps), 0.0, 1.0);
  return start + (end - start) * progress;
}

const char* strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::EpsilonGreedy: return "epsilon_greedy";
    case StrategyKind::Boltzmann: return "boltzmann";
    case StrategyKind::Thompson: return "thompson";
    case StrategyKind::ModelBonus: return "model_bonus";
  }
  return "epsilon_greedy";
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "epsilon_greedy") return StrategyKind::EpsilonGreedy;
  if (name == "boltzmann") return StrategyKind::Boltzmann;
  if (name == "thompson") return StrategyKind::Thompson;
  if (name == "model_bonus") return StrategyKind::ModelBonus;
  throw std::invalid_argument("explore: unknown strategy '" + name + "'");
}

void StrategyConfig::validate() const {
  auto check_eps = [&] {
    if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0)
      throw std::invalid_argument("explore: epsilon schedule outside [0,1]");
    if (epsilon.anneal_steps < 0)
      throw std::invalid_argument("explore: negative anneal_steps");
  };
  switch (kind) {
    case StrategyKind::EpsilonGreedy:
      check_eps();
      break;
    case StrategyKind::Boltzmann:
      if (!(temperature > 0.0))
        throw std::invalid_argument("explore: boltzmann temperature must be positive");
      break;
    case StrategyKind::Thompson:
      if (!(dropout_rate > 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("explore: thompson dropout_rate must lie in (0,1)");
      break;
    case StrategyKind::ModelBonus:
      check_eps();
      if (beta < 0.0) throw std::invalid_argument("explore: beta must be nonnegative");
      if (decay_c < 0.0) throw std::invalid_argument("explore: decay constant must be positive");
      break;
  }
}

}  // namespace exprl::explore

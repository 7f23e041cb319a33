#pragma once

// Minimal dense feedforward engine: identity/rectifier/sigmoid layers,
// inverted dropout, mean-squared-error loss, SGD with optional momentum.
// Substrate for the autoencoder, the dynamics predictor and the Q-network.

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "exprl/rng.hpp"

namespace exprl::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Identity = 0, Rectifier = 1, Sigmoid = 2 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct LayerSpec {
  int input_width = 0;
  int output_width = 0;
  Activation activation = Activation::Identity;
  double dropout_rate = 0.0;  // applied to this layer's output in train mode
};

enum class Mode { Train, Eval };

struct TrainBatch {
  Matrix inputs;   // batch x input_width
  Matrix targets;  // batch x output_width
};

struct Gradients {
  std::vector<Matrix> weights;  // per layer, output_width x input_width
  std::vector<Vector> biases;   // per layer, output_width
};

// One scale factor per unit and layer: 0 for dropped units, 1/(1-p) for
// survivors, 1 everywhere on layers without dropout.
struct DropoutMask {
  std::vector<Vector> layers;
};

class Network {
 public:
  Network(std::vector<LayerSpec> layers, std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return specs_; }
  int layer_count() const { return static_cast<int>(specs_.size()); }
  int input_width() const { return specs_.front().input_width; }
  int output_width() const { return specs_.back().output_width; }
  std::uint64_t seed() const { return seed_; }
  bool has_dropout() const;
  std::size_t parameter_count() const;

  Matrix& weight(int layer) { return weights_[layer]; }
  const Matrix& weight(int layer) const { return weights_[layer]; }
  Vector& bias(int layer) { return biases_[layer]; }
  const Vector& bias(int layer) const { return biases_[layer]; }

  // Eval mode ignores dropout and is deterministic. Train mode draws dropout
  // masks from the network's own generator and keeps the tape needed by
  // backward().
  std::vector<double> forward(std::span<const double> input, Mode mode);
  Matrix forward_batch(const Matrix& inputs, Mode mode);

  // Single-sample forward with externally supplied masks (Thompson sampling).
  std::vector<double> forward_masked(std::span<const double> input, const DropoutMask& mask) const;

  DropoutMask sample_dropout_mask(Rng& rng) const;

  // Gradient of mean squared error (averaged over batch rows and output
  // units) w.r.t. every weight and bias. Requires a preceding train-mode
  // forward_batch on the same inputs.
  Gradients backward(const TrainBatch& batch);

  void sgd_step(const Gradients& grads, double learning_rate);

  // Eval-mode mean squared error over a batch.
  double mse(const Matrix& inputs, const Matrix& targets);

  // Eval-mode batch MSE that also fingerprints the rectifier activity
  // pattern. Finite-difference gradient checks compare fingerprints of the
  // two probe points and skip coordinates that straddle a rectifier kink,
  // where the central difference is not meaningful.
  double mse_with_pattern(const Matrix& inputs, const Matrix& targets,
                          std::uint64_t* pattern_hash) const;

  void save(std::ostream& out) const;
  static Network load(std::istream& in);

 private:
  void check_finite_after_step();

  std::vector<LayerSpec> specs_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  std::uint64_t seed_ = 0;
  Rng rng_;

  struct Tape {
    bool valid = false;
    Matrix inputs;
    std::vector<Matrix> pre_mask;  // activation(z) per layer
    std::vector<Matrix> post;      // mask .* activation(z) per layer
    std::vector<Matrix> masks;     // empty matrix for layers without dropout
  };
  Tape tape_;
};

// Optional-momentum SGD wrapper; momentum = 0 reduces to Network::sgd_step.
class Trainer {
 public:
  Trainer(double learning_rate, double momentum = 0.0)
      : learning_rate_(learning_rate), momentum_(momentum) {}

  double learning_rate() const { return learning_rate_; }

  // Forward (train), backward, update. Returns the batch MSE as seen by the
  // training pass (dropout included).
  double step(Network& net, const TrainBatch& batch);

  // Update from externally computed gradients (momentum applied here).
  void apply_gradients(Network& net, Gradients grads);

 private:
  double learning_rate_;
  double momentum_;
  std::vector<Matrix> velocity_w_;
  std::vector<Vector> velocity_b_;
};

double mse_of(const Matrix& outputs, const Matrix& targets);

}  // namespace exprl::nn

#include "exprl/nn.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace exprl::nn {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Rectifier: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the activation value itself.
double activate_deriv(Activation a, double act) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Rectifier: return act > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return act * (1.0 - act);
  }
  return 1.0;
}

void apply_activation(Activation a, Matrix& m) {
  if (a == Activation::Identity) return;
  double* p = m.data();
  const Eigen::Index n = m.size();
  if (a == Activation::Rectifier) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("nn: truncated checkpoint stream");
  return v;
}

constexpr char kMagic[8] = {'E', 'X', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Rectifier: return "rectifier";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "rectifier") return Activation::Rectifier;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("nn: unknown activation '" + name + "'");
}

Network::Network(std::vector<LayerSpec> layers, std::uint64_t seed)
    : specs_(std::move(layers)), seed_(seed), rng_(seed) {
  if (specs_.empty()) throw std::invalid_argument("nn: network needs at least one layer");
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    const LayerSpec& s = specs_[k];
    if (s.input_width <= 0 || s.output_width <= 0)
      throw std::invalid_argument("nn: layer " + std::to_string(k) + " has non-positive width");
    if (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0)
      throw std::invalid_argument("nn: layer " + std::to_string(k) + " dropout_rate outside [0,1)");
    if (k > 0 && specs_[k - 1].output_width != s.input_width)
      throw std::invalid_argument("nn: width mismatch between layers " + std::to_string(k - 1) +
                                  " and " + std::to_string(k));
  }
  weights_.reserve(specs_.size());
  biases_.reserve(specs_.size());
  for (const LayerSpec& s : specs_) {
    const double limit = std::sqrt(6.0 / (s.input_width + s.output_width));
    Matrix w(s.output_width, s.input_width);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = (2.0 * rng_.next_double() - 1.0) * limit;
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(s.output_width));
  }
}

bool Network::has_dropout() const {
  for (const LayerSpec& s : specs_)
    if (s.dropout_rate > 0.0) return true;
  return false;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < specs_.size(); ++k)
    n += static_cast<std::size_t>(weights_[k].size()) + static_cast<std::size_t>(biases_[k].size());
  return n;
}

Matrix Network::forward_batch(const Matrix& inputs, Mode mode) {
  if (inputs.cols() != input_width())
    throw std::invalid_argument("nn: forward input width " + std::to_string(inputs.cols()) +
                                " != expected " + std::to_string(input_width()));
  const bool train = mode == Mode::Train;
  if (train) {
    tape_.valid = true;
    tape_.inputs = inputs;
    tape_.pre_mask.assign(specs_.size(), Matrix());
    tape_.post.assign(specs_.size(), Matrix());
    tape_.masks.assign(specs_.size(), Matrix());
  }
  Matrix a = inputs;
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    Matrix z = a * weights_[k].transpose();
    z.rowwise() += biases_[k].transpose();
    apply_activation(specs_[k].activation, z);
    if (train) tape_.pre_mask[k] = z;
    if (train && specs_[k].dropout_rate > 0.0) {
      const double p = specs_[k].dropout_rate;
      const double scale = 1.0 / (1.0 - p);
      Matrix mask(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          mask(r, c) = rng_.next_double() < 1.0 - p ? scale : 0.0;
      z.array() *= mask.array();
      tape_.masks[k] = std::move(mask);
    }
    if (train) tape_.post[k] = z;
    a = std::move(z);
  }
  return a;
}

std::vector<double> Network::forward(std::span<const double> input, Mode mode) {
  Matrix in(1, static_cast<Eigen::Index>(input.size()));
  std::memcpy(in.data(), input.data(), input.size() * sizeof(double));
  Matrix out = forward_batch(in, mode);
  return std::vector<double>(out.data(), out.data() + out.size());
}

std::vector<double> Network::forward_masked(std::span<const double> input,
                                            const DropoutMask& mask) const {
  if (static_cast<int>(input.size()) != input_width())
    throw std::invalid_argument("nn: forward_masked input width mismatch");
  if (mask.layers.size() != specs_.size())
    throw std::invalid_argument("nn: mask layer count mismatch");
  Vector a = Eigen::Map<const Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    Vector z = weights_[k] * a + biases_[k];
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activate(specs_[k].activation, z[i]);
    if (mask.layers[k].size() != z.size())
      throw std::invalid_argument("nn: mask width mismatch at layer " + std::to_string(k));
    z.array() *= mask.layers[k].array();
    a = std::move(z);
  }
  return std::vector<double>(a.data(), a.data() + a.size());
}

DropoutMask Network::sample_dropout_mask(Rng& rng) const {
  DropoutMask mask;
  mask.layers.reserve(specs_.size());
  for (const LayerSpec& s : specs_) {
    Vector m = Vector::Ones(s.output_width);
    if (s.dropout_rate > 0.0) {
      const double scale = 1.0 / (1.0 - s.dropout_rate);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m[i] = rng.next_double() < 1.0 - s.dropout_rate ? scale : 0.0;
    }
    mask.layers.push_back(std::move(m));
  }
  return mask;
}

Gradients Network::backward(const TrainBatch& batch) {
  if (!tape_.valid)
    throw std::logic_error("nn: backward without a preceding train-mode forward");
  if (batch.inputs.rows() != tape_.inputs.rows() || batch.inputs.cols() != tape_.inputs.cols() ||
      batch.inputs != tape_.inputs)
    throw std::logic_error("nn: backward batch does not match the last train-mode forward");
  if (batch.targets.rows() != batch.inputs.rows() || batch.targets.cols() != output_width())
    throw std::invalid_argument("nn: target shape mismatch");

  const Eigen::Index batch_size = batch.inputs.rows();
  const int last = layer_count() - 1;
  const double norm = 2.0 / (static_cast<double>(batch_size) * output_width());

  Gradients grads;
  grads.weights.resize(specs_.size());
  grads.biases.resize(specs_.size());

  // dL/d(post activation) at the output layer.
  Matrix delta = (tape_.post[last] - batch.targets) * norm;
  for (int k = last; k >= 0; --k) {
    // Chain through dropout mask and activation derivative.
    if (tape_.masks[k].size() > 0) delta.array() *= tape_.masks[k].array();
    const Matrix& act = tape_.pre_mask[k];
    const Activation kind = specs_[k].activation;
    if (kind != Activation::Identity) {
      double* d = delta.data();
      const double* a = act.data();
      const Eigen::Index n = delta.size();
      for (Eigen::Index i = 0; i < n; ++i) d[i] *= activate_deriv(kind, a[i]);
    }
    const Matrix& below = k == 0 ? tape_.inputs : tape_.post[k - 1];
    grads.weights[k].noalias() = delta.transpose() * below;
    grads.biases[k] = delta.colwise().sum();
    if (k > 0) {
      Matrix next = delta * weights_[k];
      delta = std::move(next);
    }
  }
  return grads;
}

void Network::sgd_step(const Gradients& grads, double learning_rate) {
  if (grads.weights.size() != specs_.size() || grads.biases.size() != specs_.size())
    throw std::invalid_argument("nn: gradient layer count mismatch");
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    if (grads.weights[k].rows() != weights_[k].rows() ||
        grads.weights[k].cols() != weights_[k].cols() ||
        grads.biases[k].size() != biases_[k].size())
      throw std::invalid_argument("nn: gradient shape mismatch at layer " + std::to_string(k));
    if (!grads.weights[k].allFinite() || !grads.biases[k].allFinite())
      throw std::runtime_error("nn: non-finite gradient at layer " + std::to_string(k));
  }
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    weights_[k].noalias() -= learning_rate * grads.weights[k];
    biases_[k].noalias() -= learning_rate * grads.biases[k];
  }
  check_finite_after_step();
}

void Network::check_finite_after_step() {
  for (std::size_t k = 0; k < specs_.size(); ++k)
    if (!weights_[k].allFinite() || !biases_[k].allFinite())
      throw std::runtime_error("nn: non-finite weights after update at layer " + std::to_string(k));
}

double Network::mse(const Matrix& inputs, const Matrix& targets) {
  Matrix out = forward_batch(inputs, Mode::Eval);
  return mse_of(out, targets);
}

double Network::mse_with_pattern(const Matrix& inputs, const Matrix& targets,
                                 std::uint64_t* pattern_hash) const {
  if (inputs.cols() != input_width())
    throw std::invalid_argument("nn: mse_with_pattern input width mismatch");
  std::uint64_t h = 1469598103934665603ull;
  Matrix a = inputs;
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    Matrix z = a * weights_[k].transpose();
    z.rowwise() += biases_[k].transpose();
    if (specs_[k].activation == Activation::Rectifier) {
      const double* p = z.data();
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        h ^= static_cast<std::uint64_t>(p[i] > 0.0);
        h *= 1099511628211ull;
      }
    }
    apply_activation(specs_[k].activation, z);
    a = std::move(z);
  }
  if (pattern_hash != nullptr) *pattern_hash = h;
  return mse_of(a, targets);
}

double mse_of(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
    throw std::invalid_argument("nn: mse shape mismatch");
  if (outputs.size() == 0) return 0.0;
  return (outputs - targets).array().square().sum() / static_cast<double>(outputs.size());
}

double Trainer::step(Network& net, const TrainBatch& batch) {
  Matrix out = net.forward_batch(batch.inputs, Mode::Train);
  const double loss = mse_of(out, batch.targets);
  apply_gradients(net, net.backward(batch));
  return loss;
}

void Trainer::apply_gradients(Network& net, Gradients grads) {
  if (momentum_ == 0.0) {
    net.sgd_step(grads, learning_rate_);
    return;
  }
  if (velocity_w_.empty()) {
    velocity_w_.resize(grads.weights.size());
    velocity_b_.resize(grads.biases.size());
    for (std::size_t k = 0; k < grads.weights.size(); ++k) {
      velocity_w_[k] = Matrix::Zero(grads.weights[k].rows(), grads.weights[k].cols());
      velocity_b_[k] = Vector::Zero(grads.biases[k].size());
    }
  }
  for (std::size_t k = 0; k < grads.weights.size(); ++k) {
    velocity_w_[k] = momentum_ * velocity_w_[k] + grads.weights[k];
    velocity_b_[k] = momentum_ * velocity_b_[k] + grads.biases[k];
    grads.weights[k] = velocity_w_[k];
    grads.biases[k] = velocity_b_[k];
  }
  net.sgd_step(grads, learning_rate_);
}

void Network::save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint32_t>(specs_.size()));
  write_pod(out, static_cast<std::uint64_t>(seed_));
  for (const LayerSpec& s : specs_) {
    write_pod(out, static_cast<std::uint32_t>(s.input_width));
    write_pod(out, static_cast<std::uint32_t>(s.output_width));
    write_pod(out, static_cast<std::uint8_t>(s.activation));
    write_pod(out, s.dropout_rate);
  }
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    out.write(reinterpret_cast<const char*>(weights_[k].data()),
              static_cast<std::streamsize>(sizeof(double) * weights_[k].size()));
    out.write(reinterpret_cast<const char*>(biases_[k].data()),
              static_cast<std::streamsize>(sizeof(double) * biases_[k].size()));
  }
  if (!out) throw std::runtime_error("nn: checkpoint write failed");
}

Network Network::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("nn: bad checkpoint magic");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion)
    throw std::runtime_error("nn: unsupported checkpoint version " + std::to_string(version));
  const auto n_layers = read_pod<std::uint32_t>(in);
  const auto seed = read_pod<std::uint64_t>(in);
  std::vector<LayerSpec> specs;
  specs.reserve(n_layers);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    LayerSpec s;
    s.input_width = static_cast<int>(read_pod<std::uint32_t>(in));
    s.output_width = static_cast<int>(read_pod<std::uint32_t>(in));
    s.activation = static_cast<Activation>(read_pod<std::uint8_t>(in));
    s.dropout_rate = read_pod<double>(in);
    specs.push_back(s);
  }
  Network net(std::move(specs), seed);
  for (int k = 0; k < net.layer_count(); ++k) {
    in.read(reinterpret_cast<char*>(net.weight(k).data()),
            static_cast<std::streamsize>(sizeof(double) * net.weight(k).size()));
    in.read(reinterpret_cast<char*>(net.bias(k).data()),
            static_cast<std::streamsize>(sizeof(double) * net.bias(k).size()));
    if (!in) throw std::runtime_error("nn: truncated checkpoint payload");
  }
  return net;
}

}  // namespace exprl::nn

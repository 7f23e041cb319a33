#include "exprl/encoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "exprl/replay.hpp"

namespace exprl::encoder {

namespace instrumentation {
namespace {
std::atomic<long long> g_autoencoders{0};
}
long long autoencoders_constructed() { return g_autoencoders.load(); }
void reset_counters() { g_autoencoders.store(0); }
void count_autoencoder() { g_autoencoders.fetch_add(1); }
}  // namespace instrumentation

void AutoencoderSpec::validate() const {
  if (input_width <= 0) throw std::invalid_argument("encoder: input_width must be positive");
  if (hidden_widths.empty()) throw std::invalid_argument("encoder: no hidden layers");
  for (int w : hidden_widths)
    if (w <= 0) throw std::invalid_argument("encoder: hidden widths must be positive");
  const int n = static_cast<int>(hidden_widths.size());
  if (tap_index < 1 || tap_index > n)
    throw std::invalid_argument("encoder: tap_index outside 1.." + std::to_string(n));
  if (bottleneck_index < 1 || bottleneck_index > n)
    throw std::invalid_argument("encoder: bottleneck_index outside 1.." + std::to_string(n));
  for (int i = 1; i < bottleneck_index; ++i)
    if (hidden_widths[i] > hidden_widths[i - 1])
      throw std::invalid_argument("encoder: widths must not grow before the bottleneck");
  for (int i = bottleneck_index; i < n; ++i)
    if (hidden_widths[i] < hidden_widths[i - 1])
      throw std::invalid_argument("encoder: widths must not shrink after the bottleneck");
  if (hidden_widths.back() != input_width)
    throw std::invalid_argument("encoder: last hidden width must match the input width");
}

AutoencoderSpec default_spec(int input_width) {
  if (input_width <= 0) throw std::invalid_argument("encoder: input_width must be positive");
  auto scaled = [input_width](double f) {
    return std::max(4, static_cast<int>(std::lround(input_width * f)));
  };
  AutoencoderSpec spec;
  spec.input_width = input_width;
  spec.hidden_widths = {scaled(0.8), scaled(0.6), scaled(0.4), scaled(0.2),
                        scaled(0.4), scaled(0.6), scaled(0.8), input_width};
  spec.tap_index = 6;
  spec.bottleneck_index = 4;
  return spec;
}

namespace {

std::vector<nn::LayerSpec> full_layers(const AutoencoderSpec& spec) {
  std::vector<nn::LayerSpec> layers;
  int in = spec.input_width;
  const int n = static_cast<int>(spec.hidden_widths.size());
  for (int i = 0; i < n; ++i) {
    nn::LayerSpec layer;
    layer.input_width = in;
    layer.output_width = spec.hidden_widths[static_cast<std::size_t>(i)];
    // Rectifier inside the hourglass, sigmoid on the reconstruction layer so
    // outputs stay in the pixel range.
    layer.activation = i == n - 1 ? nn::Activation::Sigmoid : nn::Activation::Rectifier;
    layers.push_back(layer);
    in = layer.output_width;
  }
  return layers;
}

nn::Network tap_snapshot(const nn::Network& full, int tap_index) {
  std::vector<nn::LayerSpec> specs(full.layers().begin(), full.layers().begin() + tap_index);
  nn::Network snap(specs, full.seed());
  for (int k = 0; k < tap_index; ++k) {
    snap.weight(k) = full.weight(k);
    snap.bias(k) = full.bias(k);
  }
  return snap;
}

}  // namespace

EncoderHandle::EncoderHandle(nn::Network net, int version)
    : net_(std::move(net)), version_(version) {}

std::vector<double> EncoderHandle::encode(std::span<const double> pixels) const {
  return net_.forward(pixels, nn::Mode::Eval);
}

std::vector<double> EncoderHandle::encode(const envs::Frame& frame) const {
  return encode(std::span<const double>(frame.pixels));
}

FrameDataset build_static_dataset(envs::MdpEnv& env, int n_frames, std::uint64_t seed) {
  if (n_frames < 1) throw std::invalid_argument("encoder: n_frames must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(n_frames));
  envs::Frame frame = env.reset(rng.next_u64());
  rows.push_back(frame.pixels);
  while (static_cast<int>(rows.size()) < n_frames) {
    if (env.episode_over()) {
      frame = env.reset(rng.next_u64());
    } else {
      frame = env.step(rng.next_index(env.num_actions())).frame;
    }
    rows.push_back(frame.pixels);
  }
  return dataset_from_rows(rows);
}

FrameDataset dataset_from_rows(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) throw std::invalid_argument("encoder: empty frame collection");
  const std::size_t n = frames.size();
  const std::size_t test_n = n / 11;  // 10:1 split
  const std::size_t train_n = n - test_n;
  const Eigen::Index width = static_cast<Eigen::Index>(frames.front().size());
  FrameDataset data;
  data.train.resize(static_cast<Eigen::Index>(train_n), width);
  data.test.resize(static_cast<Eigen::Index>(test_n), width);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(frames[i].size()) != width)
      throw std::invalid_argument("encoder: inconsistent frame widths in dataset");
    auto row = Eigen::Map<const Eigen::RowVectorXd>(frames[i].data(), width);
    if (i < train_n)
      data.train.row(static_cast<Eigen::Index>(i)) = row;
    else
      data.test.row(static_cast<Eigen::Index>(i - train_n)) = row;
  }
  return data;
}

Autoencoder::Autoencoder(AutoencoderSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)),
      net_((spec_.validate(), full_layers(spec_)), substream_seed(seed, 0x41u)),
      batch_rng_(substream_seed(seed, 0x42u)) {
  instrumentation::count_autoencoder();
}

TrainStats Autoencoder::train(const FrameDataset& data, int epochs, double lr) {
  if (data.train.rows() == 0) throw std::invalid_argument("encoder: empty training split");
  if (data.train.cols() != spec_.input_width)
    throw std::invalid_argument("encoder: dataset width does not match the autoencoder input");
  const Eigen::Index n = data.train.rows();
  constexpr Eigen::Index kBatch = 32;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  nn::Trainer trainer(lr);
  long long step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates with the dedicated batch generator keeps runs repeatable.
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(batch_rng_.next_index(static_cast<int>(i + 1)))]);
    for (Eigen::Index begin = 0; begin < n; begin += kBatch) {
      const Eigen::Index count = std::min(kBatch, n - begin);
      nn::TrainBatch batch;
      batch.inputs.resize(count, data.train.cols());
      for (Eigen::Index b = 0; b < count; ++b)
        batch.inputs.row(b) = data.train.row(order[static_cast<std::size_t>(begin + b)]);
      batch.targets = batch.inputs;
      const double loss = trainer.step(net_, batch);
      ++step;
      if (!std::isfinite(loss))
        throw std::runtime_error("encoder: training diverged at minibatch step " +
                                 std::to_string(step));
    }
  }
  return evaluate(data);
}

TrainStats Autoencoder::evaluate(const FrameDataset& data) {
  TrainStats stats;
  stats.train_mse = data.train.rows() > 0 ? net_.mse(data.train, data.train) : 0.0;
  stats.test_mse = data.test.rows() > 0 ? net_.mse(data.test, data.test) : 0.0;
  return stats;
}

EncoderHandle Autoencoder::retrain(const FrameDataset& recent, int epochs, double lr) {
  if (epochs > 0) train(recent, epochs, lr);
  ++version_;
  return snapshot();
}

EncoderHandle Autoencoder::snapshot() const {
  return EncoderHandle(tap_snapshot(net_, spec_.tap_index), version_);
}

std::pair<EncoderHandle, TrainStats> train_autoencoder(const AutoencoderSpec& spec,
                                                       const FrameDataset& data, int epochs,
                                                       double lr, std::uint64_t seed) {
  Autoencoder ae(spec, seed);
  TrainStats stats = ae.train(data, epochs, lr);
  return {ae.snapshot(), stats};
}

void EncodeCache::bind(const EncoderHandle* handle) {
  if (handle_ == handle && handle != nullptr) return;
  handle_ = handle;
  identity_ = false;
  codes_.clear();
}

void EncodeCache::bind_identity() {
  handle_ = nullptr;
  identity_ = true;
  codes_.clear();
}

const std::vector<double>& EncodeCache::encode(const envs::Frame& frame) {
  if (handle_ == nullptr && !identity_)
    throw std::logic_error("encoder: EncodeCache used before bind()");
  const std::uint64_t h = replay::frame_hash(frame);
  auto& bucket = codes_[h];
  for (const auto& entry : bucket)
    if (entry.first == frame) return entry.second;
  bucket.emplace_back(frame, identity_ ? frame.pixels : handle_->encode(frame));
  return bucket.back().second;
}

void save_encoder(const EncoderHandle& handle, const AutoencoderSpec& spec,
                  const std::string& path_prefix) {
  {
    std::ofstream out(path_prefix + ".net", std::ios::binary);
    if (!out) throw std::runtime_error("encoder: cannot open " + path_prefix + ".net");
    handle.net().save(out);
  }
  nlohmann::json sidecar;
  sidecar["input_width"] = spec.input_width;
  sidecar["hidden_widths"] = spec.hidden_widths;
  sidecar["tap_index"] = spec.tap_index;
  sidecar["bottleneck_index"] = spec.bottleneck_index;
  sidecar["tap_width"] = handle.tap_width();
  sidecar["version"] = handle.version();
  std::ofstream out(path_prefix + ".json");
  if (!out) throw std::runtime_error("encoder: cannot open " + path_prefix + ".json");
  out << sidecar.dump(2) << "\n";
}

}  // namespace exprl::encoder

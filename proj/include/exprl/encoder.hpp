#pragma once

// The state encoder: an hourglass autoencoder trained to reconstruct frames,
// with the tap layer's output used as the low-dimensional code. Supports a
// static regime (trained once on random-play frames before the run) and a
// dynamic regime (retrained periodically on recent frames during the run).

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "exprl/envs.hpp"
#include "exprl/nn.hpp"
#include "exprl/rng.hpp"

namespace exprl::encoder {

struct AutoencoderSpec {
  int input_width = 0;
  std::vector<int> hidden_widths;  // hourglass; the last entry reconstructs the input
  int tap_index = 6;               // 1-based
  int bottleneck_index = 4;        // 1-based

  void validate() const;
  int tap_width() const { return hidden_widths[static_cast<std::size_t>(tap_index) - 1]; }
};

// Eight hidden layers shrinking to a bottleneck at index 4 and growing back
// to the input width; widths scale with the input size.
AutoencoderSpec default_spec(int input_width);

// Frozen snapshot of the autoencoder's first tap_index layers. Immutable
// between retrains; encode() is a pure function of (version, frame).
class EncoderHandle {
 public:
  EncoderHandle(nn::Network net, int version);

  std::vector<double> encode(const envs::Frame& frame) const;
  std::vector<double> encode(std::span<const double> pixels) const;

  int tap_width() const { return net_.output_width(); }
  int input_width() const { return net_.input_width(); }
  int version() const { return version_; }
  const nn::Network& net() const { return net_; }

 private:
  mutable nn::Network net_;  // eval-mode forwards only
  int version_;
};

struct FrameDataset {
  nn::Matrix train;  // rows are flattened frames
  nn::Matrix test;

  std::size_t train_size() const { return static_cast<std::size_t>(train.rows()); }
  std::size_t test_size() const { return static_cast<std::size_t>(test.rows()); }
};

// Frames collected from seeded random-action play, split 10:1 train:test
// (test gets floor(n/11) frames).
FrameDataset build_static_dataset(envs::MdpEnv& env, int n_frames, std::uint64_t seed);

FrameDataset dataset_from_rows(const std::vector<std::vector<double>>& frames);

struct TrainStats {
  double train_mse = 0.0;
  double test_mse = 0.0;
};

// Owns the full autoencoder; snapshots produce immutable handles.
class Autoencoder {
 public:
  Autoencoder(AutoencoderSpec spec, std::uint64_t seed);

  // Minibatch SGD on input reconstruction; `epochs` full passes over the
  // train split. Returns final reconstruction MSE on both splits.
  TrainStats train(const FrameDataset& data, int epochs, double lr);

  // Warm-start retraining on recent frames; increments the version even for
  // zero epochs. Returns the new frozen handle.
  EncoderHandle retrain(const FrameDataset& recent, int epochs, double lr);

  EncoderHandle snapshot() const;
  TrainStats evaluate(const FrameDataset& data);

  const AutoencoderSpec& spec() const { return spec_; }
  int version() const { return version_; }
  nn::Network& net() { return net_; }

 private:
  AutoencoderSpec spec_;
  nn::Network net_;
  Rng batch_rng_;
  int version_ = 1;
};

// Trains a fresh autoencoder and returns the tap-layer handle plus final
// reconstruction errors.
std::pair<EncoderHandle, TrainStats> train_autoencoder(const AutoencoderSpec& spec,
                                                       const FrameDataset& data, int epochs,
                                                       double lr, std::uint64_t seed);

// Memoizes encode() per (handle version, frame); safe because encode is pure.
// Identity mode serves the raw-pixels regime, where the code is the frame.
class EncodeCache {
 public:
  void bind(const EncoderHandle* handle);
  void bind_identity();
  const std::vector<double>& encode(const envs::Frame& frame);
  std::size_t size() const { return codes_.size(); }

 private:
  const EncoderHandle* handle_ = nullptr;
  bool identity_ = false;
  std::unordered_map<std::uint64_t, std::vector<std::pair<envs::Frame, std::vector<double>>>>
      codes_;
};

// Serializes the handle's network in the nn checkpoint format and writes a
// JSON sidecar (spec, version, tap index) next to it.
void save_encoder(const EncoderHandle& handle, const AutoencoderSpec& spec,
                  const std::string& path_prefix);

namespace instrumentation {
// Counts Autoencoder constructions; lets tests assert that non-bonus
// strategies never build an encoder.
long long autoencoders_constructed();
void reset_counters();
void count_autoencoder();
}  // namespace instrumentation

}  // namespace exprl::encoder

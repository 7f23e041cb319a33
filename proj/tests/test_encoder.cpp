#include <stdexcept>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "exprl/encoder.hpp"
#include "exprl/envs.hpp"
#include "test_support.hpp"

using namespace exprl;

namespace {

encoder::FrameDataset pixel_chain_corpus(int n_frames, std::uint64_t seed, int length = 20) {
  envs::PixelChain env(length);
  return encoder::build_static_dataset(env, n_frames, seed);
}

}  // namespace

TEST_CASE("default_spec: 160-pixel input gives the scaled hourglass with tap width 96") {
  const encoder::AutoencoderSpec spec = encoder::default_spec(160);
  CHECK(spec.hidden_widths == std::vector<int>{128, 96, 64, 32, 64, 96, 128, 160});
  CHECK(spec.tap_index == 6);
  CHECK(spec.bottleneck_index == 4);
  CHECK(spec.tap_width() == 96);
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("spec validation: hourglass shape and tap bounds are enforced") {
  encoder::AutoencoderSpec spec = encoder::default_spec(40);
  spec.hidden_widths[2] = 60;  // grows before the bottleneck
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = encoder::default_spec(40);
  spec.tap_index = 9;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);

  spec = encoder::default_spec(40);
  spec.hidden_widths.back() = 39;  // must reconstruct the input width
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("tap_width equals hidden_widths[tap_index-1] across specs") {
  for (int input : {40, 81, 160}) {
    encoder::AutoencoderSpec spec = encoder::default_spec(input);
    for (int tap = 1; tap <= 8; ++tap) {
      spec.tap_index = tap;
      CHECK(spec.tap_width() == spec.hidden_widths[static_cast<std::size_t>(tap - 1)]);
    }
  }
}

TEST_CASE("build_static_dataset: 1100 frames split 1000 train / 100 test, deterministic") {
  const encoder::FrameDataset a = pixel_chain_corpus(1100, 7);
  CHECK(a.train_size() == 1000);
  CHECK(a.test_size() == 100);
  const encoder::FrameDataset b = pixel_chain_corpus(1100, 7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.minCoeff() >= 0.0);
  CHECK(a.train.maxCoeff() <= 1.0);
}

TEST_CASE("train_autoencoder: constant all-zero dataset is learned to near-zero error") {
  std::vector<std::vector<double>> rows(44, std::vector<double>(20, 0.0));
  const encoder::FrameDataset data = encoder::dataset_from_rows(rows);
  encoder::AutoencoderSpec spec = encoder::default_spec(20);
  auto [handle, stats] = encoder::train_autoencoder(spec, data, 400, 2.0, 3);
  CHECK(stats.test_mse < 0.01);
  CHECK(stats.train_mse < 0.01);
}

TEST_CASE("train_autoencoder: PixelChain corpus halves the untrained test MSE") {
  const encoder::FrameDataset data = pixel_chain_corpus(1100, 11);
  const encoder::AutoencoderSpec spec = encoder::default_spec(20 * 8);
  encoder::Autoencoder ae(spec, 13);
  const double untrained = ae.evaluate(data).test_mse;
  const encoder::TrainStats stats = ae.train(data, 4, 2.0);
  CHECK(stats.test_mse <= 0.5 * untrained);
  // Small but non-trivial residual: below the test-frame variance, above zero.
  const double mean = data.test.mean();
  const double variance = (data.test.array() - mean).square().mean();
  CHECK(stats.test_mse < variance);
  CHECK(stats.test_mse > 0.0);
}

TEST_CASE("train_autoencoder: identical seeds give bit-identical handles") {
  const encoder::FrameDataset data = pixel_chain_corpus(330, 17, 10);
  const encoder::AutoencoderSpec spec = encoder::default_spec(80);
  auto [ha, sa] = encoder::train_autoencoder(spec, data, 2, 0.1, 19);
  auto [hb, sb] = encoder::train_autoencoder(spec, data, 2, 0.1, 19);
  CHECK(sa.test_mse == sb.test_mse);
  for (int k = 0; k < ha.net().layer_count(); ++k) {
    CHECK(ha.net().weight(k) == hb.net().weight(k));
    CHECK(ha.net().bias(k) == hb.net().bias(k));
  }
}

TEST_CASE("encode: zero-weight rectifier snapshot maps any frame to the zero vector") {
  encoder::Autoencoder ae(encoder::default_spec(40), 23);
  for (int k = 0; k < ae.net().layer_count(); ++k) {
    ae.net().weight(k).setZero();
    ae.net().bias(k).setZero();
  }
  const encoder::EncoderHandle handle = ae.snapshot();
  envs::PixelChain env(5);
  const std::vector<double> code = handle.encode(env.reset(1));
  REQUIRE(static_cast<int>(code.size()) == handle.tap_width());
  for (double v : code) CHECK(v == 0.0);
}

TEST_CASE("encode: pure function of (version, frame)") {
  encoder::Autoencoder ae(encoder::default_spec(40), 29);
  const encoder::EncoderHandle handle = ae.snapshot();
  envs::PixelChain env(5);
  const envs::Frame frame = env.reset(1);
  CHECK(handle.encode(frame) == handle.encode(frame));
}

TEST_CASE("encode: hand-set single-layer tap equals the loop oracle") {
  nn::Network tap({{3, 2, nn::Activation::Rectifier, 0.0}}, 31);
  tap.weight(0) << 0.5, -1.0, 2.0, -0.25, 0.75, 0.1;
  tap.bias(0) << 0.05, -0.02;
  const encoder::EncoderHandle handle(std::move(tap), 1);
  const std::vector<double> pixels{0.2, 0.9, 0.4};
  const std::vector<double> code = handle.encode(std::span<const double>(pixels));
  const std::vector<double> expected = test_support::ref_forward(handle.net(), pixels);
  REQUIRE(code.size() == expected.size());
  for (std::size_t i = 0; i < code.size(); ++i)
    CHECK(code[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("dynamic retrain: version increments; zero epochs leave weights unchanged") {
  encoder::Autoencoder ae(encoder::default_spec(40), 37);
  CHECK(ae.version() == 1);
  const nn::Matrix before = ae.net().weight(0);
  const encoder::FrameDataset data = pixel_chain_corpus(110, 39, 5);
  const encoder::EncoderHandle h2 = ae.retrain(data, 0, 0.1);
  CHECK(h2.version() == 2);
  CHECK(ae.net().weight(0) == before);
  const encoder::EncoderHandle h3 = ae.retrain(data, 1, 0.1);
  CHECK(h3.version() == 3);
  CHECK(ae.net().weight(0) != before);
}

TEST_CASE("dynamic retrain: old handles keep their codes after a retrain") {
  encoder::Autoencoder ae(encoder::default_spec(40), 41);
  const encoder::EncoderHandle old_handle = ae.snapshot();
  envs::PixelChain env(5);
  const envs::Frame frame = env.reset(1);
  const std::vector<double> before = old_handle.encode(frame);
  ae.retrain(pixel_chain_corpus(110, 43, 5), 2, 0.2);
  CHECK(old_handle.encode(frame) == before);
}

TEST_CASE("dynamic retrain improves held-out MSE in at least 7 of 10 GridMaze trials") {
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    envs::GridMaze env(7, 7);
    const encoder::FrameDataset warmup =
        encoder::build_static_dataset(env, 330, substream_seed(seed, 1));
    const encoder::FrameDataset recent =
        encoder::build_static_dataset(env, 330, substream_seed(seed, 2));
    encoder::Autoencoder ae(encoder::default_spec(49), seed);
    ae.train(warmup, 1, 2.0);
    const double before = ae.evaluate(recent).test_mse;
    ae.retrain(recent, 2, 2.0);
    const double after = ae.evaluate(recent).test_mse;
    if (after < before) ++improved;
  }
  CHECK(improved >= 7);
}

TEST_CASE("EncodeCache: memoizes per version and matches direct encode") {
  encoder::Autoencoder ae(encoder::default_spec(40), 47);
  encoder::EncoderHandle handle = ae.snapshot();
  encoder::EncodeCache cache;
  cache.bind(&handle);
  envs::PixelChain env(5);
  envs::Frame frame = env.reset(1);
  CHECK(cache.encode(frame) == handle.encode(frame));
  env.step(envs::PixelChain::kRight);
  CHECK(cache.size() == 1);
  const encoder::EncoderHandle h2 = ae.retrain(pixel_chain_corpus(110, 49, 5), 1, 0.1);
  cache.bind(&h2);
  CHECK(cache.size() == 0);  // rebinding a new snapshot invalidates the memo
  CHECK(cache.encode(frame) == h2.encode(frame));
}

TEST_CASE("save_encoder writes the checkpoint and JSON sidecar") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "exprl_encoder_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  encoder::Autoencoder ae(encoder::default_spec(40), 53);
  encoder::save_encoder(ae.snapshot(), ae.spec(), (dir / "encoder").string());
  CHECK(fs::exists(dir / "encoder.net"));
  CHECK(fs::exists(dir / "encoder.json"));
  std::ifstream net_in(dir / "encoder.net", std::ios::binary);
  const nn::Network restored = nn::Network::load(net_in);
  CHECK(restored.layer_count() == 6);
  std::ifstream json_in(dir / "encoder.json");
  std::string sidecar((std::istreambuf_iterator<char>(json_in)),
                      std::istreambuf_iterator<char>());
  CHECK(sidecar.find("\"tap_index\"") != std::string::npos);
  CHECK(sidecar.find("\"version\"") != std::string::npos);
  fs::remove_all(dir);
}

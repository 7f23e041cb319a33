#include <stdexcept>
#include "doctest.h"
#include "exprl/dynamics.hpp"
#include "exprl/envs.hpp"
#include "test_support.hpp"

using namespace exprl;

namespace {

// Identity encoder over 1-pixel-high frames so codes equal raw pixels.
encoder::EncoderHandle identity_handle(int width) {
  nn::Network net({{width, width, nn::Activation::Identity, 0.0}}, 1);
  net.weight(0).setIdentity();
  net.bias(0).setZero();
  return encoder::EncoderHandle(std::move(net), 1);
}

}  // namespace

TEST_CASE("dynamics: layer shapes are code+actions in, code out, two hidden layers") {
  dynamics::DynamicsModel m(6, 3, {5, 4}, 7);
  REQUIRE(m.net().layer_count() == 3);
  CHECK(m.net().input_width() == 9);
  CHECK(m.net().output_width() == 6);
  CHECK_THROWS_AS(dynamics::DynamicsModel(6, 3, {5, 4, 3}, 7), std::invalid_argument);
}

TEST_CASE("predict: zero-weight model predicts the zero vector") {
  dynamics::DynamicsModel m(4, 2, {3, 3}, 11);
  for (int k = 0; k < m.net().layer_count(); ++k) {
    m.net().weight(k).setZero();
    m.net().bias(k).setZero();
  }
  const std::vector<double> code{0.5, -0.2, 1.0, 0.1};
  for (double v : m.predict(code, 1)) CHECK(v == 0.0);
}

TEST_CASE("predict: deterministic and equal to the loop oracle on the padded input") {
  dynamics::DynamicsModel m(3, 2, {4, 4}, 13);
  const std::vector<double> code{0.25, -0.5, 0.75};
  const std::vector<double> a = m.predict(code, 0);
  const std::vector<double> b = m.predict(code, 0);
  CHECK(a == b);
  std::vector<double> padded{0.25, -0.5, 0.75, 1.0, 0.0};
  const std::vector<double> expected = test_support::ref_forward(m.net(), padded);
  REQUIRE(a.size() == expected.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("prediction_error: zero when the prediction matches the target exactly") {
  dynamics::DynamicsModel m(3, 2, {3, 3}, 17);
  for (int k = 0; k < m.net().layer_count(); ++k) {
    m.net().weight(k).setZero();
    m.net().bias(k).setZero();
  }
  const std::vector<double> code{0.1, 0.2, 0.3};
  CHECK(m.prediction_error(code, 0, std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("prediction_error: prediction [0,1,0] against target [1,0,0] gives 2.0") {
  dynamics::DynamicsModel m(3, 2, {3, 3}, 19);
  for (int k = 0; k < m.net().layer_count(); ++k) {
    m.net().weight(k).setZero();
    m.net().bias(k).setZero();
  }
  m.net().bias(2) << 0.0, 1.0, 0.0;  // output layer biases force the prediction
  const std::vector<double> code{0.4, 0.4, 0.4};
  CHECK(m.prediction_error(code, 1, std::vector<double>{1.0, 0.0, 0.0}) ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("prediction_error: matches an elementwise sum-of-squares oracle to 1e-12") {
  dynamics::DynamicsModel m(5, 3, {6, 6}, 23);
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> code(5), target(5);
    for (double& v : code) v = 2.0 * rng.next_double() - 1.0;
    for (double& v : target) v = 2.0 * rng.next_double() - 1.0;
    const int action = rng.next_index(3);
    const std::vector<double> predicted = m.predict(code, action);
    double oracle = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
      oracle += (target[i] - predicted[i]) * (target[i] - predicted[i]);
    CHECK(m.prediction_error(code, action, target) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("prediction_error is nonnegative") {
  dynamics::DynamicsModel m(4, 2, {4, 4}, 31);
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> code(4), target(4);
    for (double& v : code) v = 4.0 * rng.next_double() - 2.0;
    for (double& v : target) v = 4.0 * rng.next_double() - 2.0;
    CHECK(m.prediction_error(code, rng.next_index(2), target) >= 0.0);
  }
}

TEST_CASE("retrain: a single repeated pair converges below 1e-4 within 500 steps at lr 1e-2") {
  // One-hot 1x4 frames with an identity encoder: a fixed regression fixture.
  const envs::Frame f0{1, 4, {1.0, 0.0, 0.0, 0.0}};
  const envs::Frame f1{1, 4, {0.0, 1.0, 0.0, 0.0}};
  replay::FramePool pool;
  replay::MemoryBank bank(8);
  replay::Transition t;
  t.frame_t = pool.intern(f0);
  t.frame_t1 = pool.intern(f1);
  t.action = 1;
  bank.store(t);

  encoder::EncoderHandle handle = identity_handle(4);
  encoder::EncodeCache cache;
  cache.bind(&handle);
  dynamics::DynamicsModel m(4, 2, {16, 16}, 41);
  m.retrain(bank, pool, cache, 500, 1e-2);  // bank of one: each pass is one step
  const double e = m.prediction_error(cache.encode(f0), t.action, cache.encode(f1));
  CHECK(e < 1e-4);
}

TEST_CASE("retrain: zero epochs and empty banks leave the model unchanged") {
  envs::PixelChain env(4);
  replay::FramePool pool;
  replay::MemoryBank bank(8);
  encoder::EncoderHandle handle = identity_handle(env.frame_size());
  encoder::EncodeCache cache;
  cache.bind(&handle);
  dynamics::DynamicsModel m(env.frame_size(), 2, {8, 8}, 43);
  const nn::Matrix before = m.net().weight(0);
  m.retrain(bank, pool, cache, 3, 1e-2);  // empty bank: warn, no-op
  CHECK(m.net().weight(0) == before);
  const envs::Frame f0 = env.reset(1);
  replay::Transition t;
  t.frame_t = pool.intern(f0);
  t.frame_t1 = pool.intern(env.step(envs::PixelChain::kRight).frame);
  bank.store(t);
  m.retrain(bank, pool, cache, 0, 1e-2);  // zero epochs: no-op
  CHECK(m.net().weight(0) == before);
}

TEST_CASE("retrain: deterministic given the model seed") {
  envs::PixelChain env(6);
  replay::FramePool pool;
  replay::MemoryBank bank(64);
  Rng rng(47);
  envs::Frame frame = env.reset(1);
  for (int i = 0; i < 40; ++i) {
    if (env.episode_over()) frame = env.reset(rng.next_u64());
    const int action = rng.next_index(2);
    const envs::StepResult sr = env.step(action);
    replay::Transition t;
    t.frame_t = pool.intern(frame);
    t.frame_t1 = pool.intern(sr.frame);
    t.action = action;
    bank.store(t);
    frame = sr.frame;
  }
  encoder::EncoderHandle handle = identity_handle(env.frame_size());
  auto train_one = [&] {
    encoder::EncodeCache cache;
    cache.bind(&handle);
    dynamics::DynamicsModel m(env.frame_size(), 2, {12, 12}, 53);
    m.retrain(bank, pool, cache, 3, 1e-2);
    return m;
  };
  dynamics::DynamicsModel a = train_one();
  dynamics::DynamicsModel b = train_one();
  for (int k = 0; k < a.net().layer_count(); ++k) CHECK(a.net().weight(k) == b.net().weight(k));
}

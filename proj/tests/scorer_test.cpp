/* Copyright 2026 The RoomRank Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "roomrank/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roomrank/rng.hpp"

namespace {

using roomrank::backward;
using roomrank::ForwardMode;
using roomrank::huber_loss;
using roomrank::MelSpectrogram;
using roomrank::Rng;
using roomrank::ScorerModel;

MelSpectrogram random_mel(int h, int w, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  MelSpectrogram spec;
  spec.n_mels = h;
  spec.n_frames = w;
  spec.values.resize(static_cast<std::size_t>(h) * w);
  Rng rng(seed);
  for (auto& v : spec.values) v = rng.uniform(lo, hi);
  return spec;
}

ScorerModel tiny_model(std::uint64_t seed) {
  ScorerModel m = ScorerModel::architecture(6, 10, 1, 2, 3, 2, 4);
  m.init_weights(seed);
  return m;
}

std::filesystem::path temp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "roomrank_scorer_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Architecture, StandardShapeChain) {
  const ScorerModel m = ScorerModel::architecture(96, 500, 5, 16, 7, 5, 256);
  const auto chain = m.shape_chain();
  ASSERT_EQ(chain.size(), 6u);
  const std::array<int, 3> want[6] = {{1, 96, 500}, {16, 20, 100}, {16, 4, 20},
                                      {16, 1, 4},   {16, 1, 1},   {16, 1, 1}};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(chain[i], want[i]) << "stage " << i;
  }
  EXPECT_EQ(m.dense.in_n, 16);
  EXPECT_EQ(m.dense.out_n, 256);
  EXPECT_EQ(m.head.in_n, 256);
}

TEST(Architecture, StandardParameterCount) {
  const ScorerModel m = ScorerModel::architecture(96, 500, 5, 16, 7, 5, 256);
  // conv1 16*49+16, conv2..5 each 16*16*49+16, dense 256*16+256, head 257.
  EXPECT_EQ(m.parameter_count(), 55649u);
  EXPECT_EQ(m.flatten_parameters().size(), 55649u);
}

TEST(Forward, ZeroWeightsScoreExactlyHalf) {
  const ScorerModel m = ScorerModel::architecture(96, 500, 5, 16, 7, 5, 256);
  const MelSpectrogram spec = random_mel(96, 500, 41);
  EXPECT_DOUBLE_EQ(roomrank::forward(m, spec, ForwardMode::kInfer), 0.5);
}

TEST(Forward, InferenceIsDeterministic) {
  const ScorerModel m = ScorerModel::standard(17);
  const MelSpectrogram spec = random_mel(96, 500, 42);
  const double a = roomrank::forward(m, spec, ForwardMode::kInfer);
  const double b = roomrank::forward(m, spec, ForwardMode::kInfer);
  EXPECT_EQ(a, b);
  EXPECT_GT(a, 0.0);
  EXPECT_LT(a, 1.0);
}

TEST(Forward, SameSeedSameWeightsSameScore) {
  const MelSpectrogram spec = random_mel(96, 500, 43);
  const double a = roomrank::forward(ScorerModel::standard(7), spec, ForwardMode::kInfer);
  const double b = roomrank::forward(ScorerModel::standard(7), spec, ForwardMode::kInfer);
  const double c = roomrank::forward(ScorerModel::standard(8), spec, ForwardMode::kInfer);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Forward, RejectsShapeMismatchAndMissingRng) {
  const ScorerModel m = tiny_model(3);
  const MelSpectrogram wrong = random_mel(5, 10, 44);
  EXPECT_THROW(roomrank::forward(m, wrong, ForwardMode::kInfer), roomrank::InvalidArgument);
  const MelSpectrogram right = random_mel(6, 10, 45);
  EXPECT_THROW(roomrank::forward(m, right, ForwardMode::kTrain), roomrank::InvalidArgument);
}

// Literal re-implementation of the forward pass: zero-padded ceil-mode
// convolution, ReLU, dense, sigmoid, written as plain nested loops.
double literal_forward(const ScorerModel& m, const MelSpectrogram& spec) {
  const auto& L = m.conv[0];
  const int oh = (spec.n_mels + L.sh - 1) / L.sh;
  const int ow = (spec.n_frames + L.sw - 1) / L.sw;
  const int pad_y = std::max((oh - 1) * L.sh + L.kh - spec.n_mels, 0) / 2;
  const int pad_x = std::max((ow - 1) * L.sw + L.kw - spec.n_frames, 0) / 2;

  std::vector<double> conv_out(static_cast<std::size_t>(L.out_c) * oh * ow, 0.0);
  for (int oc = 0; oc < L.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = L.biases[static_cast<std::size_t>(oc)];
        for (int ky = 0; ky < L.kh; ++ky) {
          for (int kx = 0; kx < L.kw; ++kx) {
            const int iy = oy * L.sh - pad_y + ky;
            const int ix = ox * L.sw - pad_x + kx;
            if (iy < 0 || iy >= spec.n_mels || ix < 0 || ix >= spec.n_frames) continue;
            acc += L.weights[L.weight_index(oc, 0, ky, kx)] *
                   spec.values[static_cast<std::size_t>(iy) * spec.n_frames + ix];
          }
        }
        conv_out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = std::max(acc, 0.0);
      }
    }
  }

  std::vector<double> dense_out(static_cast<std::size_t>(m.dense.out_n));
  for (int o = 0; o < m.dense.out_n; ++o) {
    double acc = m.dense.biases[static_cast<std::size_t>(o)];
    for (int i = 0; i < m.dense.in_n; ++i) {
      acc += m.dense.weights[static_cast<std::size_t>(o) * m.dense.in_n + i] *
             conv_out[static_cast<std::size_t>(i)];
    }
    dense_out[static_cast<std::size_t>(o)] = std::max(acc, 0.0);
  }

  double z = m.head.biases[0];
  for (int i = 0; i < m.head.in_n; ++i) {
    z += m.head.weights[static_cast<std::size_t>(i)] * dense_out[static_cast<std::size_t>(i)];
  }
  z = std::clamp(z, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(-z));
}

TEST(Forward, MatchesLiteralLoopsOnATinyNet) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    ScorerModel m = tiny_model(seed);
    // Random biases too, so the zero-bias init does not hide bias handling.
    Rng rng(seed * 7 + 1);
    auto flat = m.flatten_parameters();
    for (double& v : flat) v += 0.05 * (rng.uniform() - 0.5);
    m.load_parameters(flat);
    const MelSpectrogram spec = random_mel(6, 10, seed * 13 + 2);
    const double got = roomrank::forward(m, spec, ForwardMode::kInfer);
    const double want = literal_forward(m, spec);
    ASSERT_NEAR(got, want, 1e-9) << "seed " << seed;
  }
}

TEST(Huber, HandComputedValuesAndGradients) {
  double grad = 0.0;
  EXPECT_DOUBLE_EQ(huber_loss(0.7, 0.7, 1.0, &grad), 0.0);
  EXPECT_DOUBLE_EQ(grad, 0.0);

  EXPECT_DOUBLE_EQ(huber_loss(1.0, 0.5, 1.0, &grad), 0.125);
  EXPECT_DOUBLE_EQ(grad, 0.5);

  EXPECT_DOUBLE_EQ(huber_loss(2.5, 0.5, 1.0, &grad), 1.5);
  EXPECT_DOUBLE_EQ(grad, 1.0);

  EXPECT_DOUBLE_EQ(huber_loss(-1.5, 0.5, 1.0, &grad), 1.5);
  EXPECT_DOUBLE_EQ(grad, -1.0);

  EXPECT_THROW(huber_loss(0.0, 0.0, 0.0), roomrank::InvalidArgument);
}

TEST(Backward, GradientsMatchFiniteDifferences) {
  ScorerModel m = tiny_model(5);
  const MelSpectrogram spec = random_mel(6, 10, 46);
  const double target = 0.3;

  const auto result = backward(m, spec, target, ForwardMode::kInfer);
  const auto analytic = result.grads.flatten();
  const auto theta = m.flatten_parameters();
  ASSERT_EQ(analytic.size(), theta.size());
  ASSERT_EQ(theta.size(), 149u);

  const double eps = 1e-3;
  Rng pick(47);
  int checked = 0;
  for (int probe = 0; probe < 20; ++probe) {
    const std::size_t k = pick.index(theta.size());
    auto plus = theta;
    plus[k] += eps;
    ScorerModel mp = m;
    mp.load_parameters(plus);
    const double lp = huber_loss(roomrank::forward(mp, spec, ForwardMode::kInfer), target);
    auto minus = theta;
    minus[k] -= eps;
    ScorerModel mm = m;
    mm.load_parameters(minus);
    const double lm = huber_loss(roomrank::forward(mm, spec, ForwardMode::kInfer), target);
    const double fd = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-8});
    if (std::abs(fd) < 1e-10 && std::abs(analytic[k]) < 1e-10) continue;
    ASSERT_LT(std::abs(fd - analytic[k]) / denom, 1e-3) << "param " << k;
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Backward, DeadNetworkHasOnlyAHeadBiasGradient) {
  const ScorerModel m = tiny_model(0);  // weights untouched below
  ScorerModel zero = ScorerModel::architecture(6, 10, 1, 2, 3, 2, 4);
  MelSpectrogram spec;
  spec.n_mels = 6;
  spec.n_frames = 10;
  spec.values.assign(60, 0.0);
  const auto result = backward(zero, spec, 0.0, ForwardMode::kInfer);
  EXPECT_DOUBLE_EQ(result.score, 0.5);
  const auto flat = result.grads.flatten();
  // Everything is gated off by dead ReLUs except the head bias: the head
  // bias gradient is d_huber * sigmoid'(0) = 0.5 * 0.25.
  EXPECT_DOUBLE_EQ(flat.back(), 0.125);
  for (std::size_t i = 0; i + 1 < flat.size(); ++i) {
    ASSERT_EQ(flat[i], 0.0) << "param " << i;
  }
}

TEST(Gradients, AccumulateAndScaleAreElementwise) {
  const ScorerModel m = tiny_model(9);
  const auto r1 = backward(m, random_mel(6, 10, 48), 0.2, ForwardMode::kInfer);
  const auto r2 = backward(m, random_mel(6, 10, 49), 0.9, ForwardMode::kInfer);

  roomrank::ScorerGradients acc(m);
  acc.accumulate(r1.grads);
  acc.accumulate(r2.grads, 2.0);
  const auto f1 = r1.grads.flatten();
  const auto f2 = r2.grads.flatten();
  const auto fa = acc.flatten();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    ASSERT_NEAR(fa[i], f1[i] + 2.0 * f2[i], 1e-15);
  }

  roomrank::ScorerGradients scaled(m);
  scaled.accumulate(r1.grads);
  scaled.scale(0.5);
  const auto fs = scaled.flatten();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    ASSERT_NEAR(fs[i], 0.5 * f1[i], 1e-15);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w = {0.0, 0.0, 0.0};
  const std::vector<double> g = {1.0, 0.0, -1.0};
  roomrank::AdamState state(3);
  roomrank::adam_step(w, g, state, 0.1);
  // Bias correction makes the first step exactly lr-sized (up to epsilon).
  EXPECT_NEAR(w[0], -0.1, 1e-8);
  EXPECT_DOUBLE_EQ(w[1], 0.0);
  EXPECT_NEAR(w[2], 0.1, 1e-8);
  EXPECT_EQ(state.step, 1);

  std::vector<double> short_g = {1.0};
  EXPECT_THROW(roomrank::adam_step(w, short_g, state, 0.1), roomrank::InvalidArgument);
}

TEST(Adam, ZeroGradientLeavesWeightsAlone) {
  std::vector<double> w = {0.3, -0.2};
  roomrank::AdamState state(2);
  for (int i = 0; i < 5; ++i) roomrank::adam_step(w, {0.0, 0.0}, state, 0.1);
  EXPECT_DOUBLE_EQ(w[0], 0.3);
  EXPECT_DOUBLE_EQ(w[1], -0.2);
}

// Finds a seed whose first augmentation coins follow `pattern` (true means
// the stage fires), replicating the draw order of augment().
std::uint64_t find_augment_seed(const std::array<bool, 5>& pattern, int h, int w) {
  for (std::uint64_t seed = 0; seed < 20000; ++seed) {
    Rng rng(seed);
    bool ok = true;
    for (int stage = 0; stage < 5 && ok; ++stage) {
      if (rng.coin(0.5) != pattern[static_cast<std::size_t>(stage)]) {
        ok = false;
        break;
      }
      if (!pattern[static_cast<std::size_t>(stage)]) continue;
      switch (stage) {
        case 0:
          rng.uniform(-6.0, 6.0);
          break;
        case 1: {
          const int ch = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(24, h))));
          const int cw = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(100, w))));
          rng.index(static_cast<std::uint64_t>(h - ch + 1));
          rng.index(static_cast<std::uint64_t>(w - cw + 1));
          break;
        }
        default:
          break;  // flips draw nothing; noise only draws after its coin
      }
    }
    if (ok) return seed;
  }
  ADD_FAILURE() << "no seed found for requested augmentation pattern";
  return 0;
}

TEST(Augment, AllStagesSkippedIsIdentity) {
  const MelSpectrogram spec = random_mel(16, 40, 50, -5.0, 0.0);
  const std::uint64_t seed = find_augment_seed({false, false, false, false, false}, 16, 40);
  Rng rng(seed);
  const MelSpectrogram out = roomrank::augment(spec, rng);
  EXPECT_EQ(out.values, spec.values);
}

TEST(Augment, HorizontalFlipAloneIsAnInvolution) {
  const MelSpectrogram spec = random_mel(16, 40, 51, -5.0, 0.0);
  const std::uint64_t seed = find_augment_seed({false, false, false, true, false}, 16, 40);
  Rng rng_a(seed);
  const MelSpectrogram once = roomrank::augment(spec, rng_a);
  EXPECT_NE(once.values, spec.values);
  EXPECT_EQ(once.at(3, 0), spec.at(3, 39));
  Rng rng_b(seed);
  const MelSpectrogram twice = roomrank::augment(once, rng_b);
  EXPECT_EQ(twice.values, spec.values);
}

TEST(Augment, CutoutAlonePaintsOneRectangleWithTheFloor) {
  const MelSpectrogram spec = random_mel(30, 120, 52, -5.0, 0.0);
  const std::uint64_t seed = find_augment_seed({false, true, false, false, false}, 30, 120);
  Rng rng(seed);
  const MelSpectrogram out = roomrank::augment(spec, rng);

  int min_y = 1 << 20, max_y = -1, min_x = 1 << 20, max_x = -1, changed = 0;
  for (int y = 0; y < spec.n_mels; ++y) {
    for (int x = 0; x < spec.n_frames; ++x) {
      if (out.at(y, x) != spec.at(y, x)) {
        ASSERT_EQ(out.at(y, x), roomrank::kLogFloor);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        ++changed;
      }
    }
  }
  ASSERT_GT(changed, 0);
  EXPECT_EQ(changed, (max_y - min_y + 1) * (max_x - min_x + 1));
  EXPECT_LE(max_y - min_y + 1, 24);
  EXPECT_LE(max_x - min_x + 1, 100);
}

TEST(Augment, GainAloneShiftsEveryCellEqually) {
  const MelSpectrogram spec = random_mel(16, 40, 53, -5.0, 0.0);
  const std::uint64_t seed = find_augment_seed({true, false, false, false, false}, 16, 40);
  Rng rng(seed);
  const MelSpectrogram out = roomrank::augment(spec, rng);
  const double shift = out.values[0] - spec.values[0];
  EXPECT_LE(std::abs(shift), 6.0 * std::numbers::ln10 / 10.0 + 1e-12);
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    ASSERT_NEAR(out.values[i] - spec.values[i], shift, 1e-12);
  }
}

TEST(Augment, TrainForwardConsumesRngReproducibly) {
  const ScorerModel m = ScorerModel::standard(29);
  const MelSpectrogram spec = random_mel(96, 500, 54);
  Rng rng_a(77), rng_b(77), rng_c(78);
  const double a = roomrank::forward(m, spec, ForwardMode::kTrain, &rng_a);
  const double b = roomrank::forward(m, spec, ForwardMode::kTrain, &rng_b);
  const double c = roomrank::forward(m, spec, ForwardMode::kTrain, &rng_c);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);  // a different dropout draw almost surely moves the score
}

TEST(ModelIo, SaveLoadRoundTripIsBitExactAfterQuantize) {
  ScorerModel m = ScorerModel::standard(23);
  m.quantize_to_float32();
  const MelSpectrogram spec = random_mel(96, 500, 55);
  const double before = roomrank::forward(m, spec, ForwardMode::kInfer);

  const auto path = temp_path("model.bin");
  roomrank::save_model(m, path);
  const ScorerModel back = roomrank::load_model(path);
  EXPECT_EQ(back.input_h, 96);
  EXPECT_EQ(back.input_w, 500);
  ASSERT_EQ(back.conv.size(), m.conv.size());
  EXPECT_EQ(back.flatten_parameters(), m.flatten_parameters());
  EXPECT_EQ(roomrank::forward(back, spec, ForwardMode::kInfer), before);
}

TEST(ModelIo, RejectsForeignAndDamagedFiles) {
  const auto magic = temp_path("magic.bin");
  std::ofstream(magic, std::ios::binary) << "NOPEate least a few bytes";
  EXPECT_THROW(roomrank::load_model(magic), roomrank::ModelFormatError);

  ScorerModel m = tiny_model(1);
  const auto good = temp_path("good.bin");
  roomrank::save_model(m, good);

  auto bytes = oracles::read_bytes(good);
  auto bad_version = bytes;
  bad_version[4] = 0xe7;  // version 999
  bad_version[5] = 0x03;
  const auto vpath = temp_path("version.bin");
  oracles::write_bytes(vpath, bad_version);
  try {
    roomrank::load_model(vpath);
    FAIL() << "expected ModelFormatError";
  } catch (const roomrank::ModelFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported version 999"), std::string::npos);
  }

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  const auto tpath = temp_path("truncated.bin");
  oracles::write_bytes(tpath, truncated);
  EXPECT_THROW(roomrank::load_model(tpath), roomrank::ModelFormatError);

  EXPECT_THROW(roomrank::load_model(temp_path("missing.bin")), roomrank::IoError);
}

TEST(ModelIo, LoadParametersChecksSize) {
  ScorerModel m = tiny_model(2);
  std::vector<double> wrong(10, 0.0);
  EXPECT_THROW(m.load_parameters(wrong), roomrank::InvalidArgument);
}

}  // namespace

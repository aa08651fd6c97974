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
// End-to-end release gate. Each criterion prints exactly one summary line so
// the run can be audited at a glance:
//
//   ACCEPTANCE <id> <pass|FAIL> <what was checked>
//
// The binary expects the CLI path as its first argument (used by the
// determinism criterion).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roomrank/roomrank.hpp"

namespace {

namespace fs = std::filesystem;

using roomrank::AudioBuffer;
using roomrank::LoadedCorpus;
using roomrank::MelSpectrogram;
using roomrank::Rng;
using roomrank::RoomSpec;
using roomrank::ScorerModel;
using roomrank::substream_seed;

std::string g_cli;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one criterion body and prints its verdict line whatever happens.
void criterion(const char* id, const char* what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    ADD_FAILURE() << id << " raised: " << e.what();
  }
  std::printf("ACCEPTANCE %s %s %s\n", id, ::testing::Test::HasFailure() ? "FAIL" : "pass", what);
  std::fflush(stdout);
}

fs::path temp_dir(const char* name) {
  auto dir = fs::temp_directory_path() / "roomrank_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// Scorer trained once on the 200-note synthetic corpus and shared by the
// criteria that need a working perceptual judge.
struct TrainedFixture {
  roomrank::TrainResult result;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  double val_accuracy = 0.0;
  double train_seconds = 0.0;
};

const TrainedFixture& trained() {
  static const TrainedFixture fixture = [] {
    TrainedFixture f;
    const fs::path dir = temp_dir("toy_corpus");
    const auto synthetic = roomrank::generate_synthetic_labeled_corpus(200, 42, dir);
    const auto ratings = roomrank::read_ratings_csv(synthetic.ratings_path);
    const auto split = roomrank::build_training_set(ratings, 42);

    const auto load = [&dir](const std::vector<roomrank::LabeledExample>& items) {
      std::vector<roomrank::TrainExample> examples;
      examples.reserve(items.size());
      for (const auto& item : items) {
        examples.push_back({roomrank::pipeline_mel(roomrank::read_wav(dir / item.audio_path)),
                            item.label});
      }
      return examples;
    };
    const auto train_set = load(split.train);
    const auto val_set = load(split.validation);
    f.n_train = train_set.size();
    f.n_val = val_set.size();

    roomrank::TrainConfig config;
    config.epochs = 50;
    config.seed = 42;
    const auto t0 = std::chrono::steady_clock::now();
    f.result = roomrank::train(train_set, val_set, config);
    f.train_seconds = seconds_since(t0);
    f.val_accuracy = roomrank::threshold_accuracy(f.result.model, val_set);
    return f;
  }();
  return fixture;
}

// The 500-room desk corpus shared by the enhancement criteria.
struct DeskFixture {
  fs::path dir;
  LoadedCorpus corpus;
};

const DeskFixture& desk() {
  static const DeskFixture fixture = [] {
    DeskFixture f;
    f.dir = temp_dir("desk_corpus");
    roomrank::sample_corpus(500, 21, 16000, f.dir);
    f.corpus = roomrank::prepare_corpus(f.dir, 1);
    return f;
  }();
  return fixture;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Steady loudness with a wide pitch vibrato, then silence. A room's
// frequency response turns the pitch sweep into loudness modulation, which
// is the effect the qualitative criterion looks for.
AudioBuffer vibrato_note(double f0, double depth_hz, double rate_hz, double dur) {
  AudioBuffer b;
  b.sample_rate = 16000;
  b.samples.assign(roomrank::kPipelineSamples, 0.0);
  const std::size_t n_on = static_cast<std::size_t>(16000 * dur);
  for (std::size_t i = 0; i < n_on && i < b.samples.size(); ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    const double phase = 2.0 * std::numbers::pi *
        (f0 * t - depth_hz / rate_hz / (2.0 * std::numbers::pi) *
                      std::cos(2.0 * std::numbers::pi * rate_hz * t));
    const double fade_in = std::min(1.0, static_cast<double>(i) / 400.0);
    const double fade_out = std::min(1.0, static_cast<double>(n_on - i) / 400.0);
    b.samples[i] = fade_in * fade_out * std::sin(phase);
  }
  roomrank::peak_normalize(b, 0.9);
  return b;
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1; echo $?";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 256> buf;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  pclose(pipe);
  r.code = std::atoi(r.out.c_str());
  return r;
}

TEST(Acceptance, C1ConvolutionOracle) {
  criterion("C1", "fft convolution matches direct on 200 random pairs", [] {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 200; ++i) {
      Rng rng(substream_seed(99, static_cast<std::uint64_t>(i)));
      AudioBuffer x, h;
      x.sample_rate = h.sample_rate = 16000;
      x.samples.resize(1 + rng.index(4096));
      h.samples.resize(1 + rng.index(1000));
      for (auto& v : x.samples) v = rng.uniform(-1.0, 1.0);
      for (auto& v : h.samples) v = rng.uniform(-1.0, 1.0);

      const AudioBuffer fft = roomrank::convolve_fft(x, h);
      const AudioBuffer direct = roomrank::convolve_direct(x, h);
      ASSERT_EQ(fft.samples.size(), direct.samples.size()) << "pair " << i;
      EXPECT_LT(oracles::rel_l2(fft.samples, direct.samples), 1e-6) << "pair " << i;
    }
    EXPECT_LT(seconds_since(t0), 10.0);
  });
}

TEST(Acceptance, C2RirPhysics) {
  criterion("C2", "first arrivals, full absorption, and Sabine RT60 agreement", [] {
    const auto t0 = std::chrono::steady_clock::now();

    // (a) The direct path lands at round(distance / c * fs) within one sample
    // on 50 random rooms.
    for (int r = 0; r < 50; ++r) {
      Rng rng(substream_seed(77, static_cast<std::uint64_t>(r)));
      RoomSpec spec;
      spec.length = rng.uniform(3.0, 10.0);
      spec.width = rng.uniform(2.5, 8.0);
      spec.height = rng.uniform(2.2, 5.0);
      spec.absorption.fill(0.3);
      spec.sample_rate = 16000;
      for (int axis = 0; axis < 3; ++axis) {
        const double d = axis == 0 ? spec.length : (axis == 1 ? spec.width : spec.height);
        spec.source_pos[axis] = rng.uniform(0.5, d - 0.5);
        spec.mic_pos[axis] = rng.uniform(0.5, d - 0.5);
      }
      double dist = 0.0;
      for (int axis = 0; axis < 3; ++axis) {
        const double dd = spec.source_pos[axis] - spec.mic_pos[axis];
        dist += dd * dd;
      }
      dist = std::sqrt(dist);
      ASSERT_GE(dist, 0.2) << "room " << r;

      const auto ir = roomrank::simulate_rir(spec);
      const long expected = std::lround(dist / 343.0 * 16000.0);
      const long got = static_cast<long>(roomrank::first_arrival_index(ir.h));
      EXPECT_LE(std::labs(got - expected), 1) << "room " << r;
    }

    // (b) Fully absorbing walls leave only the direct impulse.
    {
      RoomSpec spec;
      spec.length = 6.0;
      spec.width = 4.0;
      spec.height = 3.0;
      spec.absorption.fill(1.0);
      spec.source_pos = {1.2, 1.1, 1.4};
      spec.mic_pos = {4.3, 2.9, 1.9};
      spec.sample_rate = 16000;
      const auto ir = roomrank::simulate_rir(spec);
      const std::size_t first = roomrank::first_arrival_index(ir.h);
      double total = 0.0;
      double window = 0.0;
      for (std::size_t i = 0; i < ir.h.samples.size(); ++i) {
        const double e = ir.h.samples[i] * ir.h.samples[i];
        total += e;
        if (i + 50 >= first && i <= first + 50) window += e;
      }
      EXPECT_GT(window, 0.999 * total);
    }

    // (c) RT60 stays within 25% of Sabine on ten proportionate rooms with
    // uniform absorption spanning [0.2, 0.5].
    for (int i = 0; i < 10; ++i) {
      Rng rng(substream_seed(303, 6, static_cast<std::uint64_t>(i)));
      RoomSpec spec;
      spec.length = rng.uniform(4.5, 7.0);
      spec.width = rng.uniform(3.8, 6.0);
      spec.height = rng.uniform(3.0, 4.5);
      spec.absorption.fill(0.2 + 0.3 * i / 9.0);
      spec.sample_rate = 16000;
      spec.max_order = 40;
      for (int axis = 0; axis < 3; ++axis) {
        const double d = axis == 0 ? spec.length : (axis == 1 ? spec.width : spec.height);
        spec.source_pos[axis] = rng.uniform(0.8, d - 0.8);
        spec.mic_pos[axis] = rng.uniform(0.8, d - 0.8);
      }
      const auto ir = roomrank::simulate_rir(spec);
      const double rt = roomrank::estimate_rt60(ir);
      const double sabine = oracles::sabine_rt60(spec);
      EXPECT_GT(rt, 0.75 * sabine) << "room " << i;
      EXPECT_LT(rt, 1.25 * sabine) << "room " << i;
    }

    EXPECT_LT(seconds_since(t0), 120.0);
  });
}

TEST(Acceptance, C3FeatureShapes) {
  criterion("C3", "canonical note maps to 96x500 mel and length-500 traces", [] {
    AudioBuffer note;
    note.sample_rate = roomrank::kPipelineRate;
    note.samples.resize(roomrank::kPipelineSamples);
    for (std::size_t i = 0; i < note.samples.size(); ++i) {
      note.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
    }

    const MelSpectrogram mel = roomrank::mel_spectrogram(note);
    EXPECT_EQ(mel.n_mels, 96);
    EXPECT_EQ(mel.n_frames, 500);
    EXPECT_EQ(mel.values.size(), 96u * 500u);
    EXPECT_EQ(roomrank::energy_envelope(note).size(), 500u);
    EXPECT_EQ(roomrank::spectral_centroid(note).size(), 500u);
  });
}

TEST(Acceptance, C4GradientCheck) {
  criterion("C4", "backprop matches finite differences on a small network", [] {
    ScorerModel m = ScorerModel::architecture(6, 10, 1, 2, 3, 2, 4);
    m.init_weights(5);
    ASSERT_LE(m.parameter_count(), 200u);

    MelSpectrogram spec;
    spec.n_mels = 6;
    spec.n_frames = 10;
    spec.values.resize(60);
    Rng fill(46);
    for (auto& v : spec.values) v = fill.uniform(-2.0, 2.0);
    const double target = 0.3;

    const auto result = roomrank::backward(m, spec, target, roomrank::ForwardMode::kInfer);
    const auto analytic = result.grads.flatten();
    const auto theta = m.flatten_parameters();

    const double eps = 1e-3;
    Rng pick(47);
    double worst = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
      const std::size_t k = pick.index(theta.size());
      auto plus = theta;
      plus[k] += eps;
      ScorerModel mp = m;
      mp.load_parameters(plus);
      const double lp =
          roomrank::huber_loss(roomrank::forward(mp, spec, roomrank::ForwardMode::kInfer), target);
      auto minus = theta;
      minus[k] -= eps;
      ScorerModel mm = m;
      mm.load_parameters(minus);
      const double lm =
          roomrank::huber_loss(roomrank::forward(mm, spec, roomrank::ForwardMode::kInfer), target);
      const double fd = (lp - lm) / (2.0 * eps);
      if (std::abs(fd) < 1e-10 && std::abs(analytic[k]) < 1e-10) continue;
      const double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-8});
      worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
    }
    EXPECT_LT(worst, 1e-3);
  });
}

TEST(Acceptance, C5ToyTraining) {
  criterion("C5", "synthetic corpus training reaches 90% validation accuracy", [] {
    const TrainedFixture& f = trained();
    EXPECT_EQ(f.n_train, 180u);
    EXPECT_EQ(f.n_val, 20u);
    EXPECT_GE(f.val_accuracy, 0.9) << "validation accuracy " << f.val_accuracy;
    EXPECT_LT(f.train_seconds, 600.0);
  });
}

TEST(Acceptance, C6EnhancementFloorAndMajorityImprovement) {
  criterion("C6", "identity floor holds and most low notes improve over 500 rooms", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const ScorerModel& model = trained().result.model;
    const LoadedCorpus& corpus = desk().corpus;

    std::vector<roomrank::NoteInput> notes;
    for (int i = 0; i < 150 && notes.size() < 100; ++i) {
      Rng rng(substream_seed(4242, roomrank::kStreamToyNote, static_cast<std::uint64_t>(i)));
      AudioBuffer note = roomrank::detail::synth_bad_note(rng);
      if (roomrank::score_note(note, model) < 0.5) {
        notes.push_back({"bad_" + std::to_string(i) + ".wav", std::move(note)});
      }
    }
    ASSERT_EQ(notes.size(), 100u);

    const auto stats = roomrank::batch_stats(notes, corpus, model, 0.5, 10, 1);
    EXPECT_EQ(stats.n_notes, 100);
    for (const auto& r : stats.results) {
      EXPECT_GE(r.score_delta, 0.0) << r.note_path;
      EXPECT_GE(r.best_score, r.original_score) << r.note_path;
    }
    EXPECT_GT(stats.fraction_improved, 0.5) << "fraction " << stats.fraction_improved;
    EXPECT_LT(seconds_since(t0), 1800.0);
  });
}

TEST(Acceptance, C7CliDeterminism) {
  criterion("C7", "corpus, training, and enhancement reruns are byte-identical", [] {
    ASSERT_FALSE(g_cli.empty());
    const fs::path base = temp_dir("cli");

    // Corpus generation.
    const auto corpus_a = base / "corpus_a";
    const auto corpus_b = base / "corpus_b";
    ASSERT_EQ(run_cli("gen-corpus --count 12 --seed 9 --out " + corpus_a.string()).code, 0);
    ASSERT_EQ(run_cli("gen-corpus --count 12 --seed 9 --out " + corpus_b.string()).code, 0);
    EXPECT_EQ(read_bytes(corpus_a / "manifest.json"), read_bytes(corpus_b / "manifest.json"));
    EXPECT_EQ(read_bytes(corpus_a / "irs/room_00000_point_011.wav"),
              read_bytes(corpus_b / "irs/room_00000_point_011.wav"));

    // Training.
    const auto model_a = base / "model_a.bin";
    const auto model_b = base / "model_b.bin";
    ASSERT_EQ(run_cli("train --synthetic 20 --epochs 2 --seed 11 --audio " +
                      (base / "synth_a").string() + " --out " + model_a.string())
                  .code,
              0);
    ASSERT_EQ(run_cli("train --synthetic 20 --epochs 2 --seed 11 --audio " +
                      (base / "synth_b").string() + " --out " + model_b.string())
                  .code,
              0);
    EXPECT_EQ(read_bytes(model_a), read_bytes(model_b));

    // Enhancement, including worker-count independence.
    const auto note = base / "synth_a" / "note_00000.wav";
    const auto enhance_once = [&](const char* tag, const char* workers) {
      const auto wav = base / (std::string("enhanced_") + tag + ".wav");
      const auto report = base / (std::string("report_") + tag + ".json");
      return run_cli("enhance --model " + model_a.string() + " --corpus " + corpus_a.string() +
                     " --in " + note.string() + " --out " + wav.string() + " --report " +
                     report.string() + " --workers " + workers)
          .code;
    };
    ASSERT_EQ(enhance_once("a", "1"), 0);
    ASSERT_EQ(enhance_once("b", "1"), 0);
    ASSERT_EQ(enhance_once("w8", "8"), 0);
    EXPECT_EQ(read_bytes(base / "report_a.json"), read_bytes(base / "report_b.json"));
    EXPECT_EQ(read_bytes(base / "enhanced_a.wav"), read_bytes(base / "enhanced_b.wav"));
    EXPECT_EQ(read_bytes(base / "report_a.json"), read_bytes(base / "report_w8.json"));
    EXPECT_EQ(read_bytes(base / "enhanced_a.wav"), read_bytes(base / "enhanced_w8.wav"));
  });
}

TEST(Acceptance, C8ModelRoundTrip) {
  criterion("C8", "saved and reloaded model scores match bit for bit", [] {
    ScorerModel model = ScorerModel::standard(17);
    model.quantize_to_float32();

    std::vector<AudioBuffer> notes;
    for (int i = 0; i < 20; ++i) {
      Rng rng(substream_seed(888, static_cast<std::uint64_t>(i)));
      AudioBuffer b;
      b.sample_rate = 16000;
      b.samples.resize(16000 + rng.index(48000));
      const double f0 = rng.uniform(100.0, 2000.0);
      for (std::size_t k = 0; k < b.samples.size(); ++k) {
        b.samples[k] = std::sin(2.0 * std::numbers::pi * f0 * k / 16000.0) +
                       0.1 * rng.gaussian();
      }
      notes.push_back(std::move(b));
    }

    std::vector<double> before;
    before.reserve(notes.size());
    for (const auto& n : notes) before.push_back(roomrank::score_note(n, model));

    const fs::path path = temp_dir("round_trip") / "model.bin";
    roomrank::save_model(model, path);
    const ScorerModel loaded = roomrank::load_model(path);
    for (std::size_t i = 0; i < notes.size(); ++i) {
      EXPECT_EQ(roomrank::score_note(notes[i], loaded), before[i]) << "note " << i;
    }
  });
}

TEST(Acceptance, C9ReverbMechanisms) {
  criterion("C9", "a long-reverb pick doubles envelope peaks and moves the centroid", [] {
    const ScorerModel& model = trained().result.model;
    const DeskFixture& d = desk();

    // Rank against the rooms whose reverberation estimate exceeds a second
    // and take the top-ranked room.
    LoadedCorpus sub = d.corpus;
    sub.entries.clear();
    for (const auto& e : d.corpus.entries) {
      if (e.rt60_est && *e.rt60_est > 1.0) sub.entries.push_back(e);
    }
    ASSERT_FALSE(sub.entries.empty());

    const AudioBuffer note = vibrato_note(330.0, 35.0, 5.0, 3.0);
    const auto ranked = roomrank::rank_note(note, "vibrato.wav", sub, model, 5, 1);
    int chosen = -1;
    for (const auto& e : ranked.top_k) {
      if (e.index >= 0) {
        chosen = e.index;
        break;
      }
    }
    ASSERT_GE(chosen, 0);
    const auto& entry = d.corpus.manifest.entries[static_cast<std::size_t>(chosen)];
    ASSERT_TRUE(entry.rt60_est.has_value());
    EXPECT_GT(*entry.rt60_est, 1.0);

    AudioBuffer dry = roomrank::canonicalize(note);
    roomrank::peak_normalize(dry);
    AudioBuffer canon = roomrank::canonicalize(note);
    const auto wet = roomrank::apply_room(canon, roomrank::load_corpus_ir(d.dir, entry));

    const int peaks_dry = oracles::count_envelope_peaks(roomrank::energy_envelope(dry));
    const int peaks_wet = oracles::count_envelope_peaks(roomrank::energy_envelope(wet.audio));
    ASSERT_GE(peaks_dry, 1);
    EXPECT_GE(peaks_wet, 2 * peaks_dry) << peaks_dry << " -> " << peaks_wet;

    const double centroid_dry = mean_of(roomrank::spectral_centroid(dry));
    const double centroid_wet = mean_of(roomrank::spectral_centroid(wet.audio));
    ASSERT_GT(centroid_dry, 0.0);
    EXPECT_GT(std::abs(centroid_wet - centroid_dry) / centroid_dry, 0.05)
        << centroid_dry << " -> " << centroid_wet;
  });
}

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc > 1) g_cli = argv[1];
  return RUN_ALL_TESTS();
}

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
#ifndef ROOMRANK_DATASET_HPP_
#define ROOMRANK_DATASET_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "roomrank/audio.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/rng.hpp"
#include "roomrank/wav.hpp"

namespace roomrank {

inline constexpr std::uint64_t kStreamToyNote = 3;
inline constexpr std::uint64_t kStreamSplit = 4;

struct RatingRow {
  std::string audio_path;
  std::string rater_id;
  double rating = 0.0;
};

struct RatingsManifest {
  std::vector<RatingRow> rows;
};

struct LabeledExample {
  std::string audio_path;
  double label = 0.0;
};

struct TrainingSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
};

inline RatingsManifest read_ratings_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open ratings file: " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw DatasetError("empty ratings file: " + path.string());
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "audio_path,rater_id,rating") {
    throw DatasetError("ratings file must start with header audio_path,rater_id,rating");
  }

  RatingsManifest manifest;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    RatingRow row;
    std::string rating_text;
    if (!std::getline(ss, row.audio_path, ',') || !std::getline(ss, row.rater_id, ',') ||
        !std::getline(ss, rating_text)) {
      throw DatasetError("malformed ratings row at line " + std::to_string(line_no));
    }
    try {
      row.rating = std::stod(rating_text);
    } catch (const std::exception&) {
      throw DatasetError("bad rating value at line " + std::to_string(line_no));
    }
    if (!(row.rating >= 0.0 && row.rating <= 1.0)) {
      throw DatasetError("rating out of [0,1] at line " + std::to_string(line_no));
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

inline void write_ratings_csv(const std::filesystem::path& path, const RatingsManifest& manifest) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write ratings file: " + path.string());
  f << "audio_path,rater_id,rating\n";
  char buf[32];
  for (const auto& row : manifest.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.rating);
    f << row.audio_path << ',' << row.rater_id << ',' << buf << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

// Consensus filtering: an item survives iff at least two raters rated it and
// the ratings all agree within agreement_epsilon; its label is their mean.
// The validation split reserves 200 items or 10%, whichever is smaller.
inline TrainingSplit build_training_set(const RatingsManifest& manifest, std::uint64_t seed,
                                        double agreement_epsilon = 0.25) {
  std::vector<std::string> order;
  std::vector<std::vector<double>> ratings;
  for (const auto& row : manifest.rows) {
    auto it = std::find(order.begin(), order.end(), row.audio_path);
    if (it == order.end()) {
      order.push_back(row.audio_path);
      ratings.emplace_back();
      it = order.end() - 1;
    }
    ratings[static_cast<std::size_t>(it - order.begin())].push_back(row.rating);
  }

  std::vector<LabeledExample> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& r = ratings[i];
    if (r.size() < 2) continue;
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    if (*hi - *lo > agreement_epsilon) continue;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    kept.push_back({order[i], mean});
  }
  if (kept.empty()) throw DatasetError("no consensus labels");

  std::vector<std::size_t> index(kept.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  Rng rng(substream_seed(seed, kStreamSplit));
  shuffle(index, rng);

  const std::size_t n_val = std::min<std::size_t>(200, kept.size() / 10);
  TrainingSplit split;
  for (std::size_t i = 0; i < index.size(); ++i) {
    (i < n_val ? split.validation : split.train).push_back(kept[index[i]]);
  }
  return split;
}

namespace detail {

// Harmonic tone with amplitude modulation and a raised-cosine attack.
inline AudioBuffer synth_good_note(Rng& rng) {
  const double f0 = rng.uniform(150.0, 600.0);
  const int n_partials = 3 + static_cast<int>(rng.index(6));  // 3..8
  const double am_rate = rng.uniform(3.0, 6.0);
  const double am_depth = rng.uniform(0.2, 0.5);
  const double attack_s = rng.uniform(0.05, 0.2);
  std::vector<double> phases(static_cast<std::size_t>(n_partials));
  for (auto& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  AudioBuffer note;
  note.sample_rate = kPipelineRate;
  note.samples.resize(kPipelineSamples);
  for (std::size_t i = 0; i < kPipelineSamples; ++i) {
    const double t = static_cast<double>(i) / kPipelineRate;
    double tone = 0.0;
    for (int k = 1; k <= n_partials; ++k) {
      tone += std::sin(2.0 * std::numbers::pi * k * f0 * t + phases[static_cast<std::size_t>(k) - 1]) / k;
    }
    const double attack =
        t < attack_s ? 0.5 * (1.0 - std::cos(std::numbers::pi * t / attack_s)) : 1.0;
    const double am = 1.0 + am_depth * std::sin(2.0 * std::numbers::pi * am_rate * t);
    note.samples[i] = attack * am * tone;
  }
  peak_normalize(note, 0.9);
  return note;
}

// Single static partial buried in Gaussian noise at 10-20 dB SNR.
inline AudioBuffer synth_bad_note(Rng& rng) {
  const double freq = rng.uniform(200.0, 2000.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double snr_db = rng.uniform(10.0, 20.0);
  const double noise_sigma = std::sqrt(0.5 / std::pow(10.0, snr_db / 10.0));

  AudioBuffer note;
  note.sample_rate = kPipelineRate;
  note.samples.resize(kPipelineSamples);
  for (std::size_t i = 0; i < kPipelineSamples; ++i) {
    const double t = static_cast<double>(i) / kPipelineRate;
    note.samples[i] =
        std::sin(2.0 * std::numbers::pi * freq * t + phase) + noise_sigma * rng.gaussian();
  }
  peak_normalize(note, 0.9);
  return note;
}

}  // namespace detail

struct SyntheticCorpus {
  std::filesystem::path ratings_path;
  RatingsManifest ratings;
  std::vector<LabeledExample> truth;  // 1.0 = modulated harmonic, 0.0 = static noisy
};

// Stand-in for a human-rated note set: alternating "good" (harmonic,
// amplitude-modulated, soft attack) and "bad" (static sine plus noise)
// notes, each rated by two jittery synthetic raters.
inline SyntheticCorpus generate_synthetic_labeled_corpus(int n, std::uint64_t seed,
                                                         const std::filesystem::path& out_dir) {
  if (n < 2) throw InvalidArgument("synthetic corpus needs at least 2 notes");
  std::filesystem::create_directories(out_dir);

  SyntheticCorpus corpus;
  char buf[32];
  for (int i = 0; i < n; ++i) {
    Rng rng(substream_seed(seed, kStreamToyNote, static_cast<std::uint64_t>(i)));
    const bool good = (i % 2) == 0;
    const AudioBuffer note = good ? detail::synth_good_note(rng) : detail::synth_bad_note(rng);

    std::snprintf(buf, sizeof(buf), "note_%05d.wav", i);
    const std::string name = buf;
    write_wav(out_dir / name, note, WavEncoding::kFloat32);
    corpus.truth.push_back({name, good ? 1.0 : 0.0});

    const double base = good ? 1.0 : 0.0;
    for (const char* rater : {"rater_1", "rater_2"}) {
      const double rating = std::clamp(base + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      corpus.ratings.rows.push_back({name, rater, rating});
    }
  }
  corpus.ratings_path = out_dir / "ratings.csv";
  write_ratings_csv(corpus.ratings_path, corpus.ratings);
  return corpus;
}

}  // namespace roomrank

#endif  // ROOMRANK_DATASET_HPP_

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
#ifndef ROOMRANK_RANKER_HPP_
#define ROOMRANK_RANKER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "roomrank/audio.hpp"
#include "roomrank/convolve.hpp"
#include "roomrank/corpus.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/features.hpp"
#include "roomrank/fft.hpp"
#include "roomrank/parallel.hpp"
#include "roomrank/scorer.hpp"

namespace roomrank {

inline constexpr const char* kIdentityId = "identity";

inline double score_note(const AudioBuffer& note, const ScorerModel& model) {
  return forward(model, pipeline_mel(note), ForwardMode::kInfer);
}

// A corpus entry readied for repeated convolution: the truncated IR's
// forward spectrum at the FFT size apply_room would pick for it.
struct PreparedIr {
  int index = 0;  // position in the manifest
  IrRef ref;
  std::string room_class;
  std::string ir_path;
  std::optional<double> rt60_est;
  std::size_t h_len = 0;
  std::size_t fft_size = 0;
  std::vector<std::complex<double>> spectrum;
};

struct LoadedCorpus {
  std::filesystem::path root;
  CorpusManifest manifest;
  std::vector<PreparedIr> entries;    // ascending manifest index
  std::vector<std::string> failures;  // skipped entries, "path: reason"
};

// Loads every IR the manifest lists and caches its spectrum. Unreadable
// entries are recorded in failures and excluded; the scan must survive a few
// bad files in a large corpus.
inline LoadedCorpus prepare_corpus(const std::filesystem::path& corpus_dir, int workers = 1) {
  LoadedCorpus corpus;
  corpus.root = corpus_dir;
  corpus.manifest = load_corpus_manifest(corpus_dir);
  const std::size_t n = corpus.manifest.entries.size();
  if (n == 0) throw DatasetError("corpus has no entries");

  std::vector<PreparedIr> slots(n);
  std::vector<std::string> errors(n);
  parallel_for(n, resolve_workers(workers), [&](std::size_t i) {
    const CorpusEntry& e = corpus.manifest.entries[i];
    try {
      ImpulseResponse ir = load_corpus_ir(corpus.root, e);
      PreparedIr p;
      p.index = static_cast<int>(i);
      p.ref = {e.room_id, e.point_id};
      p.room_class = e.room_class;
      p.ir_path = e.ir_path;
      p.rt60_est = e.rt60_est;
      std::vector<double>& h = ir.h.samples;
      if (h.size() > kPipelineSamples) h.resize(kPipelineSamples);
      p.h_len = h.size();
      p.fft_size = next_pow2(kPipelineSamples + p.h_len - 1);
      std::vector<double> hp(p.fft_size, 0.0);
      std::copy(h.begin(), h.end(), hp.begin());
      p.spectrum = rfft(hp);
      slots[i] = std::move(p);
    } catch (const std::exception& ex) {
      errors[i] = e.ir_path + ": " + ex.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i].empty()) {
      corpus.entries.push_back(std::move(slots[i]));
    } else {
      corpus.failures.push_back(std::move(errors[i]));
    }
  }
  return corpus;
}

struct RankedEntry {
  int index = -1;  // -1 is the injected identity IR
  IrRef ref;
  double score = 0.0;
};

struct RankedResult {
  std::string note_path;
  double original_score = 0.0;
  double best_score = 0.0;
  IrRef best_ir;
  int best_index = -1;
  std::vector<RankedEntry> top_k;  // sorted by (score desc, index asc)
  double score_delta = 0.0;        // best_score - original_score
  std::string best_room_class = kIdentityId;
  std::string best_ir_path;
  std::optional<double> best_rt60;
};

// Scores the note through every prepared IR plus the identity at index -1,
// whose score is the original score by construction, so the best can never
// fall below it. Ties go to the lowest index. Worker count only partitions
// the scan; scores and the ordered reduction do not depend on it.
inline RankedResult rank_note(const AudioBuffer& note, const std::string& note_path,
                              const LoadedCorpus& corpus, const ScorerModel& model, int k = 10,
                              int workers = 1) {
  if (k < 1) throw InvalidArgument("top-k size must be at least 1");

  AudioBuffer canon = canonicalize(note);
  AudioBuffer base = canon;
  peak_normalize(base);
  const double original = forward(model, mel_spectrogram(base), ForwardMode::kInfer);

  // One forward spectrum of the dry note per distinct FFT size in the corpus.
  std::map<std::size_t, std::vector<std::complex<double>>> note_spectra;
  for (const auto& e : corpus.entries) {
    if (note_spectra.count(e.fft_size) == 0) {
      std::vector<double> xp(e.fft_size, 0.0);
      std::copy(canon.samples.begin(), canon.samples.end(), xp.begin());
      note_spectra.emplace(e.fft_size, rfft(xp));
    }
  }

  std::vector<double> scores(corpus.entries.size(), 0.0);
  parallel_for(corpus.entries.size(), resolve_workers(workers), [&](std::size_t i) {
    const PreparedIr& e = corpus.entries[i];
    std::vector<std::complex<double>> y_spec = note_spectra.at(e.fft_size);
    detail::cmul_inplace(y_spec, e.spectrum);
    AudioBuffer wet{irfft(y_spec, e.fft_size), kPipelineRate};
    wet.samples.resize(kPipelineSamples);
    peak_normalize(wet);
    scores[i] = forward(model, mel_spectrogram(wet), ForwardMode::kInfer);
  });

  int best_pos = -1;
  double best = original;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > best) {
      best = scores[i];
      best_pos = static_cast<int>(i);
    }
  }

  std::vector<RankedEntry> ranking;
  ranking.reserve(corpus.entries.size() + 1);
  ranking.push_back({-1, {kIdentityId, kIdentityId}, original});
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    ranking.push_back({corpus.entries[i].index, corpus.entries[i].ref, scores[i]});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  if (ranking.size() > static_cast<std::size_t>(k)) ranking.resize(static_cast<std::size_t>(k));

  RankedResult result;
  result.note_path = note_path;
  result.original_score = original;
  result.best_score = best;
  result.score_delta = best - original;
  result.top_k = std::move(ranking);
  if (best_pos < 0) {
    result.best_index = -1;
    result.best_ir = {kIdentityId, kIdentityId};
  } else {
    const PreparedIr& winner = corpus.entries[static_cast<std::size_t>(best_pos)];
    result.best_index = winner.index;
    result.best_ir = winner.ref;
    result.best_room_class = winner.room_class;
    result.best_ir_path = winner.ir_path;
    result.best_rt60 = winner.rt60_est;
  }
  return result;
}

struct EnhanceOutput {
  RankedResult result;
  ConvolutionResult enhanced;
};

// rank_note plus a rendering of the winning room's output. An identity win
// returns the normalized dry note untouched by any convolution.
inline EnhanceOutput enhance(const AudioBuffer& note, const std::string& note_path,
                             const LoadedCorpus& corpus, const ScorerModel& model, int k = 10,
                             int workers = 1) {
  EnhanceOutput out;
  out.result = rank_note(note, note_path, corpus, model, k, workers);
  AudioBuffer canon = canonicalize(note);
  if (out.result.best_index < 0) {
    out.enhanced.audio = std::move(canon);
    out.enhanced.gain_applied = peak_normalize(out.enhanced.audio);
    out.enhanced.ir_ref = {kIdentityId, kIdentityId};
  } else {
    const auto& entry = corpus.manifest.entries[static_cast<std::size_t>(out.result.best_index)];
    out.enhanced = apply_room(canon, load_corpus_ir(corpus.root, entry));
  }
  return out;
}

struct NoteInput {
  std::string path;
  AudioBuffer audio;
};

struct ScoreStats {
  std::array<int, 20> histogram_before{};  // original scores over [0,1]
  std::array<int, 20> histogram_after{};   // best scores over [0,1]
  std::array<int, 20> histogram_delta{};   // deltas over [-1,1]
  int n_notes = 0;
  double fraction_improved = 0.0;  // share of notes with delta > 0
  double median_delta = 0.0;
  std::vector<RankedResult> results;  // filtered notes, input order
};

namespace detail {

inline int histogram_bin(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo) * 20.0;
  return std::clamp(static_cast<int>(std::floor(t)), 0, 19);
}

}  // namespace detail

// Enhances every note scoring below the threshold and aggregates the
// before/after/delta distributions.
inline ScoreStats batch_stats(const std::vector<NoteInput>& notes, const LoadedCorpus& corpus,
                              const ScorerModel& model, double threshold = 0.5, int k = 10,
                              int workers = 1) {
  if (notes.empty()) throw InvalidArgument("no notes provided");

  ScoreStats stats;
  std::vector<double> deltas;
  int improved = 0;
  for (const auto& note : notes) {
    if (score_note(note.audio, model) >= threshold) continue;
    RankedResult r = rank_note(note.audio, note.path, corpus, model, k, workers);
    stats.histogram_before[static_cast<std::size_t>(detail::histogram_bin(r.original_score, 0.0, 1.0))] += 1;
    stats.histogram_after[static_cast<std::size_t>(detail::histogram_bin(r.best_score, 0.0, 1.0))] += 1;
    stats.histogram_delta[static_cast<std::size_t>(detail::histogram_bin(r.score_delta, -1.0, 1.0))] += 1;
    if (r.score_delta > 0.0) ++improved;
    deltas.push_back(r.score_delta);
    stats.results.push_back(std::move(r));
  }
  if (stats.results.empty()) throw Error("nothing to enhance");

  stats.n_notes = static_cast<int>(stats.results.size());
  stats.fraction_improved = static_cast<double>(improved) / static_cast<double>(stats.n_notes);
  std::sort(deltas.begin(), deltas.end());
  const std::size_t mid = deltas.size() / 2;
  stats.median_delta =
      deltas.size() % 2 == 1 ? deltas[mid] : 0.5 * (deltas[mid - 1] + deltas[mid]);
  return stats;
}

namespace detail {

inline nlohmann::json ranked_result_json(const RankedResult& r) {
  nlohmann::json best;
  best["index"] = r.best_index;
  best["room_id"] = r.best_ir.room_id;
  best["point_id"] = r.best_ir.point_id;
  best["room_class"] = r.best_room_class;
  best["ir_path"] = r.best_ir_path;
  if (r.best_rt60) {
    best["rt60_est"] = *r.best_rt60;
  } else {
    best["rt60_est"] = nullptr;
  }

  nlohmann::json j;
  j["note_path"] = r.note_path;
  j["original_score"] = r.original_score;
  j["best_score"] = r.best_score;
  j["score_delta"] = r.score_delta;
  j["best"] = best;
  auto top = nlohmann::json::array();
  for (const auto& e : r.top_k) {
    top.push_back({{"index", e.index},
                   {"room_id", e.ref.room_id},
                   {"point_id", e.ref.point_id},
                   {"score", e.score}});
  }
  j["top_k"] = top;
  return j;
}

inline void dump_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write report: " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline void write_note_report(const std::filesystem::path& path, const RankedResult& result) {
  detail::dump_json(path, detail::ranked_result_json(result));
}

inline void write_batch_report(const std::filesystem::path& path,
                               const std::vector<RankedResult>& results) {
  auto arr = nlohmann::json::array();
  for (const auto& r : results) arr.push_back(detail::ranked_result_json(r));
  detail::dump_json(path, arr);
}

inline void write_histogram_csv(const std::filesystem::path& path,
                                const std::array<int, 20>& bins, double lo, double hi) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot write histogram CSV: " + path.string());
  f << "bin_low,bin_high,count\n";
  const double width = (hi - lo) / 20.0;
  char buf[96];
  for (int i = 0; i < 20; ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%d\n", lo + i * width, lo + (i + 1) * width,
                  bins[static_cast<std::size_t>(i)]);
    f << buf;
  }
  if (!f) throw IoError("write failed: " + path.string());
}

inline void write_stats_summary(const std::filesystem::path& path, const ScoreStats& stats) {
  nlohmann::json j;
  j["n_notes"] = stats.n_notes;
  j["fraction_improved"] = stats.fraction_improved;
  j["median_delta"] = stats.median_delta;
  detail::dump_json(path, j);
}

}  // namespace roomrank

#endif  // ROOMRANK_RANKER_HPP_

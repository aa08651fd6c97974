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
#ifndef ROOMRANK_FEATURES_HPP_
#define ROOMRANK_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "roomrank/audio.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/fft.hpp"

namespace roomrank {

inline constexpr int kMelBins = 96;
inline constexpr int kFrameLength = 400;  // 25 ms at 16 kHz
inline constexpr int kHopLength = 160;    // 10 ms
inline constexpr int kStftSize = 512;
inline constexpr int kMelFrames = kPipelineSamples / kHopLength;  // 500
inline constexpr double kPowerFloor = 1e-10;
inline const double kLogFloor = std::log(kPowerFloor);

struct MelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<double> values;  // row-major: [mel][frame]

  double& at(int mel, int frame) { return values[static_cast<std::size_t>(mel) * n_frames + frame]; }
  double at(int mel, int frame) const {
    return values[static_cast<std::size_t>(mel) * n_frames + frame];
  }
};

struct FeatureTrace {
  std::vector<double> energy_envelope;   // per-frame RMS
  std::vector<double> spectral_centroid;  // per-frame Hz
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// HTK-style triangular filters over 0-8000 Hz, no area normalization.
// Filter j spans mel points j, j+1, j+2 of a 98-point equal-mel grid.
struct MelFilterBank {
  int n_bins;  // spectrum bins (kStftSize/2 + 1)
  std::vector<double> center_hz;            // per filter
  std::vector<int> start_bin;               // first nonzero bin per filter
  std::vector<std::vector<double>> weights;  // per filter, contiguous from start_bin

  MelFilterBank(int n_mels, int stft_size, double sample_rate) : n_bins(stft_size / 2 + 1) {
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> corners(static_cast<std::size_t>(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i) {
      corners[static_cast<std::size_t>(i)] = mel_to_hz(mel_max * i / (n_mels + 1));
    }
    const double bin_hz = sample_rate / stft_size;
    center_hz.resize(static_cast<std::size_t>(n_mels));
    start_bin.resize(static_cast<std::size_t>(n_mels));
    weights.resize(static_cast<std::size_t>(n_mels));
    for (int j = 0; j < n_mels; ++j) {
      const double lo = corners[static_cast<std::size_t>(j)];
      const double mid = corners[static_cast<std::size_t>(j) + 1];
      const double hi = corners[static_cast<std::size_t>(j) + 2];
      center_hz[static_cast<std::size_t>(j)] = mid;
      int first = -1;
      std::vector<double> w;
      for (int k = 0; k < n_bins; ++k) {
        const double f = k * bin_hz;
        double value = 0.0;
        if (f >= lo && f <= mid && mid > lo) {
          value = (f - lo) / (mid - lo);
        } else if (f > mid && f <= hi && hi > mid) {
          value = (hi - f) / (hi - mid);
        }
        if (value > 0.0) {
          if (first < 0) first = k;
          w.push_back(value);
        } else if (first >= 0) {
          break;
        }
      }
      if (first < 0) first = 0;
      start_bin[static_cast<std::size_t>(j)] = first;
      weights[static_cast<std::size_t>(j)] = std::move(w);
    }
  }
};

inline const MelFilterBank& pipeline_mel_bank() {
  static const MelFilterBank bank(kMelBins, kStftSize, static_cast<double>(kPipelineRate));
  return bank;
}

namespace detail {

inline void check_canonical(const AudioBuffer& x) {
  if (x.sample_rate != kPipelineRate || x.samples.size() != kPipelineSamples) {
    throw InvalidArgument("non-canonical input length: expected " +
                          std::to_string(kPipelineSamples) + " samples at " +
                          std::to_string(kPipelineRate) + " Hz");
  }
}

// Center framing with reflection padding of kFrameLength/2 on both sides;
// yields exactly kMelFrames frames for canonical input.
struct FrameCursor {
  const std::vector<double>& x;
  int pad = kFrameLength / 2;

  explicit FrameCursor(const std::vector<double>& samples) : x(samples) {}

  double sample(long long i) const {
    const long long n = static_cast<long long>(x.size());
    long long j = i - pad;
    if (j < 0) j = -j;                       // reflect, edge not repeated
    if (j >= n) j = 2 * (n - 1) - j;
    return x[static_cast<std::size_t>(j)];
  }

  void fill(int frame, double* out) const {
    const long long base = static_cast<long long>(frame) * kHopLength;
    for (int i = 0; i < kFrameLength; ++i) out[i] = sample(base + i);
  }
};

// Periodic Hann window shared by the mel and centroid paths.
inline const std::vector<double>& stft_window() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFrameLength);
    for (int i = 0; i < kFrameLength; ++i) {
      w[static_cast<std::size_t>(i)] =
          0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / kFrameLength));
    }
    return w;
  }();
  return window;
}

}  // namespace detail

// Log-power mel spectrogram, shape kMelBins x kMelFrames for canonical input.
inline MelSpectrogram mel_spectrogram(const AudioBuffer& x) {
  detail::check_canonical(x);
  const auto& bank = pipeline_mel_bank();
  const auto& window = detail::stft_window();
  detail::FrameCursor cursor(x.samples);

  MelSpectrogram spec;
  spec.n_mels = kMelBins;
  spec.n_frames = kMelFrames;
  spec.values.assign(static_cast<std::size_t>(kMelBins) * kMelFrames, 0.0);

  RfftPlan plan(kStftSize);
  std::vector<double> frame(kStftSize, 0.0);
  std::vector<double> power(static_cast<std::size_t>(kStftSize) / 2 + 1);

  for (int t = 0; t < kMelFrames; ++t) {
    cursor.fill(t, frame.data());
    for (int i = 0; i < kFrameLength; ++i) frame[static_cast<std::size_t>(i)] *= window[static_cast<std::size_t>(i)];
    std::fill(frame.begin() + kFrameLength, frame.end(), 0.0);
    const auto& bins = plan.run(frame.data());
    for (std::size_t k = 0; k < power.size(); ++k) {
      power[k] = bins[k].real() * bins[k].real() + bins[k].imag() * bins[k].imag();
    }
    for (int j = 0; j < kMelBins; ++j) {
      const auto& w = bank.weights[static_cast<std::size_t>(j)];
      const int start = bank.start_bin[static_cast<std::size_t>(j)];
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * power[static_cast<std::size_t>(start) + i];
      spec.at(j, t) = std::log(std::max(acc, kPowerFloor));
    }
  }
  return spec;
}

// Scoring front end: canonicalize, peak-normalize to 0.99, mel.
inline MelSpectrogram pipeline_mel(const AudioBuffer& x) {
  AudioBuffer canon = canonicalize(x);
  peak_normalize(canon);
  return mel_spectrogram(canon);
}

// Per-frame RMS over the same 400/160 framing as the STFT.
inline std::vector<double> energy_envelope(const AudioBuffer& x) {
  detail::check_canonical(x);
  detail::FrameCursor cursor(x.samples);
  std::vector<double> frame(kFrameLength);
  std::vector<double> env(kMelFrames);
  for (int t = 0; t < kMelFrames; ++t) {
    cursor.fill(t, frame.data());
    double acc = 0.0;
    for (double v : frame) acc += v * v;
    env[static_cast<std::size_t>(t)] = std::sqrt(acc / kFrameLength);
  }
  return env;
}

// Magnitude-weighted mean frequency per frame on the linear STFT; frames
// with negligible total magnitude report 0.
inline std::vector<double> spectral_centroid(const AudioBuffer& x) {
  detail::check_canonical(x);
  const auto& window = detail::stft_window();
  detail::FrameCursor cursor(x.samples);
  const double bin_hz = static_cast<double>(kPipelineRate) / kStftSize;

  RfftPlan plan(kStftSize);
  std::vector<double> frame(kStftSize, 0.0);
  std::vector<double> centroid(kMelFrames);
  for (int t = 0; t < kMelFrames; ++t) {
    cursor.fill(t, frame.data());
    for (int i = 0; i < kFrameLength; ++i) frame[static_cast<std::size_t>(i)] *= window[static_cast<std::size_t>(i)];
    std::fill(frame.begin() + kFrameLength, frame.end(), 0.0);
    const auto& bins = plan.run(frame.data());
    double total = 0.0, weighted = 0.0;
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double mag = std::hypot(bins[k].real(), bins[k].imag());
      total += mag;
      weighted += mag * (static_cast<double>(k) * bin_hz);
    }
    centroid[static_cast<std::size_t>(t)] = total < 1e-8 ? 0.0 : weighted / total;
  }
  return centroid;
}

inline FeatureTrace feature_trace(const AudioBuffer& x) {
  FeatureTrace trace;
  trace.energy_envelope = energy_envelope(x);
  trace.spectral_centroid = spectral_centroid(x);
  return trace;
}

inline void write_feature_csv(const std::filesystem::path& path, const FeatureTrace& trace) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write feature CSV: " + path.string());
  f << "frame_index,rms,centroid_hz\n";
  for (std::size_t t = 0; t < trace.energy_envelope.size(); ++t) {
    f << t << ',' << trace.energy_envelope[t] << ',' << trace.spectral_centroid[t] << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace roomrank

#endif  // ROOMRANK_FEATURES_HPP_

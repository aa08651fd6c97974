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
#ifndef ROOMRANK_AUDIO_HPP_
#define ROOMRANK_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "roomrank/errors.hpp"

namespace roomrank {

// Mono sample sequence plus its rate. Samples are dimensionless amplitudes,
// nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;
};

// The fixed format every signal is reduced to before feature extraction.
inline constexpr int kPipelineRate = 16000;
inline constexpr double kPipelineSeconds = 5.0;
inline constexpr int kPipelineSamples = 80000;

inline void validate(const AudioBuffer& b) {
  if (b.samples.empty()) throw InvalidArgument("audio buffer is empty");
  if (b.sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  for (double s : b.samples) {
    if (!std::isfinite(s)) throw InvalidArgument("audio buffer contains non-finite sample");
  }
}

inline double peak_abs(const AudioBuffer& b) {
  double peak = 0.0;
  for (double s : b.samples) peak = std::max(peak, std::fabs(s));
  return peak;
}

// Scales the buffer so its peak magnitude equals `target`. Returns the gain
// applied; a silent buffer is left untouched with gain 1.
inline double peak_normalize(AudioBuffer& b, double target = 0.99) {
  const double peak = peak_abs(b);
  if (peak <= 0.0) return 1.0;
  const double gain = target / peak;
  for (double& s : b.samples) s *= gain;
  return gain;
}

namespace detail {

// Modified Bessel function I0, power series.
inline double bessel_i0(double x) {
  const double half = 0.5 * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return sum;
}

inline double sinc_pi(double x) {
  if (x == 0.0) return 1.0;
  const double px = 3.14159265358979323846 * x;
  return std::sin(px) / px;
}

}  // namespace detail

inline constexpr int kResampleTaps = 64;
inline constexpr double kResampleKaiserBeta = 8.6;

// Band-limited arbitrary-ratio resampling with a 64-tap Kaiser-windowed sinc
// kernel. The cutoff sits at the lower of the two Nyquist frequencies.
inline AudioBuffer resample_sinc(const AudioBuffer& in, int target_rate) {
  validate(in);
  if (target_rate <= 0) throw InvalidArgument("target rate must be positive");
  if (in.sample_rate == target_rate) return in;

  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // times the input Nyquist
  const double half_width = kResampleTaps / 2.0;
  const double i0_beta = detail::bessel_i0(kResampleKaiserBeta);
  const std::int64_t n_in = static_cast<std::int64_t>(in.samples.size());
  const std::int64_t n_out = std::llround(n_in * ratio);

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(std::max<std::int64_t>(n_out, 1)), 0.0);

  for (std::int64_t n = 0; n < n_out; ++n) {
    const double t = n / ratio;  // position on the input lattice
    const std::int64_t k0 = static_cast<std::int64_t>(std::ceil(t - half_width));
    const std::int64_t k1 = static_cast<std::int64_t>(std::floor(t + half_width));
    double acc = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(k0, 0); k <= std::min(k1, n_in - 1); ++k) {
      const double u = k - t;
      const double frac = u / half_width;
      const double win =
          detail::bessel_i0(kResampleKaiserBeta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) /
          i0_beta;
      acc += in.samples[static_cast<std::size_t>(k)] * cutoff *
             detail::sinc_pi(cutoff * u) * win;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

// Reduces any buffer to the pipeline format: mono is assumed, the rate is
// converted to `target_rate` and the length forced to `target_seconds`.
// Long signals keep their front (note onsets come first); short ones are
// zero-padded at the tail. Calling this on an already-canonical buffer is a
// bit-exact identity.
inline AudioBuffer canonicalize(const AudioBuffer& in, int target_rate = kPipelineRate,
                                double target_seconds = kPipelineSeconds) {
  validate(in);
  AudioBuffer out = (in.sample_rate == target_rate) ? in : resample_sinc(in, target_rate);
  const std::size_t target_len =
      static_cast<std::size_t>(std::llround(target_seconds * target_rate));
  out.samples.resize(target_len, 0.0);
  return out;
}

}  // namespace roomrank

#endif  // ROOMRANK_AUDIO_HPP_

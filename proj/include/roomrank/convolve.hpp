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
#ifndef ROOMRANK_CONVOLVE_HPP_
#define ROOMRANK_CONVOLVE_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "roomrank/audio.hpp"
#include "roomrank/errors.hpp"
#include "roomrank/fft.hpp"
#include "roomrank/rir.hpp"

namespace roomrank {

// Convolutions at or below this output size use one zero-padded FFT;
// a longer output with a short kernel switches to overlap-add blocks.
inline constexpr std::size_t kOlaFftSize = std::size_t{1} << 16;
inline constexpr std::size_t kOlaKernelMax = 16384;

struct IrRef {
  std::string room_id;
  std::string point_id;
};

struct ConvolutionResult {
  AudioBuffer audio;
  IrRef ir_ref;
  double gain_applied = 1.0;
};

namespace detail {

inline void cmul_inplace(std::vector<std::complex<double>>& a,
                         const std::vector<std::complex<double>>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    a[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

inline std::vector<double> conv_direct_raw(const std::vector<double>& x,
                                           const std::vector<double>& h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
  }
  return y;
}

inline std::vector<double> conv_single_fft(const std::vector<double>& x,
                                           const std::vector<double>& h, std::size_t out_len) {
  const std::size_t n = next_pow2(out_len);
  std::vector<double> xp(n, 0.0), hp(n, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(h.begin(), h.end(), hp.begin());
  auto spec = rfft(xp);
  const auto hspec = rfft(hp);
  cmul_inplace(spec, hspec);
  auto y = irfft(spec, n);
  y.resize(out_len);
  return y;
}

inline std::vector<double> conv_overlap_add(const std::vector<double>& sig,
                                            const std::vector<double>& kernel,
                                            std::size_t out_len) {
  const std::size_t block = kOlaFftSize;
  const std::size_t chunk = block - kernel.size() + 1;
  std::vector<double> kp(block, 0.0);
  std::copy(kernel.begin(), kernel.end(), kp.begin());
  const auto kspec = rfft(kp);

  std::vector<double> y(out_len, 0.0);
  std::vector<double> seg(block);
  for (std::size_t start = 0; start < sig.size(); start += chunk) {
    const std::size_t len = std::min(chunk, sig.size() - start);
    std::fill(seg.begin(), seg.end(), 0.0);
    std::copy(sig.begin() + static_cast<std::ptrdiff_t>(start),
              sig.begin() + static_cast<std::ptrdiff_t>(start + len), seg.begin());
    auto spec = rfft(seg);
    cmul_inplace(spec, kspec);
    const auto part = irfft(spec, block);
    const std::size_t n_add = std::min(len + kernel.size() - 1, out_len - start);
    for (std::size_t i = 0; i < n_add; ++i) y[start + i] += part[i];
  }
  return y;
}

inline std::vector<double> conv_fft_raw(const std::vector<double>& x,
                                        const std::vector<double>& h) {
  const std::size_t out_len = x.size() + h.size() - 1;
  if (next_pow2(out_len) <= kOlaFftSize) return conv_single_fft(x, h, out_len);
  if (h.size() <= kOlaKernelMax) return conv_overlap_add(x, h, out_len);
  if (x.size() <= kOlaKernelMax) return conv_overlap_add(h, x, out_len);
  return conv_single_fft(x, h, out_len);
}

inline void check_conv_inputs(const AudioBuffer& x, const AudioBuffer& h) {
  if (x.samples.empty() || h.samples.empty()) {
    throw InvalidArgument("convolution inputs must be non-empty");
  }
  if (x.sample_rate != h.sample_rate) {
    throw InvalidArgument("convolution sample-rate mismatch: " + std::to_string(x.sample_rate) +
                          " vs " + std::to_string(h.sample_rate));
  }
}

}  // namespace detail

inline AudioBuffer convolve_direct(const AudioBuffer& x, const AudioBuffer& h) {
  detail::check_conv_inputs(x, h);
  return {detail::conv_direct_raw(x.samples, h.samples), x.sample_rate};
}

inline AudioBuffer convolve_fft(const AudioBuffer& x, const AudioBuffer& h) {
  detail::check_conv_inputs(x, h);
  return {detail::conv_fft_raw(x.samples, h.samples), x.sample_rate};
}

// Convolves a canonical note with a room impulse response and fixes the
// output back to the pipeline format: 80000 samples, peak 0.99. The IR tail
// beyond 5 s cannot influence the retained samples and is dropped up front.
// Normalization runs after the trim so the retained peak is exact.
inline ConvolutionResult apply_room(const AudioBuffer& x, const ImpulseResponse& ir) {
  if (x.samples.size() != kPipelineSamples || x.sample_rate != kPipelineRate) {
    throw InvalidArgument("apply_room expects a canonical 5 s / 16 kHz note");
  }
  if (ir.h.sample_rate != kPipelineRate) {
    throw InvalidArgument("apply_room expects a " + std::to_string(kPipelineRate) + " Hz IR");
  }
  if (ir.h.samples.empty()) throw InvalidArgument("apply_room: empty impulse response");

  std::vector<double> h = ir.h.samples;
  if (h.size() > kPipelineSamples) h.resize(kPipelineSamples);

  ConvolutionResult result;
  result.audio.sample_rate = kPipelineRate;
  result.audio.samples = detail::conv_fft_raw(x.samples, h);
  result.audio.samples.resize(kPipelineSamples, 0.0);
  result.gain_applied = peak_normalize(result.audio);
  result.ir_ref = {ir.room_id, ir.point_id};
  return result;
}

}  // namespace roomrank

#endif  // ROOMRANK_CONVOLVE_HPP_

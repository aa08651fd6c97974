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
#ifndef ROOMRANK_RIR_HPP_
#define ROOMRANK_RIR_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "roomrank/audio.hpp"
#include "roomrank/errors.hpp"

namespace roomrank {

inline constexpr double kSpeedOfSound = 343.0;  // m/s
inline constexpr int kDefaultMaxOrder = 40;
inline constexpr int kSincHalfWidth = 40;  // 81-tap fractional-delay kernel
inline constexpr double kImageAmplitudeCutoff = 1e-6;  // relative to direct path
inline constexpr double kDcBlockHz = 100.0;  // high-pass cutoff on the image sum

// Rectangular room. Axis extents are length (x), width (y), height (z);
// absorption holds energy coefficients for the walls at x=0, x=length,
// y=0, y=width, z=0, z=height in that order.
struct RoomSpec {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::array<double, 6> absorption{};
  std::array<double, 3> source_pos{};
  std::array<double, 3> mic_pos{};
  int sample_rate = kPipelineRate;
  int max_order = kDefaultMaxOrder;

  double dim(int axis) const { return axis == 0 ? length : (axis == 1 ? width : height); }
};

struct ImpulseResponse {
  AudioBuffer h;
  std::string room_id;
  std::string point_id;
  RoomSpec spec;
  std::optional<double> rt60_est;
};

inline void validate_room_spec(const RoomSpec& spec) {
  if (!(spec.length > 0.0) || !(spec.width > 0.0) || !(spec.height > 0.0)) {
    throw InvalidArgument("degenerate room: all dimensions must be positive");
  }
  if (spec.sample_rate <= 0) throw InvalidArgument("room sample rate must be positive");
  if (spec.max_order < 0) throw InvalidArgument("max_order must be non-negative");
  for (double a : spec.absorption) {
    if (!(a > 0.0) || a > 1.0) throw InvalidArgument("absorption coefficients must be in (0, 1]");
  }
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = 0.0, hi = spec.dim(axis);
    if (!(spec.source_pos[axis] > lo) || !(spec.source_pos[axis] < hi) ||
        !(spec.mic_pos[axis] > lo) || !(spec.mic_pos[axis] < hi)) {
      throw InvalidArgument("source/mic positions must lie strictly inside the room");
    }
  }
  if (spec.source_pos == spec.mic_pos) {
    throw InvalidArgument("source and mic positions must differ");
  }
}

namespace detail {

// Hann window factors cos(pi*j/H), sin(pi*j/H) for integer tap offsets
// j in [-H-1, H+1], used to rotate the window to a fractional center.
struct SincWindowTables {
  std::array<double, 2 * kSincHalfWidth + 3> cos_j;
  std::array<double, 2 * kSincHalfWidth + 3> sin_j;
  SincWindowTables() {
    for (int j = -kSincHalfWidth - 1; j <= kSincHalfWidth + 1; ++j) {
      const double angle = std::numbers::pi * j / kSincHalfWidth;
      cos_j[static_cast<std::size_t>(j + kSincHalfWidth + 1)] = std::cos(angle);
      sin_j[static_cast<std::size_t>(j + kSincHalfWidth + 1)] = std::sin(angle);
    }
  }
};

// Adds amplitude * hann_sinc(i - delay) into h around the fractional delay.
// One sin() serves all 81 taps: sin(pi*(j - f)) alternates sign with j.
inline void add_fractional_impulse(std::vector<double>& h, double delay, double amplitude) {
  static const SincWindowTables tables;
  const double floor_t = std::floor(delay);
  const int n0 = static_cast<int>(floor_t);
  const double f = delay - floor_t;
  const double sin_pi_f = std::sin(std::numbers::pi * f);
  const double cos_f = std::cos(std::numbers::pi * f / kSincHalfWidth);
  const double sin_f = std::sin(std::numbers::pi * f / kSincHalfWidth);

  const std::size_t need = static_cast<std::size_t>(std::max(0, n0 + kSincHalfWidth + 1)) + 1;
  if (h.size() < need) h.resize(need, 0.0);

  for (int j = -kSincHalfWidth; j <= kSincHalfWidth + 1; ++j) {
    const int k = n0 + j;
    if (k < 0) continue;
    const double u = j - f;
    if (u < -kSincHalfWidth || u > kSincHalfWidth) continue;
    double sinc;
    if (std::abs(u) < 1e-12) {
      sinc = 1.0;
    } else {
      const double num = (j & 1) ? sin_pi_f : -sin_pi_f;
      sinc = num / (std::numbers::pi * u);
    }
    const std::size_t ti = static_cast<std::size_t>(j + kSincHalfWidth + 1);
    const double window = 0.5 * (1.0 + tables.cos_j[ti] * cos_f + tables.sin_j[ti] * sin_f);
    h[static_cast<std::size_t>(k)] += amplitude * sinc * window;
  }
}

// Second-order Butterworth high-pass, causal with zero initial state.
// Mirror images reflect with all-positive amplitude, so the raw sum carries
// a slowly varying offset that masks the late decay; the mirror model is not
// physical near DC, and the offset is removed here.
inline void dc_block(std::vector<double>& x, double sample_rate) {
  if (sample_rate <= 4.0 * kDcBlockHz) return;
  const double k = std::tan(std::numbers::pi * kDcBlockHz / sample_rate);
  const double q = std::numbers::sqrt2 / 2.0;
  const double norm = 1.0 / (1.0 + k / q + k * k);
  const double b0 = norm, b1 = -2.0 * norm, b2 = norm;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - k / q + k * k) * norm;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double x0 = v;
    const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    v = y0;
  }
}

}  // namespace detail

// Image-source room impulse response. Every image up to max_order total
// reflections contributes an attenuated impulse at its geometric delay;
// images weaker than kImageAmplitudeCutoff of the direct path are skipped.
// The finished sum is high-passed at kDcBlockHz (see detail::dc_block).
inline ImpulseResponse simulate_rir(const RoomSpec& spec) {
  validate_room_spec(spec);

  const double fs = spec.sample_rate;
  const int order = spec.max_order;

  double direct_sq = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = spec.source_pos[axis] - spec.mic_pos[axis];
    direct_sq += d * d;
  }
  const double direct_dist = std::sqrt(direct_sq);
  const double direct_amp = 1.0 / (4.0 * std::numbers::pi * direct_dist);
  const double amp_cutoff = kImageAmplitudeCutoff * direct_amp;

  // Per-surface reflection factors sqrt(1 - alpha) raised to every possible
  // bounce count.
  std::array<std::vector<double>, 6> refl_pow;
  for (int s = 0; s < 6; ++s) {
    const double beta = std::sqrt(1.0 - spec.absorption[static_cast<std::size_t>(s)]);
    refl_pow[static_cast<std::size_t>(s)].resize(static_cast<std::size_t>(order) + 1);
    double p = 1.0;
    for (int e = 0; e <= order; ++e) {
      refl_pow[static_cast<std::size_t>(s)][static_cast<std::size_t>(e)] = p;
      p *= beta;
    }
  }

  // The lattice index n = 2m - q per axis encodes both the mirror parity q
  // and the room shift m; |n| is the axis bounce count, and the image
  // coordinate is s + n*L for even n, -s + (n+1)*L for odd n.
  const auto axis_image = [&spec](int axis, int n, double& offset, int& e_lo, int& e_hi) {
    const double L = spec.dim(axis);
    const double s = spec.source_pos[static_cast<std::size_t>(axis)];
    if ((n & 1) == 0) {
      const int m = n / 2;
      offset = s + n * L - spec.mic_pos[static_cast<std::size_t>(axis)];
      e_lo = std::abs(m);
      e_hi = std::abs(m);
    } else {
      const int m = (n + 1) / 2;
      offset = -s + (n + 1) * L - spec.mic_pos[static_cast<std::size_t>(axis)];
      e_lo = std::abs(m - 1);
      e_hi = std::abs(m);
    }
  };

  std::vector<double> h;
  h.reserve(static_cast<std::size_t>(direct_dist / kSpeedOfSound * fs) + 2 * kSincHalfWidth + 2);

  for (int nx = -order; nx <= order; ++nx) {
    double dx;
    int ex_lo, ex_hi;
    axis_image(0, nx, dx, ex_lo, ex_hi);
    const double rx = refl_pow[0][static_cast<std::size_t>(ex_lo)] *
                      refl_pow[1][static_cast<std::size_t>(ex_hi)];
    const int budget_x = order - std::abs(nx);
    for (int ny = -budget_x; ny <= budget_x; ++ny) {
      double dy;
      int ey_lo, ey_hi;
      axis_image(1, ny, dy, ey_lo, ey_hi);
      const double rxy = rx * refl_pow[2][static_cast<std::size_t>(ey_lo)] *
                         refl_pow[3][static_cast<std::size_t>(ey_hi)];
      const double dxy_sq = dx * dx + dy * dy;
      const int budget_y = budget_x - std::abs(ny);
      for (int nz = -budget_y; nz <= budget_y; ++nz) {
        double dz;
        int ez_lo, ez_hi;
        axis_image(2, nz, dz, ez_lo, ez_hi);
        const double refl = rxy * refl_pow[4][static_cast<std::size_t>(ez_lo)] *
                            refl_pow[5][static_cast<std::size_t>(ez_hi)];
        const double dist = std::sqrt(dxy_sq + dz * dz);
        const double amp = refl / (4.0 * std::numbers::pi * std::max(dist, 1e-9));
        if (amp < amp_cutoff) continue;
        detail::add_fractional_impulse(h, dist / kSpeedOfSound * fs, amp);
      }
    }
  }

  // The windowed sinc pre-rings ahead of the direct arrival; anything earlier
  // than one sample before the geometric delay is acausal and dropped.
  const double direct_delay = direct_dist / kSpeedOfSound * fs;
  const long long first_keep = std::llround(direct_delay) - 1;
  for (long long i = 0; i < first_keep && i < static_cast<long long>(h.size()); ++i) {
    h[static_cast<std::size_t>(i)] = 0.0;
  }

  detail::dc_block(h, fs);

  ImpulseResponse ir;
  ir.h.samples = std::move(h);
  ir.h.sample_rate = spec.sample_rate;
  ir.spec = spec;
  return ir;
}

inline std::size_t first_arrival_index(const AudioBuffer& h) {
  for (std::size_t i = 0; i < h.samples.size(); ++i) {
    if (h.samples[i] != 0.0) return i;
  }
  return h.samples.size();
}

// Schroeder backward integration: fits the energy decay curve between -5 dB
// and -25 dB and extrapolates the fitted slope to a 60 dB decay time.
inline double estimate_rt60(const AudioBuffer& h) {
  if (h.samples.empty() || h.sample_rate <= 0) {
    throw InvalidArgument("estimate_rt60: invalid impulse response buffer");
  }
  const std::size_t n = h.samples.size();
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += h.samples[i] * h.samples[i];
    edc[i] = acc;
  }
  if (!(acc > 0.0)) throw InvalidArgument("estimate_rt60: impulse response has zero energy");

  const double total = edc[0];
  std::size_t i5 = n, i25 = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(edc[i] > 0.0)) break;  // exact zero tail: no decay information past here
    const double db = 10.0 * std::log10(edc[i] / total);
    if (i5 == n && db <= -5.0) i5 = i;
    if (db <= -25.0) {
      i25 = i;
      break;
    }
  }
  if (i5 == n || i25 == n || i25 <= i5) throw InsufficientDecayError("insufficient decay");

  // Least-squares line through (i, EDC_dB(i)) over the fit window.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(i25 - i5 + 1);
  for (std::size_t i = i5; i <= i25; ++i) {
    const double x = static_cast<double>(i - i5);
    const double y = 10.0 * std::log10(edc[i] / total);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  if (!(denom > 0.0)) throw InsufficientDecayError("insufficient decay");
  const double slope = (count * sxy - sx * sy) / denom;  // dB per sample
  if (!(slope < 0.0)) throw InsufficientDecayError("insufficient decay");
  return -60.0 / slope / static_cast<double>(h.sample_rate);
}

inline double estimate_rt60(const ImpulseResponse& ir) { return estimate_rt60(ir.h); }

}  // namespace roomrank

#endif  // ROOMRANK_RIR_HPP_

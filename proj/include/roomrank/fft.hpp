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
#ifndef ROOMRANK_FFT_HPP_
#define ROOMRANK_FFT_HPP_

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "roomrank/errors.hpp"

namespace roomrank {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// Twiddle factors exp(-2*pi*i*k/n) for k < n/2 and the bit-reversal
// permutation, cached per transform size. thread_local keeps workers from
// sharing mutable state.
inline const std::vector<std::complex<double>>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> tw(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(angle), std::sin(angle)};
  }
  return cache.emplace(n, std::move(tw)).first->second;
}

inline const std::vector<std::uint32_t>& bit_reversal(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<std::uint32_t>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::uint32_t> rev(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    rev[i] = static_cast<std::uint32_t>((rev[i >> 1] >> 1) | ((i & 1) ? n >> 1 : 0));
  }
  return cache.emplace(n, std::move(rev)).first->second;
}

}  // namespace detail

// Iterative radix-2 FFT with bit-reversal reordering. Size must be a power
// of two. The inverse transform includes the 1/n scaling.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw InvalidArgument("FFT size must be a power of two, got " + std::to_string(n));
  if (n == 1) return;

  const auto& rev = detail::bit_reversal(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < rev[i]) std::swap(a[i], a[rev[i]]);
  }

  const auto& tw = detail::twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t stride = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const std::complex<double> w = tw[j * stride];
        const double wr = w.real();
        const double wi = inverse ? -w.imag() : w.imag();
        std::complex<double>& lo = a[base + j];
        std::complex<double>& hi = a[base + j + half];
        const double vr = hi.real() * wr - hi.imag() * wi;
        const double vi = hi.real() * wi + hi.imag() * wr;
        const double ur = lo.real();
        const double ui = lo.imag();
        lo = {ur + vr, ui + vi};
        hi = {ur - vr, ui - vi};
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= scale;
  }
}

// Real-input FFT via the packed half-size complex transform, with reusable
// scratch buffers for call sites that transform many same-sized frames.
class RfftPlan {
 public:
  explicit RfftPlan(std::size_t n) : n_(n) {
    if (!is_pow2(n)) {
      throw InvalidArgument("rfft size must be a power of two, got " + std::to_string(n));
    }
    z_.resize(n / 2);
    spec_.resize(n / 2 + 1);
  }

  std::size_t size() const { return n_; }

  // x must hold size() samples; the returned reference stays valid until the
  // next run() on this plan.
  const std::vector<std::complex<double>>& run(const double* x) {
    if (n_ == 1) {
      spec_[0] = {x[0], 0.0};
      return spec_;
    }
    const std::size_t m = n_ / 2;
    for (std::size_t k = 0; k < m; ++k) z_[k] = {x[2 * k], x[2 * k + 1]};
    fft_inplace(z_);

    const auto& tw = detail::twiddles(n_);  // exp(-2*pi*i*k/n), k < m
    spec_[0] = {z_[0].real() + z_[0].imag(), 0.0};
    spec_[m] = {z_[0].real() - z_[0].imag(), 0.0};
    for (std::size_t k = 1; k < m; ++k) {
      const std::complex<double> zk = z_[k];
      const std::complex<double> zc = std::conj(z_[m - k]);
      const double er = 0.5 * (zk.real() + zc.real());
      const double ei = 0.5 * (zk.imag() + zc.imag());
      // O = (zk - zc) / (2i)
      const double or_ = 0.5 * (zk.imag() - zc.imag());
      const double oi = -0.5 * (zk.real() - zc.real());
      const double wr = tw[k].real();
      const double wi = tw[k].imag();
      spec_[k] = {er + or_ * wr - oi * wi, ei + or_ * wi + oi * wr};
    }
    return spec_;
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> z_;
  std::vector<std::complex<double>> spec_;
};

// Real-input FFT of a power-of-two-length vector; returns n/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  RfftPlan plan(x.size());
  return plan.run(x.data());
}

// Inverse of rfft: takes n/2 + 1 bins and the output length n.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
  if (!is_pow2(n)) throw InvalidArgument("irfft size must be a power of two, got " + std::to_string(n));
  if (spec.size() != n / 2 + 1) {
    throw InvalidArgument("irfft expects " + std::to_string(n / 2 + 1) + " bins, got " +
                          std::to_string(spec.size()));
  }
  if (n == 1) return {spec[0].real()};

  const std::size_t m = n / 2;
  const auto& tw = detail::twiddles(n);
  std::vector<std::complex<double>> z(m);
  z[0] = {0.5 * (spec[0].real() + spec[m].real()), 0.5 * (spec[0].real() - spec[m].real())};
  for (std::size_t k = 1; k < m; ++k) {
    const std::complex<double> xk = spec[k];
    const std::complex<double> xc = std::conj(spec[m - k]);
    const double er = 0.5 * (xk.real() + xc.real());
    const double ei = 0.5 * (xk.imag() + xc.imag());
    const double dr = 0.5 * (xk.real() - xc.real());
    const double di = 0.5 * (xk.imag() - xc.imag());
    // O = conj(W) * D, then Z = E + i*O.
    const double wr = tw[k].real();
    const double wi = -tw[k].imag();
    const double or_ = dr * wr - di * wi;
    const double oi = dr * wi + di * wr;
    z[k] = {er - oi, ei + or_};
  }
  fft_inplace(z, /*inverse=*/true);

  std::vector<double> x(n);
  for (std::size_t k = 0; k < m; ++k) {
    x[2 * k] = z[k].real();
    x[2 * k + 1] = z[k].imag();
  }
  return x;
}

}  // namespace roomrank

#endif  // ROOMRANK_FFT_HPP_

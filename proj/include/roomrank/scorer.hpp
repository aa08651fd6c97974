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
#ifndef ROOMRANK_SCORER_HPP_
#define ROOMRANK_SCORER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "roomrank/errors.hpp"
#include "roomrank/features.hpp"
#include "roomrank/rng.hpp"

namespace roomrank {

// Channel-major 3D activation block: index (c, y, x).
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}
  double& at(int ci, int yi, int xi) {
    return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
  }
  double at(int ci, int yi, int xi) const {
    return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
  }
};

// Ceil-mode "same" padding: output extent ceil(in/stride), with the total
// padding split so the extra sample (if odd) lands on the trailing edge.
inline int conv_out_extent(int in, int stride) { return (in + stride - 1) / stride; }

inline int conv_pad_before(int in, int kernel, int stride) {
  const int out = conv_out_extent(in, stride);
  const int total = std::max((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

struct ConvLayer {
  int out_c = 0, in_c = 0, kh = 0, kw = 0, sh = 0, sw = 0;
  std::vector<double> weights;  // out_c x in_c x kh x kw
  std::vector<double> biases;   // out_c

  std::size_t weight_index(int oc, int ic, int ky, int kx) const {
    return ((static_cast<std::size_t>(oc) * in_c + ic) * kh + ky) * kw + kx;
  }
};

struct DenseLayer {
  int out_n = 0, in_n = 0;
  std::vector<double> weights;  // out_n x in_n row-major
  std::vector<double> biases;   // out_n
};

inline constexpr double kDropoutRate = 0.5;
inline constexpr double kSigmoidClamp = 36.0;

struct ScorerModel {
  int input_h = 0, input_w = 0;
  std::vector<ConvLayer> conv;
  DenseLayer dense;  // ReLU activation
  DenseLayer head;   // single sigmoid unit

  // The published architecture: five 7x7 stride-5 conv layers of 16 filters
  // over a 96x500 mel plane, dense 256, sigmoid head.
  static ScorerModel standard(std::uint64_t init_seed) {
    ScorerModel m = architecture(kMelBins, kMelFrames, 5, 16, 7, 5, 256);
    m.init_weights(init_seed);
    return m;
  }

  static ScorerModel architecture(int input_h, int input_w, int n_conv, int filters, int kernel,
                                  int stride, int dense_units) {
    ScorerModel m;
    m.input_h = input_h;
    m.input_w = input_w;
    int c = 1, h = input_h, w = input_w;
    for (int i = 0; i < n_conv; ++i) {
      ConvLayer layer;
      layer.in_c = c;
      layer.out_c = filters;
      layer.kh = layer.kw = kernel;
      layer.sh = layer.sw = stride;
      layer.weights.assign(
          static_cast<std::size_t>(filters) * c * kernel * kernel, 0.0);
      layer.biases.assign(static_cast<std::size_t>(filters), 0.0);
      m.conv.push_back(std::move(layer));
      c = filters;
      h = conv_out_extent(h, stride);
      w = conv_out_extent(w, stride);
    }
    m.dense.in_n = c * h * w;
    m.dense.out_n = dense_units;
    m.dense.weights.assign(static_cast<std::size_t>(dense_units) * m.dense.in_n, 0.0);
    m.dense.biases.assign(static_cast<std::size_t>(dense_units), 0.0);
    m.head.in_n = dense_units;
    m.head.out_n = 1;
    m.head.weights.assign(static_cast<std::size_t>(dense_units), 0.0);
    m.head.biases.assign(1, 0.0);
    return m;
  }

  // Fan-in scaled uniform init, drawn in a fixed layer order.
  void init_weights(std::uint64_t seed) {
    Rng rng(substream_seed(seed, 0x1717));
    const auto fill = [&rng](std::vector<double>& w, int fan_in) {
      const double s = std::sqrt(1.0 / fan_in);
      for (double& x : w) x = rng.uniform(-s, s);
    };
    for (auto& layer : conv) {
      fill(layer.weights, layer.in_c * layer.kh * layer.kw);
      std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    }
    fill(dense.weights, dense.in_n);
    std::fill(dense.biases.begin(), dense.biases.end(), 0.0);
    fill(head.weights, head.in_n);
    std::fill(head.biases.begin(), head.biases.end(), 0.0);
  }

  // Spatial shapes (c, h, w) entering each conv layer plus the final one.
  std::vector<std::array<int, 3>> shape_chain() const {
    std::vector<std::array<int, 3>> shapes;
    int c = 1, h = input_h, w = input_w;
    shapes.push_back({c, h, w});
    for (const auto& layer : conv) {
      c = layer.out_c;
      h = conv_out_extent(h, layer.sh);
      w = conv_out_extent(w, layer.sw);
      shapes.push_back({c, h, w});
    }
    return shapes;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : conv) n += layer.weights.size() + layer.biases.size();
    n += dense.weights.size() + dense.biases.size();
    n += head.weights.size() + head.biases.size();
    return n;
  }

  std::vector<double> flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& layer : conv) {
      flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
      flat.insert(flat.end(), layer.biases.begin(), layer.biases.end());
    }
    flat.insert(flat.end(), dense.weights.begin(), dense.weights.end());
    flat.insert(flat.end(), dense.biases.begin(), dense.biases.end());
    flat.insert(flat.end(), head.weights.begin(), head.weights.end());
    flat.insert(flat.end(), head.biases.begin(), head.biases.end());
    return flat;
  }

  void load_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) {
      throw InvalidArgument("parameter vector size mismatch");
    }
    std::size_t pos = 0;
    const auto take = [&flat, &pos](std::vector<double>& dst) {
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                flat.begin() + static_cast<std::ptrdiff_t>(pos + dst.size()), dst.begin());
      pos += dst.size();
    };
    for (auto& layer : conv) {
      take(layer.weights);
      take(layer.biases);
    }
    take(dense.weights);
    take(dense.biases);
    take(head.weights);
    take(head.biases);
  }

  // Rounds every parameter to its nearest float32 value so that scores are
  // bit-stable across a save/load round trip (the file stores float32).
  void quantize_to_float32() {
    const auto quant = [](std::vector<double>& w) {
      for (double& x : w) x = static_cast<double>(static_cast<float>(x));
    };
    for (auto& layer : conv) {
      quant(layer.weights);
      quant(layer.biases);
    }
    quant(dense.weights);
    quant(dense.biases);
    quant(head.weights);
    quant(head.biases);
  }
};

enum class ForwardMode { kInfer, kTrain };

namespace detail {

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline void conv_forward(const ConvLayer& layer, const Tensor3& in, Tensor3& out) {
  const int oh = conv_out_extent(in.h, layer.sh);
  const int ow = conv_out_extent(in.w, layer.sw);
  const int pad_y = conv_pad_before(in.h, layer.kh, layer.sh);
  const int pad_x = conv_pad_before(in.w, layer.kw, layer.sw);
  out = Tensor3(layer.out_c, oh, ow);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      const int y0 = oy * layer.sh - pad_y;
      for (int ox = 0; ox < ow; ++ox) {
        const int x0 = ox * layer.sw - pad_x;
        double acc = layer.biases[static_cast<std::size_t>(oc)];
        for (int ic = 0; ic < layer.in_c; ++ic) {
          for (int ky = 0; ky < layer.kh; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < layer.kw; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= in.w) continue;
              acc += layer.weights[layer.weight_index(oc, ic, ky, kx)] * in.at(ic, iy, ix);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
}

inline void conv_backward(const ConvLayer& layer, const Tensor3& in, const Tensor3& d_out,
                          Tensor3& d_in, std::vector<double>& d_weights,
                          std::vector<double>& d_biases) {
  const int pad_y = conv_pad_before(in.h, layer.kh, layer.sh);
  const int pad_x = conv_pad_before(in.w, layer.kw, layer.sw);
  d_in = Tensor3(in.c, in.h, in.w);
  for (int oc = 0; oc < layer.out_c; ++oc) {
    for (int oy = 0; oy < d_out.h; ++oy) {
      const int y0 = oy * layer.sh - pad_y;
      for (int ox = 0; ox < d_out.w; ++ox) {
        const int x0 = ox * layer.sw - pad_x;
        const double g = d_out.at(oc, oy, ox);
        if (g == 0.0) continue;
        d_biases[static_cast<std::size_t>(oc)] += g;
        for (int ic = 0; ic < layer.in_c; ++ic) {
          for (int ky = 0; ky < layer.kh; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < layer.kw; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= in.w) continue;
              d_weights[layer.weight_index(oc, ic, ky, kx)] += g * in.at(ic, iy, ix);
              d_in.at(ic, iy, ix) += g * layer.weights[layer.weight_index(oc, ic, ky, kx)];
            }
          }
        }
      }
    }
  }
}

}  // namespace detail

// Activations and dropout masks kept from a forward pass for backprop.
struct ForwardTrace {
  std::vector<Tensor3> conv_inputs;     // input to each conv layer
  std::vector<Tensor3> conv_pre;       // pre-activation conv outputs
  std::vector<std::vector<double>> conv_masks;  // inverted-dropout factors
  std::vector<double> dense_in;         // flattened final conv activations
  std::vector<double> dense_pre;        // dense pre-activations
  std::vector<double> dense_mask;
  std::vector<double> head_in;          // post-dropout dense activations
  double head_pre = 0.0;
  double score = 0.0;
};

// Full forward pass. Train mode draws inverted-dropout masks (rate 0.5) from
// the supplied RNG after each conv activation and after the dense layer;
// infer mode is deterministic and ignores the RNG.
inline double forward(const ScorerModel& model, const MelSpectrogram& spec, ForwardMode mode,
                      Rng* rng = nullptr, ForwardTrace* trace = nullptr) {
  if (spec.n_mels != model.input_h || spec.n_frames != model.input_w) {
    throw InvalidArgument("spectrogram shape " + std::to_string(spec.n_mels) + "x" +
                          std::to_string(spec.n_frames) + " does not match model input " +
                          std::to_string(model.input_h) + "x" + std::to_string(model.input_w));
  }
  const bool training = mode == ForwardMode::kTrain;
  if (training && rng == nullptr) throw InvalidArgument("train-mode forward needs an RNG");

  Tensor3 act(1, model.input_h, model.input_w);
  act.v = spec.values;

  for (const auto& layer : model.conv) {
    if (trace) trace->conv_inputs.push_back(act);
    Tensor3 pre;
    detail::conv_forward(layer, act, pre);
    if (trace) trace->conv_pre.push_back(pre);
    Tensor3 out = pre;
    for (double& x : out.v) x = detail::relu(x);
    std::vector<double> mask;
    if (training) {
      mask.resize(out.v.size());
      for (std::size_t i = 0; i < out.v.size(); ++i) {
        mask[i] = rng->coin(kDropoutRate) ? 0.0 : 1.0 / (1.0 - kDropoutRate);
        out.v[i] *= mask[i];
      }
    }
    if (trace) trace->conv_masks.push_back(std::move(mask));
    act = std::move(out);
  }

  std::vector<double> flat = std::move(act.v);
  if (static_cast<int>(flat.size()) != model.dense.in_n) {
    throw InvalidArgument("flattened activation size mismatch");
  }
  if (trace) trace->dense_in = flat;

  std::vector<double> dense_pre(static_cast<std::size_t>(model.dense.out_n));
  for (int o = 0; o < model.dense.out_n; ++o) {
    const double* w = &model.dense.weights[static_cast<std::size_t>(o) * model.dense.in_n];
    double acc = model.dense.biases[static_cast<std::size_t>(o)];
    for (int i = 0; i < model.dense.in_n; ++i) acc += w[i] * flat[static_cast<std::size_t>(i)];
    dense_pre[static_cast<std::size_t>(o)] = acc;
  }
  if (trace) trace->dense_pre = dense_pre;

  std::vector<double> dense_out(dense_pre.size());
  for (std::size_t i = 0; i < dense_pre.size(); ++i) dense_out[i] = detail::relu(dense_pre[i]);
  std::vector<double> dense_mask;
  if (training) {
    dense_mask.resize(dense_out.size());
    for (std::size_t i = 0; i < dense_out.size(); ++i) {
      dense_mask[i] = rng->coin(kDropoutRate) ? 0.0 : 1.0 / (1.0 - kDropoutRate);
      dense_out[i] *= dense_mask[i];
    }
  }
  if (trace) {
    trace->dense_mask = std::move(dense_mask);
    trace->head_in = dense_out;
  }

  double z = model.head.biases[0];
  for (int i = 0; i < model.head.in_n; ++i) {
    z += model.head.weights[static_cast<std::size_t>(i)] * dense_out[static_cast<std::size_t>(i)];
  }
  // Clamp keeps the sigmoid strictly inside (0, 1) in double precision.
  const double zc = std::clamp(z, -kSigmoidClamp, kSigmoidClamp);
  const double score = 1.0 / (1.0 + std::exp(-zc));
  if (trace) {
    trace->head_pre = z;
    trace->score = score;
  }
  return score;
}

inline double huber_loss(double pred, double target, double delta = 1.0,
                         double* grad_out = nullptr) {
  if (!(delta > 0.0)) throw InvalidArgument("huber delta must be positive");
  const double e = pred - target;
  const double ae = std::abs(e);
  double loss, grad;
  if (ae <= delta) {
    loss = 0.5 * e * e;
    grad = e;
  } else {
    loss = delta * (ae - 0.5 * delta);
    grad = e > 0.0 ? delta : -delta;
  }
  if (grad_out) *grad_out = grad;
  return loss;
}

// Gradient holder with the same flattening order as the model parameters.
struct ScorerGradients {
  std::vector<std::vector<double>> conv_weights;
  std::vector<std::vector<double>> conv_biases;
  std::vector<double> dense_weights, dense_biases;
  std::vector<double> head_weights, head_biases;

  explicit ScorerGradients(const ScorerModel& model) {
    for (const auto& layer : model.conv) {
      conv_weights.emplace_back(layer.weights.size(), 0.0);
      conv_biases.emplace_back(layer.biases.size(), 0.0);
    }
    dense_weights.assign(model.dense.weights.size(), 0.0);
    dense_biases.assign(model.dense.biases.size(), 0.0);
    head_weights.assign(model.head.weights.size(), 0.0);
    head_biases.assign(model.head.biases.size(), 0.0);
  }

  void accumulate(const ScorerGradients& other, double scale = 1.0) {
    const auto add = [scale](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
    };
    for (std::size_t l = 0; l < conv_weights.size(); ++l) {
      add(conv_weights[l], other.conv_weights[l]);
      add(conv_biases[l], other.conv_biases[l]);
    }
    add(dense_weights, other.dense_weights);
    add(dense_biases, other.dense_biases);
    add(head_weights, other.head_weights);
    add(head_biases, other.head_biases);
  }

  void scale(double s) {
    const auto mul = [s](std::vector<double>& a) {
      for (double& x : a) x *= s;
    };
    for (std::size_t l = 0; l < conv_weights.size(); ++l) {
      mul(conv_weights[l]);
      mul(conv_biases[l]);
    }
    mul(dense_weights);
    mul(dense_biases);
    mul(head_weights);
    mul(head_biases);
  }

  std::vector<double> flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < conv_weights.size(); ++l) {
      flat.insert(flat.end(), conv_weights[l].begin(), conv_weights[l].end());
      flat.insert(flat.end(), conv_biases[l].begin(), conv_biases[l].end());
    }
    flat.insert(flat.end(), dense_weights.begin(), dense_weights.end());
    flat.insert(flat.end(), dense_biases.begin(), dense_biases.end());
    flat.insert(flat.end(), head_weights.begin(), head_weights.end());
    flat.insert(flat.end(), head_biases.begin(), head_biases.end());
    return flat;
  }
};

struct BackwardResult {
  double loss = 0.0;
  double score = 0.0;
  ScorerGradients grads;
  explicit BackwardResult(const ScorerModel& model) : grads(model) {}
};

// Reverse-mode gradients of huber_loss(forward(spec), target). In train mode
// the dropout masks are drawn once from the RNG and held fixed through the
// backward pass.
inline BackwardResult backward(const ScorerModel& model, const MelSpectrogram& spec, double target,
                               ForwardMode mode = ForwardMode::kTrain, Rng* rng = nullptr,
                               double huber_delta = 1.0) {
  ForwardTrace trace;
  const double score = forward(model, spec, mode, rng, &trace);
  BackwardResult result(model);
  result.score = score;
  double d_pred = 0.0;
  result.loss = huber_loss(score, target, huber_delta, &d_pred);

  // Sigmoid with clamp: zero slope outside the clamp window.
  double d_z = 0.0;
  if (std::abs(trace.head_pre) <= kSigmoidClamp) {
    d_z = d_pred * score * (1.0 - score);
  }

  std::vector<double> d_head_in(static_cast<std::size_t>(model.head.in_n), 0.0);
  for (int i = 0; i < model.head.in_n; ++i) {
    result.grads.head_weights[static_cast<std::size_t>(i)] =
        d_z * trace.head_in[static_cast<std::size_t>(i)];
    d_head_in[static_cast<std::size_t>(i)] = d_z * model.head.weights[static_cast<std::size_t>(i)];
  }
  result.grads.head_biases[0] = d_z;

  const bool training = mode == ForwardMode::kTrain;
  std::vector<double> d_dense_pre(static_cast<std::size_t>(model.dense.out_n), 0.0);
  for (int o = 0; o < model.dense.out_n; ++o) {
    double g = d_head_in[static_cast<std::size_t>(o)];
    if (training) g *= trace.dense_mask[static_cast<std::size_t>(o)];
    if (trace.dense_pre[static_cast<std::size_t>(o)] <= 0.0) g = 0.0;
    d_dense_pre[static_cast<std::size_t>(o)] = g;
  }
  std::vector<double> d_flat(trace.dense_in.size(), 0.0);
  for (int o = 0; o < model.dense.out_n; ++o) {
    const double g = d_dense_pre[static_cast<std::size_t>(o)];
    result.grads.dense_biases[static_cast<std::size_t>(o)] = g;
    if (g == 0.0) continue;
    const double* w = &model.dense.weights[static_cast<std::size_t>(o) * model.dense.in_n];
    double* dw = &result.grads.dense_weights[static_cast<std::size_t>(o) * model.dense.in_n];
    for (int i = 0; i < model.dense.in_n; ++i) {
      dw[i] = g * trace.dense_in[static_cast<std::size_t>(i)];
      d_flat[static_cast<std::size_t>(i)] += g * w[i];
    }
  }

  // Walk the conv stack backwards.
  const auto& last_shape = trace.conv_pre.back();
  Tensor3 d_act(last_shape.c, last_shape.h, last_shape.w);
  d_act.v = std::move(d_flat);

  for (std::size_t li = model.conv.size(); li-- > 0;) {
    const auto& layer = model.conv[li];
    const auto& pre = trace.conv_pre[li];
    Tensor3 d_pre(pre.c, pre.h, pre.w);
    for (std::size_t i = 0; i < d_pre.v.size(); ++i) {
      double g = d_act.v[i];
      if (training) g *= trace.conv_masks[li][i];
      if (pre.v[i] <= 0.0) g = 0.0;
      d_pre.v[i] = g;
    }
    Tensor3 d_in;
    detail::conv_backward(layer, trace.conv_inputs[li], d_pre, d_in,
                          result.grads.conv_weights[li], result.grads.conv_biases[li]);
    d_act = std::move(d_in);
  }
  return result;
}

struct AdamState {
  std::vector<double> m, v;
  long long step = 0;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::vector<double>& weights, const std::vector<double>& grads,
                      AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double epsilon = 1e-8) {
  if (weights.size() != grads.size() || weights.size() != state.m.size()) {
    throw InvalidArgument("adam_step size mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    weights[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

// Spectrogram augmentations, each applied independently with probability 0.5
// in a fixed order: gain shift, cut-out, vertical flip, horizontal flip,
// additive noise. All operate in the log domain.
inline MelSpectrogram augment(const MelSpectrogram& spec, Rng& rng) {
  MelSpectrogram out = spec;
  const int h = out.n_mels, w = out.n_frames;

  if (rng.coin(0.5)) {  // gain: +-6 dB on power is a constant log shift
    const double db = rng.uniform(-6.0, 6.0);
    const double shift = db * std::numbers::ln10 / 10.0;
    for (double& x : out.values) x += shift;
  }
  if (rng.coin(0.5)) {  // cut-out rectangle up to 24 mels x 100 frames
    const int ch = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(24, h))));
    const int cw = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(100, w))));
    const int top = static_cast<int>(rng.index(static_cast<std::uint64_t>(h - ch + 1)));
    const int left = static_cast<int>(rng.index(static_cast<std::uint64_t>(w - cw + 1)));
    for (int y = top; y < top + ch; ++y) {
      for (int x = left; x < left + cw; ++x) {
        out.values[static_cast<std::size_t>(y) * w + x] = kLogFloor;
      }
    }
  }
  if (rng.coin(0.5)) {  // vertical flip (mel axis)
    for (int y = 0; y < h / 2; ++y) {
      for (int x = 0; x < w; ++x) {
        std::swap(out.values[static_cast<std::size_t>(y) * w + x],
                  out.values[static_cast<std::size_t>(h - 1 - y) * w + x]);
      }
    }
  }
  if (rng.coin(0.5)) {  // horizontal flip (time axis)
    for (int y = 0; y < h; ++y) {
      double* row = &out.values[static_cast<std::size_t>(y) * w];
      std::reverse(row, row + w);
    }
  }
  if (rng.coin(0.5)) {  // additive Gaussian noise on log values
    for (double& x : out.values) x += 0.1 * rng.gaussian();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file format: little-endian; magic "RRSC"; version u32; layer count
// u32; then per layer: kind u8 (0 input dims, 1 conv, 2 dense+ReLU,
// 3 head+sigmoid), dim count u32, dims u32[], float32 weights, float32
// biases. The input record carries [h, w] and no parameters.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::ofstream& f, std::uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                        static_cast<unsigned char>((x >> 8) & 0xff),
                        static_cast<unsigned char>((x >> 16) & 0xff),
                        static_cast<unsigned char>((x >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f32_block(std::ofstream& f, const std::vector<double>& values) {
  for (double v : values) {
    const float x = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &x, 4);
    put_u32(f, u);
  }
}

struct ModelReader {
  std::vector<unsigned char> bytes;
  std::size_t pos = 0;

  explicit ModelReader(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path.string());
    bytes.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }

  void need(std::size_t n) {
    if (pos + n > bytes.size()) throw ModelFormatError("truncated model file");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    const std::uint32_t x = static_cast<std::uint32_t>(bytes[pos]) |
                            (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return x;
  }
  std::vector<double> f32_block(std::size_t count) {
    need(4 * count);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t u = static_cast<std::uint32_t>(bytes[pos]) |
                              (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                              (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                              (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
      pos += 4;
      float x;
      std::memcpy(&x, &u, 4);
      out[i] = static_cast<double>(x);
    }
    return out;
  }
};

}  // namespace detail

inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const ScorerModel& model, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write model file: " + path.string());
  f.write("RRSC", 4);
  detail::put_u32(f, kModelVersion);
  detail::put_u32(f, static_cast<std::uint32_t>(model.conv.size() + 3));

  f.put(static_cast<char>(0));  // input dims record
  detail::put_u32(f, 2);
  detail::put_u32(f, static_cast<std::uint32_t>(model.input_h));
  detail::put_u32(f, static_cast<std::uint32_t>(model.input_w));

  for (const auto& layer : model.conv) {
    f.put(static_cast<char>(1));
    detail::put_u32(f, 6);
    for (int d : {layer.out_c, layer.in_c, layer.kh, layer.kw, layer.sh, layer.sw}) {
      detail::put_u32(f, static_cast<std::uint32_t>(d));
    }
    detail::put_f32_block(f, layer.weights);
    detail::put_f32_block(f, layer.biases);
  }

  f.put(static_cast<char>(2));
  detail::put_u32(f, 2);
  detail::put_u32(f, static_cast<std::uint32_t>(model.dense.out_n));
  detail::put_u32(f, static_cast<std::uint32_t>(model.dense.in_n));
  detail::put_f32_block(f, model.dense.weights);
  detail::put_f32_block(f, model.dense.biases);

  f.put(static_cast<char>(3));
  detail::put_u32(f, 2);
  detail::put_u32(f, static_cast<std::uint32_t>(model.head.out_n));
  detail::put_u32(f, static_cast<std::uint32_t>(model.head.in_n));
  detail::put_f32_block(f, model.head.weights);
  detail::put_f32_block(f, model.head.biases);

  if (!f) throw IoError("write failed: " + path.string());
}

inline ScorerModel load_model(const std::filesystem::path& path) {
  detail::ModelReader r(path);
  r.need(4);
  if (std::memcmp(r.bytes.data(), "RRSC", 4) != 0) {
    throw ModelFormatError("not a scorer model");
  }
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw ModelFormatError("unsupported version " + std::to_string(version));
  }
  const std::uint32_t n_layers = r.u32();

  ScorerModel model;
  bool have_input = false, have_dense = false, have_head = false;
  for (std::uint32_t li = 0; li < n_layers; ++li) {
    const std::uint8_t kind = r.u8();
    const std::uint32_t ndims = r.u32();
    std::vector<std::uint32_t> dims(ndims);
    for (auto& d : dims) d = r.u32();
    switch (kind) {
      case 0: {
        if (ndims != 2) throw ModelFormatError("bad input record");
        model.input_h = static_cast<int>(dims[0]);
        model.input_w = static_cast<int>(dims[1]);
        have_input = true;
        break;
      }
      case 1: {
        if (ndims != 6) throw ModelFormatError("bad conv record");
        ConvLayer layer;
        layer.out_c = static_cast<int>(dims[0]);
        layer.in_c = static_cast<int>(dims[1]);
        layer.kh = static_cast<int>(dims[2]);
        layer.kw = static_cast<int>(dims[3]);
        layer.sh = static_cast<int>(dims[4]);
        layer.sw = static_cast<int>(dims[5]);
        const std::size_t n_w = static_cast<std::size_t>(layer.out_c) * layer.in_c *
                                static_cast<std::size_t>(layer.kh) * layer.kw;
        layer.weights = r.f32_block(n_w);
        layer.biases = r.f32_block(static_cast<std::size_t>(layer.out_c));
        model.conv.push_back(std::move(layer));
        break;
      }
      case 2:
      case 3: {
        if (ndims != 2) throw ModelFormatError("bad dense record");
        DenseLayer layer;
        layer.out_n = static_cast<int>(dims[0]);
        layer.in_n = static_cast<int>(dims[1]);
        layer.weights = r.f32_block(static_cast<std::size_t>(layer.out_n) * layer.in_n);
        layer.biases = r.f32_block(static_cast<std::size_t>(layer.out_n));
        if (kind == 2) {
          model.dense = std::move(layer);
          have_dense = true;
        } else {
          model.head = std::move(layer);
          have_head = true;
        }
        break;
      }
      default:
        throw ModelFormatError("unknown layer kind " + std::to_string(kind));
    }
  }
  if (!have_input || !have_dense || !have_head || model.conv.empty()) {
    throw ModelFormatError("incomplete model file");
  }
  return model;
}

}  // namespace roomrank

#endif  // ROOMRANK_SCORER_HPP_

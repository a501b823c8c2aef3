// Copyright 2026 The dualhead Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dualhead/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "dualhead/errors.hpp"

namespace dualhead {

size_t MlpParams::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<float> MlpParams::flatten() const {
  std::vector<float> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weight.begin(), l.weight.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void MlpParams::assign_flat(std::span<const float> flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError("MlpParams::assign_flat: expected " + std::to_string(parameter_count()) +
                         " values, got " + std::to_string(flat.size()));
  }
  size_t k = 0;
  for (auto& l : layers) {
    std::copy_n(flat.begin() + k, l.weight.size(), l.weight.begin());
    k += l.weight.size();
    std::copy_n(flat.begin() + k, l.bias.size(), l.bias.begin());
    k += l.bias.size();
  }
}

std::vector<int> offset_mlp_widths(int feature_dim) {
  std::vector<int> widths{3 + feature_dim};
  for (int i = 0; i < kOffsetHiddenLayers; ++i) widths.push_back(kOffsetHiddenWidth);
  widths.push_back(3);
  return widths;
}

MlpParams make_zero_mlp(std::span<const int> widths, float output_scale) {
  if (widths.size() < 2) throw DimensionError("an MLP needs at least input and output widths");
  MlpParams p;
  p.output_scale = output_scale;
  for (size_t i = 0; i + 1 < widths.size(); ++i) p.layers.emplace_back(widths[i], widths[i + 1]);
  return p;
}

MlpParams make_offset_mlp(int feature_dim, std::mt19937_64& rng) {
  const auto widths = offset_mlp_widths(feature_dim);
  MlpParams p = make_zero_mlp(widths);
  for (size_t i = 0; i + 1 < p.layers.size(); ++i) {
    auto& layer = p.layers[i];
    const float bound = std::sqrt(6.0f / static_cast<float>(layer.in));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& w : layer.weight) w = dist(rng);
    // biases start at zero
  }
  return p;
}

void validate_offset_mlp(const MlpParams& params, int feature_dim) {
  const auto widths = offset_mlp_widths(feature_dim);
  if (params.layers.size() + 1 != widths.size()) {
    throw DimensionError("offset MLP must have exactly 3 hidden layers");
  }
  for (size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    if (l.in != widths[i] || l.out != widths[i + 1] ||
        l.weight.size() != static_cast<size_t>(l.in) * l.out ||
        l.bias.size() != static_cast<size_t>(l.out)) {
      throw DimensionError("offset MLP layer " + std::to_string(i) + " has wrong dimensions");
    }
  }
  if (params.output_scale != kOffsetScale) {
    throw DimensionError("offset MLP output scale must be 0.1");
  }
}

namespace {

// y[b, o] = sum_i W[o, i] x[b, i] + bias[o]
void dense_forward(const DenseLayer& layer, const float* x, int batch, float* y) {
  for (int b = 0; b < batch; ++b) {
    const float* xb = x + static_cast<size_t>(b) * layer.in;
    float* yb = y + static_cast<size_t>(b) * layer.out;
    for (int o = 0; o < layer.out; ++o) {
      const float* w = layer.weight.data() + static_cast<size_t>(o) * layer.in;
      double acc = layer.bias[o];
      for (int i = 0; i < layer.in; ++i) acc += static_cast<double>(w[i]) * xb[i];
      yb[o] = static_cast<float>(acc);
    }
  }
}

}  // namespace

Tensor mlp_forward(const MlpParams& params, const Tensor& input, MlpTrace* trace) {
  if (params.layers.empty()) throw DimensionError("mlp_forward: empty network");
  if (input.rank() != 2 || input.dim(1) != params.input_width()) {
    throw DimensionError("mlp_forward: input shape " + shape_to_string(input.shape()) +
                         " incompatible with input width " +
                         std::to_string(params.input_width()));
  }
  const int batch = static_cast<int>(input.dim(0));
  if (trace) {
    trace->batch = batch;
    trace->pre_activations.assign(params.layers.size(), {});
  }

  std::vector<float> act(input.values().begin(), input.values().end());
  std::vector<float> pre;
  for (size_t li = 0; li < params.layers.size(); ++li) {
    const auto& layer = params.layers[li];
    pre.assign(static_cast<size_t>(batch) * layer.out, 0.0f);
    dense_forward(layer, act.data(), batch, pre.data());
    if (trace) trace->pre_activations[li] = pre;
    act = pre;
    if (li + 1 < params.layers.size()) {
      for (float& v : act) v = std::max(v, 0.0f);
    }
  }
  for (float& v : act) v = params.output_scale * std::tanh(v);
  return Tensor({batch, params.output_width()}, std::move(act));
}

uint64_t relu_pattern(const MlpTrace& trace) {
  uint64_t h = 1469598103934665603ull;
  for (size_t li = 0; li + 1 < trace.pre_activations.size(); ++li) {
    for (float z : trace.pre_activations[li]) {
      h ^= z > 0.0f ? 1u : 0u;
      h *= 1099511628211ull;
    }
  }
  return h;
}

MlpGradients mlp_backward(const MlpParams& params, const Tensor& input, const MlpTrace& trace,
                          const Tensor& output_adjoint) {
  const int batch = trace.batch;
  if (trace.pre_activations.size() != params.layers.size()) {
    throw DimensionError("mlp_backward: trace does not match network");
  }
  output_adjoint.expect_shape({batch, params.output_width()}, "mlp_backward output adjoint");
  input.expect_shape({batch, params.input_width()}, "mlp_backward input");

  MlpGradients grads;
  for (const auto& l : params.layers) grads.layers.emplace_back(l.in, l.out);

  // Adjoint w.r.t. final pre-activation: scale * (1 - tanh^2).
  const auto& last_pre = trace.pre_activations.back();
  std::vector<float> delta(output_adjoint.values().begin(), output_adjoint.values().end());
  for (size_t k = 0; k < delta.size(); ++k) {
    const float t = std::tanh(last_pre[k]);
    delta[k] *= params.output_scale * (1.0f - t * t);
  }

  std::vector<float> relu_in;
  for (size_t li = params.layers.size(); li-- > 0;) {
    const auto& layer = params.layers[li];
    auto& g = grads.layers[li];
    // Layer input: relu of previous pre-activation, or the network input.
    const float* x = nullptr;
    if (li == 0) {
      x = input.data();
    } else {
      relu_in = trace.pre_activations[li - 1];
      for (float& v : relu_in) v = std::max(v, 0.0f);
      x = relu_in.data();
    }
    for (int b = 0; b < batch; ++b) {
      const float* db = delta.data() + static_cast<size_t>(b) * layer.out;
      const float* xb = x + static_cast<size_t>(b) * layer.in;
      for (int o = 0; o < layer.out; ++o) {
        const float d = db[o];
        if (d == 0.0f) continue;
        g.bias[o] += d;
        float* gw = g.weight.data() + static_cast<size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) gw[i] += d * xb[i];
      }
    }
    std::vector<float> next(static_cast<size_t>(batch) * layer.in, 0.0f);
    for (int b = 0; b < batch; ++b) {
      const float* db = delta.data() + static_cast<size_t>(b) * layer.out;
      float* nb = next.data() + static_cast<size_t>(b) * layer.in;
      for (int o = 0; o < layer.out; ++o) {
        const float d = db[o];
        if (d == 0.0f) continue;
        const float* w = layer.weight.data() + static_cast<size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) nb[i] += d * w[i];
      }
    }
    if (li > 0) {
      const auto& prev_pre = trace.pre_activations[li - 1];
      for (size_t k = 0; k < next.size(); ++k) {
        if (prev_pre[k] <= 0.0f) next[k] = 0.0f;
      }
    }
    delta = std::move(next);
  }
  grads.input = Tensor({batch, params.input_width()}, std::move(delta));
  return grads;
}

}  // namespace dualhead

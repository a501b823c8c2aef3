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

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dualhead/tensor.hpp"

namespace dualhead {

// Fully connected layer, weight stored [out, in] row-major.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  DenseLayer() = default;
  DenseLayer(int in_features, int out_features)
      : in(in_features),
        out(out_features),
        weight(static_cast<size_t>(in_features) * out_features, 0.0f),
        bias(static_cast<size_t>(out_features), 0.0f) {}

  bool operator==(const DenseLayer&) const = default;
};

// ReLU hidden layers, tanh output scaled by `output_scale`.
struct MlpParams {
  std::vector<DenseLayer> layers;
  float output_scale = 0.1f;

  int input_width() const { return layers.empty() ? 0 : layers.front().in; }
  int output_width() const { return layers.empty() ? 0 : layers.back().out; }
  size_t parameter_count() const;

  // Flat views in layer order: weight then bias for each layer.
  std::vector<float> flatten() const;
  void assign_flat(std::span<const float> flat);

  bool operator==(const MlpParams&) const = default;
};

inline constexpr int kOffsetHiddenWidth = 128;
inline constexpr int kOffsetHiddenLayers = 3;
inline constexpr float kOffsetScale = 0.1f;

// Widths {3+d, 128, 128, 128, 3} for the vertex-offset network.
std::vector<int> offset_mlp_widths(int feature_dim);

MlpParams make_zero_mlp(std::span<const int> widths, float output_scale = kOffsetScale);

// He-uniform fan-in init for hidden layers; the final layer is zeroed so the
// network initially outputs exactly zero.
MlpParams make_offset_mlp(int feature_dim, std::mt19937_64& rng);

// Throws DimensionError unless params has the offset-network architecture.
void validate_offset_mlp(const MlpParams& params, int feature_dim);

// Intermediates recorded by mlp_forward for the backward pass.
struct MlpTrace {
  // Pre-activation of every layer, [batch, out].
  std::vector<std::vector<float>> pre_activations;
  int batch = 0;
};

// Hash of the ReLU on/off pattern of the hidden layers.
uint64_t relu_pattern(const MlpTrace& trace);

// output = scale * tanh(W_L relu(... relu(W_0 x + b_0) ...) + b_L), input [B, in].
Tensor mlp_forward(const MlpParams& params, const Tensor& input, MlpTrace* trace = nullptr);

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Tensor input;
};

MlpGradients mlp_backward(const MlpParams& params, const Tensor& input, const MlpTrace& trace,
                          const Tensor& output_adjoint);

}  // namespace dualhead

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/attention.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vfib/error.hpp"
#include "vfib/lstm.hpp"

namespace vfib {

namespace {

// Psi = tanh(W_align phi (+) (W_u u_q + b_u)), the sentence term broadcast
// over columns.
Var align(Graph& g, const std::string& align_symbol, Var phi, Var u_q) {
  Var sentence = add(matmul(g.param(sym::kSentenceAlign), u_q),
                     g.param(sym::kSentenceBias));
  return tanh(add_columns(matmul(g.param(align_symbol), phi), sentence));
}

}  // namespace

void FeatureBundle::validate() const {
  if (spatial.rank() != 3) {
    throw ShapeError("spatial features must be frames x regions x channels, got " +
                     spatial.shape_string());
  }
  if (shots.rank() != 2) {
    throw ShapeError("shot features must be shots x dims, got " +
                     shots.shape_string());
  }
}

Tensor select_shots(const Tensor& shots, std::size_t count) {
  if (shots.rank() != 2) {
    throw ShapeError("shot matrix must be rank 2, got " + shots.shape_string());
  }
  if (count == 0) throw ConfigError("shot count must be positive");
  const std::size_t n = shots.rows();
  const std::size_t z = shots.cols();
  Tensor out({count, z});
  auto copy_row = [&](std::size_t from, std::size_t to) {
    std::copy_n(shots.data().begin() + static_cast<std::ptrdiff_t>(from * z), z,
                out.data().begin() + static_cast<std::ptrdiff_t>(to * z));
  };
  if (n <= count) {
    for (std::size_t i = 0; i < n; ++i) copy_row(i, i);
    return out;
  }
  if (count == 1) {
    copy_row(0, 0);
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    // Evenly spaced, rounded to nearest, so row 0 and row n-1 are kept.
    const std::size_t from = (i * (n - 1) * 2 + (count - 1)) / (2 * (count - 1));
    copy_row(from, i);
  }
  return out;
}

Tensor max_pool_frames(const Tensor& spatial) {
  if (spatial.rank() != 3) {
    throw ShapeError("spatial features must be rank 3, got " +
                     spatial.shape_string());
  }
  const std::size_t frames = spatial.shape()[0];
  const std::size_t cells = spatial.shape()[1] * spatial.shape()[2];
  Tensor out({spatial.shape()[1], spatial.shape()[2]});
  std::copy_n(spatial.data().begin(), cells, out.data().begin());
  for (std::size_t f = 1; f < frames; ++f) {
    for (std::size_t i = 0; i < cells; ++i) {
      out[i] = std::max(out[i], spatial[f * cells + i]);
    }
  }
  return out;
}

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::kLearned: return "learned";
    case AttentionMode::kUniform: return "uniform";
    case AttentionMode::kOff: return "off";
  }
  return "learned";
}

AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "learned") return AttentionMode::kLearned;
  if (s == "uniform") return AttentionMode::kUniform;
  if (s == "off") return AttentionMode::kOff;
  throw ConfigError("unknown attention mode '" + std::string(s) +
                    "' (expected learned, uniform or off)");
}

void init_attention_params(ModelParams& params, const AttentionDims& dims,
                           AttentionMode spatial, AttentionMode temporal,
                           Rng& rng) {
  const auto [d, k, c_raw, z] = dims;
  if (spatial != AttentionMode::kOff) {
    if (d == 0 || c_raw == 0) throw ConfigError("spatial dims must be positive");
    params[sym::kSpatialProject] = glorot_uniform(d, c_raw, rng);
  }
  if (spatial == AttentionMode::kLearned) {
    params[sym::kSpatialAlign] = glorot_uniform(k, d, rng);
    params[sym::kSpatialScore] = Tensor::vector(glorot_uniform(k, 1, rng).values());
  }
  if (temporal != AttentionMode::kOff) {
    if (d == 0 || z == 0) throw ConfigError("temporal dims must be positive");
    params[sym::kShotProject] = glorot_uniform(d, z, rng);
  }
  if (temporal == AttentionMode::kLearned) {
    params[sym::kShotAlign] = glorot_uniform(k, d, rng);
    LstmParams::init(k, k, rng).store(params, sym::kTemporalLstm);
    params[sym::kTemporalScore] = Tensor::vector(glorot_uniform(k, 1, rng).values());
  }
  if (spatial == AttentionMode::kLearned || temporal == AttentionMode::kLearned) {
    if (k == 0) throw ConfigError("attention dim k must be positive");
    params[sym::kSentenceAlign] = glorot_uniform(k, d, rng);
    params[sym::kSentenceBias] = Tensor({k});
  }
}

Var pool_spatial_features(Graph& g, const FeatureBundle& bundle) {
  bundle.validate();
  if (bundle.frames() == 0) throw ShapeError("no key-frames in feature bundle");
  Var pooled = g.constant(max_pool_frames(bundle.spatial));  // m x c_raw
  return tanh(matmul(g.param(sym::kSpatialProject), transpose(pooled)));
}

AttentionOutput spatial_attention(Graph& g, Var phi_F, Var u_q) {
  Var psi = align(g, sym::kSpatialAlign, phi_F, u_q);  // k x m
  Var p = softmax(matmul(transpose(psi), g.param(sym::kSpatialScore)));
  return {p, matmul(phi_F, p)};
}

Var encode_shot_features(Graph& g, const FeatureBundle& bundle) {
  bundle.validate();
  Var shots = g.constant(bundle.shots);  // |G| x z
  return tanh(matmul(g.param(sym::kShotProject), transpose(shots)));
}

AttentionOutput temporal_attention(Graph& g, Var phi_G, Var u_q) {
  Var psi = align(g, sym::kShotAlign, phi_G, u_q);  // k x |G|
  const std::size_t shots = psi.value().cols();
  std::vector<Var> steps;
  steps.reserve(shots);
  for (std::size_t i = 0; i < shots; ++i) steps.push_back(column(psi, i));
  // One hidden state per shot, so every shot gets its own score.
  const auto omega =
      lstm_states(g, LstmVars::bind(g, sym::kTemporalLstm), steps);
  Var scores = matmul(transpose(stack_columns(omega)),
                      g.param(sym::kTemporalScore));
  Var p = softmax(scores);
  return {p, matmul(phi_G, p)};
}

AttentionOutput uniform_attention(Graph& g, Var phi) {
  const std::size_t n = phi.value().cols();
  Var p = g.constant(Tensor({n}, 1.0 / static_cast<double>(n)));
  return {p, matmul(phi, p)};
}

}  // namespace vfib

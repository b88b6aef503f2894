// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "vfib/graph.hpp"
#include "vfib/rng.hpp"
#include "vfib/tensor.hpp"

namespace vfib {

namespace sym {
inline const std::string kSpatialProject = "W_f";
inline const std::string kSpatialAlign = "W_F";
inline const std::string kSentenceAlign = "W_u";
inline const std::string kSentenceBias = "b_u";
inline const std::string kSpatialScore = "w_sp";
inline const std::string kShotProject = "W_g";
inline const std::string kShotAlign = "W_G";
inline const std::string kTemporalLstm = "lstm_tp";
inline const std::string kTemporalScore = "w_tp";
}  // namespace sym

/// Precomputed visual features for one video.
struct FeatureBundle {
  /// frames x m x c_raw key-frame feature maps.
  Tensor spatial;
  /// |G| x z shot features; zero rows pad short videos.
  Tensor shots;

  std::size_t frames() const { return spatial.shape().at(0); }
  std::size_t regions() const { return spatial.shape().at(1); }
  std::size_t channels() const { return spatial.shape().at(2); }

  /// Throws ShapeError unless spatial is rank 3 and shots rank 2.
  void validate() const;
};

/// Pads with zero rows or picks evenly spaced rows (first and last included)
/// so the result has exactly `count` rows.
Tensor select_shots(const Tensor& shots, std::size_t count);

/// Elementwise max over frames: m x c_raw.
Tensor max_pool_frames(const Tensor& spatial);

enum class AttentionMode { kLearned, kUniform, kOff };

std::string to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view s);

struct AttentionDims {
  std::size_t d = 0;      // shared representation size
  std::size_t k = 0;      // alignment size
  std::size_t c_raw = 0;  // spatial channels
  std::size_t z = 0;      // shot feature size
};

/// Writes the spatial and/or temporal tensors. W_u and b_u are written once
/// and shared by both paths.
void init_attention_params(ModelParams& params, const AttentionDims& dims,
                           AttentionMode spatial, AttentionMode temporal,
                           Rng& rng);

struct AttentionOutput {
  Var weights;  // probability vector over regions or shots
  Var pooled;   // weighted average of the feature columns
};

/// Phi_F = tanh(W_f maxpool(frames)^T): d x m, column j is region j.
Var pool_spatial_features(Graph& g, const FeatureBundle& bundle);

/// Sentence-conditioned soft attention over the columns of phi_F.
AttentionOutput spatial_attention(Graph& g, Var phi_F, Var u_q);

/// Phi_G = tanh(W_g shots^T): d x |G|.
Var encode_shot_features(Graph& g, const FeatureBundle& bundle);

/// Attention over shots, scored by an LSTM run across the aligned columns.
AttentionOutput temporal_attention(Graph& g, Var phi_G, Var u_q);

/// Fixed 1/n weights over the n columns of phi.
AttentionOutput uniform_attention(Graph& g, Var phi);

}  // namespace vfib

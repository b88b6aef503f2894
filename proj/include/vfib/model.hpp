// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vfib/attention.hpp"
#include "vfib/encoder.hpp"
#include "vfib/fusion.hpp"
#include "vfib/graph.hpp"
#include "vfib/text.hpp"

namespace vfib {

/// Layer sizes. The vocabulary sizes are filled in from data.
struct Dims {
  std::size_t c = 32;       // word embedding
  std::size_t h = 48;       // sentence LSTM hidden
  std::size_t d = 64;       // shared representation
  std::size_t k = 32;       // attention alignment
  std::size_t m = 16;       // spatial regions
  std::size_t c_raw = 20;   // spatial channels
  std::size_t z = 24;       // shot feature size
  std::size_t shots = 10;   // |G|
  std::size_t vocab = 0;    // |V|
  std::size_t blanks = 0;   // |beta|
  std::size_t attributes = 0;  // |A|

  /// "toy", "desk" or "full".
  static Dims preset(std::string_view name);

  nlohmann::json to_json() const;
  static Dims from_json(const nlohmann::json& j);
  static Dims from_json(const nlohmann::json& j, Dims base);
};

struct ModelConfig {
  Dims dims;
  EncoderKind encoder = EncoderKind::kFull;
  AttentionMode spatial = AttentionMode::kLearned;
  AttentionMode temporal = AttentionMode::kLearned;
  bool attributes = false;

  /// Throws ConfigError for non-positive sizes or a missing attribute count.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Seeded initialization of every tensor the configuration uses.
ModelParams init_model_params(const ModelConfig& config, std::uint64_t seed);

/// Graph handles for one forward pass.
struct ModelOutputs {
  Var u_q;
  std::optional<AttentionOutput> spatial;
  std::optional<AttentionOutput> temporal;
  std::optional<Var> u_attr;
  Var u;
  Var logits;
};

/// Encode, attend, fuse and score one blank. `attributes` may be empty, in
/// which case the attribute head (if enabled) sees all-zero scores.
ModelOutputs forward(Graph& g, const ModelConfig& config,
                     const FragmentPair& pair, const FeatureBundle& features,
                     std::span<const double> attributes = {});

/// Inference for one blank, with attention vectors and representation
/// snapshots captured.
PredictionRecord predict(const ModelParams& params, const ModelConfig& config,
                         const FragmentPair& pair, const FeatureBundle& features,
                         std::span<const double> attributes = {});

/// Throws ShapeError when the bundle does not match the configured dims.
void check_feature_dims(const ModelConfig& config, const FeatureBundle& features);

}  // namespace vfib

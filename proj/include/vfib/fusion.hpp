// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfib/graph.hpp"
#include "vfib/rng.hpp"

namespace vfib {

namespace sym {
inline const std::string kClassifier = "W_blank";
inline const std::string kAttrCoeff = "W_c";
inline const std::string kAttrProject = "W_Attr";
}  // namespace sym

struct PredictionRecord {
  std::vector<double> probabilities;
  std::size_t answer = 0;
  std::string answer_token;
  std::vector<double> p_sp;
  std::vector<double> p_tp;
  std::vector<double> u_q;
  std::vector<double> u_sp;
  std::vector<double> u_tp;

  nlohmann::json to_json() const;
};

/// W_blank (|blanks| x d) and, when `attributes` > 0, W_c and W_Attr.
void init_fusion_params(ModelParams& params, std::size_t d, std::size_t blanks,
                        std::size_t attributes, Rng& rng);

/// Elementwise sum of equally shaped representations.
Var fuse(std::span<const Var> parts);

/// Blank-vocabulary logits W_blank u.
Var blank_logits(Graph& g, Var u);

/// Softmax over W_blank u; the answer is the lowest index attaining the max.
PredictionRecord classify_blank(Graph& g, Var u);

/// u_Attr = tanh(W_Attr (ReLU(W_c (u_q + u_sp + u_tp)) .* A)).
/// Throws ConfigError when the attribute head is not configured.
Var attribute_attention(Graph& g, Var u_q, Var u_sp, Var u_tp,
                        std::span<const double> scores);

/// Argmax of the elementwise sum of the members' probability vectors, summed
/// in the given order. Throws DomainError for an empty list and ShapeError
/// for unequal lengths.
std::size_t ensemble_predict(std::span<const std::vector<double>> probabilities);

}  // namespace vfib

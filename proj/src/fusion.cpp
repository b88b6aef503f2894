// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/fusion.hpp"

#include "vfib/error.hpp"
#include "vfib/lstm.hpp"

namespace vfib {

nlohmann::json PredictionRecord::to_json() const {
  nlohmann::json j = {{"answer", answer},
                      {"answer_token", answer_token},
                      {"probabilities", probabilities}};
  if (!p_sp.empty()) j["p_sp"] = p_sp;
  if (!p_tp.empty()) j["p_tp"] = p_tp;
  return j;
}

void init_fusion_params(ModelParams& params, std::size_t d, std::size_t blanks,
                        std::size_t attributes, Rng& rng) {
  if (blanks < 2) {
    throw ConfigError("blank vocabulary needs at least 2 words, got " +
                      std::to_string(blanks));
  }
  params[sym::kClassifier] = glorot_uniform(blanks, d, rng);
  if (attributes > 0) {
    params[sym::kAttrCoeff] = glorot_uniform(attributes, d, rng);
    params[sym::kAttrProject] = glorot_uniform(d, attributes, rng);
  }
}

Var fuse(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("fuse: nothing to fuse");
  Var u = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) u = add(u, parts[i]);
  return u;
}

Var blank_logits(Graph& g, Var u) {
  return matmul(g.param(sym::kClassifier), u);
}

PredictionRecord classify_blank(Graph& g, Var u) {
  Var p = softmax(blank_logits(g, u));
  PredictionRecord rec;
  rec.probabilities = p.value().values();
  rec.answer = argmax(rec.probabilities);
  return rec;
}

Var attribute_attention(Graph& g, Var u_q, Var u_sp, Var u_tp,
                        std::span<const double> scores) {
  if (!g.has_param(sym::kAttrCoeff) || !g.has_param(sym::kAttrProject)) {
    throw ConfigError("attribute head is not enabled for this model");
  }
  Var w_c = g.param(sym::kAttrCoeff);
  if (scores.size() != w_c.value().rows()) {
    throw ShapeError("expected " + std::to_string(w_c.value().rows()) +
                     " attribute scores, got " + std::to_string(scores.size()));
  }
  const Var parts[] = {u_q, u_sp, u_tp};
  Var phi = fuse(parts);
  Var coeff = relu(matmul(w_c, phi));
  Var a = g.constant(Tensor::vector({scores.begin(), scores.end()}));
  return tanh(matmul(g.param(sym::kAttrProject), mul(coeff, a)));
}

std::size_t ensemble_predict(std::span<const std::vector<double>> probabilities) {
  if (probabilities.empty()) throw DomainError("ensemble of zero models");
  std::vector<double> total(probabilities[0].size(), 0.0);
  for (const auto& p : probabilities) {
    if (p.size() != total.size()) {
      throw ShapeError("ensemble members disagree on blank vocabulary size");
    }
    for (std::size_t i = 0; i < p.size(); ++i) total[i] += p[i];
  }
  return argmax(total);
}

}  // namespace vfib

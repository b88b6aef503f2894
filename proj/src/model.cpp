// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/model.hpp"

#include <set>

#include "vfib/error.hpp"

namespace vfib {

namespace {

void reject_unknown_keys(const nlohmann::json& j,
                         const std::set<std::string>& allowed,
                         const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in " + what);
    }
  }
}

std::size_t positive(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string("dims.") + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

Dims Dims::preset(std::string_view name) {
  Dims d;
  if (name == "desk") return d;
  if (name == "toy") {
    d.c = 8;
    d.h = 8;
    d.d = 12;
    d.k = 8;
    d.m = 9;
    d.c_raw = 6;
    d.z = 6;
    d.shots = 4;
    d.vocab = 30;
    d.blanks = 10;
    d.attributes = 5;
    return d;
  }
  if (name == "full") {
    d.m = 196;
    d.c_raw = 512;
    d.z = 4096;
    d.shots = 10;
    return d;
  }
  throw ConfigError("unknown dims preset '" + std::string(name) +
                    "' (expected toy, desk or full)");
}

nlohmann::json Dims::to_json() const {
  return {{"c", c},         {"h", h},         {"d", this->d},
          {"k", k},         {"m", m},         {"c_raw", c_raw},
          {"z", z},         {"shots", shots}, {"vocab", vocab},
          {"blanks", blanks}, {"attributes", attributes}};
}

Dims Dims::from_json(const nlohmann::json& j) { return from_json(j, Dims{}); }

Dims Dims::from_json(const nlohmann::json& j, Dims base) {
  reject_unknown_keys(j, {"c", "h", "d", "k", "m", "c_raw", "z", "shots",
                          "vocab", "blanks", "attributes"},
                      "dims");
  base.c = positive(j, "c", base.c);
  base.h = positive(j, "h", base.h);
  base.d = positive(j, "d", base.d);
  base.k = positive(j, "k", base.k);
  base.m = positive(j, "m", base.m);
  base.c_raw = positive(j, "c_raw", base.c_raw);
  base.z = positive(j, "z", base.z);
  base.shots = positive(j, "shots", base.shots);
  base.vocab = positive(j, "vocab", base.vocab);
  base.blanks = positive(j, "blanks", base.blanks);
  base.attributes = positive(j, "attributes", base.attributes);
  return base;
}

void ModelConfig::validate() const {
  const Dims& s = dims;
  for (std::size_t v : {s.c, s.h, s.d, s.k, s.m, s.c_raw, s.z, s.shots, s.vocab}) {
    if (v == 0) throw ConfigError("model dimensions must be positive");
  }
  if (s.blanks < 2) throw ConfigError("blank vocabulary needs at least 2 words");
  if (attributes && s.attributes == 0) {
    throw ConfigError("attribute head enabled but dims.attributes is 0");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"dims", dims.to_json()},
          {"baseline", to_string(encoder)},
          {"spatial", to_string(spatial)},
          {"temporal", to_string(temporal)},
          {"attributes", attributes}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"dims", "baseline", "spatial", "temporal", "attributes"},
                      "model config");
  ModelConfig c;
  try {
    if (j.contains("dims")) c.dims = Dims::from_json(j.at("dims"));
    if (j.contains("baseline")) {
      c.encoder = parse_encoder_kind(j.at("baseline").get<std::string>());
    }
    if (j.contains("spatial")) {
      c.spatial = parse_attention_mode(j.at("spatial").get<std::string>());
    }
    if (j.contains("temporal")) {
      c.temporal = parse_attention_mode(j.at("temporal").get<std::string>());
    }
    if (j.contains("attributes")) c.attributes = j.at("attributes").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  return c;
}

ModelParams init_model_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const Dims& s = config.dims;
  Rng rng(seed);
  ModelParams params;
  init_encoder_params(params, {s.vocab, s.c, s.h, s.d}, config.encoder, rng);
  init_attention_params(params, {s.d, s.k, s.c_raw, s.z}, config.spatial,
                        config.temporal, rng);
  init_fusion_params(params, s.d, s.blanks, config.attributes ? s.attributes : 0,
                     rng);
  return params;
}

void check_feature_dims(const ModelConfig& config, const FeatureBundle& features) {
  features.validate();
  const Dims& s = config.dims;
  if (config.spatial != AttentionMode::kOff &&
      (features.regions() != s.m || features.channels() != s.c_raw)) {
    throw ShapeError("spatial features " + features.spatial.shape_string() +
                     " do not match m=" + std::to_string(s.m) +
                     ", c_raw=" + std::to_string(s.c_raw));
  }
  if (config.temporal != AttentionMode::kOff &&
      (features.shots.rows() != s.shots || features.shots.cols() != s.z)) {
    throw ShapeError("shot features " + features.shots.shape_string() +
                     " do not match |G|=" + std::to_string(s.shots) +
                     ", z=" + std::to_string(s.z));
  }
}

ModelOutputs forward(Graph& g, const ModelConfig& config,
                     const FragmentPair& pair, const FeatureBundle& features,
                     std::span<const double> attributes) {
  ModelOutputs out;
  out.u_q = encode_sentence(g, pair, config.encoder);

  if (config.spatial != AttentionMode::kOff) {
    Var phi = pool_spatial_features(g, features);
    out.spatial = config.spatial == AttentionMode::kLearned
                      ? spatial_attention(g, phi, out.u_q)
                      : uniform_attention(g, phi);
  }
  if (config.temporal != AttentionMode::kOff) {
    Var phi = encode_shot_features(g, features);
    out.temporal = config.temporal == AttentionMode::kLearned
                       ? temporal_attention(g, phi, out.u_q)
                       : uniform_attention(g, phi);
  }

  std::vector<Var> parts{out.u_q};
  if (out.spatial) parts.push_back(out.spatial->pooled);
  if (out.temporal) parts.push_back(out.temporal->pooled);
  out.u = fuse(parts);

  if (config.attributes) {
    Var zero = g.zeros({config.dims.d});
    Var u_sp = out.spatial ? out.spatial->pooled : zero;
    Var u_tp = out.temporal ? out.temporal->pooled : zero;
    std::vector<double> scores(attributes.begin(), attributes.end());
    if (scores.empty()) scores.assign(config.dims.attributes, 0.0);
    out.u_attr = attribute_attention(g, out.u_q, u_sp, u_tp, scores);
    out.u = add(out.u, *out.u_attr);
  }
  out.logits = blank_logits(g, out.u);
  return out;
}

PredictionRecord predict(const ModelParams& params, const ModelConfig& config,
                         const FragmentPair& pair, const FeatureBundle& features,
                         std::span<const double> attributes) {
  Graph g(&params);
  ModelOutputs out = forward(g, config, pair, features, attributes);
  PredictionRecord rec;
  rec.probabilities = stable_softmax(out.logits.value().data());
  rec.answer = argmax(rec.probabilities);
  if (out.spatial) {
    rec.p_sp = out.spatial->weights.value().values();
    rec.u_sp = out.spatial->pooled.value().values();
  }
  if (out.temporal) {
    rec.p_tp = out.temporal->weights.value().values();
    rec.u_tp = out.temporal->pooled.value().values();
  }
  rec.u_q = out.u_q.value().values();
  return rec;
}

}  // namespace vfib

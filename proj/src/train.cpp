// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "vfib/error.hpp"
#include "vfib/rng.hpp"

namespace vfib {

namespace {

// Keeps the shuffle stream independent of parameter initialization.
constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const AdamConfig& config) {
  for (const auto& [symbol, g] : grads) {
    auto it = params.find(symbol);
    if (it == params.end()) {
      throw ConfigError("gradient for unknown parameter '" + symbol + "'");
    }
    if (!it->second.same_shape(g)) {
      throw ShapeError("gradient for '" + symbol + "' has shape " +
                       g.shape_string() + ", parameter has " +
                       it->second.shape_string());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [symbol, p] : params) {
    auto git = grads.find(symbol);
    Tensor& m = state.m.try_emplace(symbol, Tensor::zeros_like(p)).first->second;
    Tensor& v = state.v.try_emplace(symbol, Tensor::zeros_like(p)).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = git != grads.end() ? git->second[i] : 0.0;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

double clip_global_norm(std::map<std::string, Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [symbol, g] : grads) {
    for (double x : g.data()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [symbol, g] : grads) {
      for (double& x : g.data()) x *= factor;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (!(adam.learning_rate > 0.0) || !(adam.epsilon > 0.0)) {
    throw ConfigError("learning rate and epsilon must be positive");
  }
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 &&
        adam.beta2 < 1.0)) {
    throw ConfigError("Adam moment decays must lie in (0, 1)");
  }
  if (batch_size == 0 || epochs == 0) {
    throw ConfigError("batch size and epochs must be positive");
  }
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"seed", seed},
          {"learning_rate", adam.learning_rate},
          {"betas", {adam.beta1, adam.beta2}},
          {"epsilon", adam.epsilon},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"clip_norm", clip_norm},
          {"strategy", to_string(strategy)},
          {"model", model.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  static const std::set<std::string> allowed = {
      "seed", "learning_rate", "betas", "epsilon", "batch_size",
      "epochs", "clip_norm", "strategy", "model"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key '" + key + "' in train config");
    }
  }
  try {
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("learning_rate")) {
      base.adam.learning_rate = j.at("learning_rate").get<double>();
    }
    if (j.contains("betas")) {
      const auto betas = j.at("betas").get<std::vector<double>>();
      if (betas.size() != 2) throw ConfigError("betas must have two entries");
      base.adam.beta1 = betas[0];
      base.adam.beta2 = betas[1];
    }
    if (j.contains("epsilon")) base.adam.epsilon = j.at("epsilon").get<double>();
    if (j.contains("batch_size")) {
      base.batch_size = j.at("batch_size").get<std::size_t>();
    }
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("clip_norm")) base.clip_norm = j.at("clip_norm").get<double>();
    if (j.contains("strategy")) {
      base.strategy = parse_blank_strategy(j.at("strategy").get<std::string>());
    }
    if (j.contains("model")) {
      nlohmann::json merged = base.model.to_json();
      const auto& m = j.at("model");
      if (!m.is_object()) throw ConfigError("model must be a JSON object");
      for (const auto& [key, value] : m.items()) {
        if (key == "dims" && value.is_object()) {
          for (const auto& [dk, dv] : value.items()) merged["dims"][dk] = dv;
        } else {
          merged[key] = value;
        }
      }
      base.model = ModelConfig::from_json(merged);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  base.validate();
  return base;
}

const FeatureBundle& Dataset::bundle(const ClozeInstance& instance) const {
  auto it = features.find(instance.features);
  if (it == features.end()) {
    throw IoError("no features loaded for '" + instance.features + "'");
  }
  return it->second;
}

std::vector<Example> make_examples(const Dataset& data, const Vocabulary& vocab,
                                   BlankStrategy strategy) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const ClozeInstance& inst = data.instances[i];
    const FeatureBundle& bundle = data.bundle(inst);
    for (std::size_t b = 0; b < inst.blank_count(); ++b) {
      Example ex;
      ex.pair = vocab.encode(inst.blank_count() == 1
                                 ? extract_fragments_single(inst)
                                 : extract_fragments(inst, b, strategy));
      ex.features = &bundle;
      ex.attributes = inst.attributes;
      ex.gold = vocab.blank_index(inst.answers[b]);
      ex.instance = i;
      ex.blank = b;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch}, {"loss", loss}, {"accuracy", accuracy},
          {"wall_seconds", seconds}};
}

BatchGradient batch_gradient(const ModelParams& params, const ModelConfig& config,
                             std::span<const Example* const> batch) {
  BatchGradient out;
  if (batch.empty()) return out;
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (const Example* ex : batch) {
    if (!ex->gold) {
      throw ConfigError("training example has an answer outside the blank vocabulary");
    }
    Graph g(&params);
    ModelOutputs fwd = forward(g, config, ex->pair, *ex->features, ex->attributes);
    Var loss = cross_entropy(fwd.logits, *ex->gold);
    out.loss += loss.value()[0] * weight;
    if (argmax(fwd.logits.value().data()) == *ex->gold) ++out.correct;
    for (auto& [symbol, grad] : g.backward(loss)) {
      auto [it, inserted] = out.grads.try_emplace(symbol, Tensor::zeros_like(grad));
      Tensor& acc = it->second;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += grad[i] * weight;
    }
  }
  return out;
}

TrainResult train(const Dataset& data, const Vocabulary& vocab,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const ModelConfig& mc = config.model;
  if (mc.dims.vocab != vocab.size() || mc.dims.blanks != vocab.blank_size()) {
    throw ConfigError("model vocabulary sizes do not match the vocabulary");
  }
  const std::vector<Example> examples = make_examples(data, vocab, config.strategy);
  if (examples.empty()) throw ConfigError("training set has no blanks");
  for (const Example& ex : examples) check_feature_dims(mc, *ex.features);

  TrainResult result;
  result.params = init_model_params(mc, config.seed);
  AdamState state;
  Rng shuffle(config.seed ^ kShuffleSalt);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<const Example*> batch;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&examples[order[i]]);
      BatchGradient bg = batch_gradient(result.params, mc, batch);
      loss_sum += bg.loss * static_cast<double>(batch.size());
      correct += bg.correct;
      if (config.clip_norm > 0.0) clip_global_norm(bg.grads, config.clip_norm);
      adam_step(result.params, bg.grads, state, config.adam);
    }
    EpochLog log;
    log.epoch = epoch;
    log.loss = loss_sum / static_cast<double>(examples.size());
    log.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log, result.params);
  }
  return result;
}

EvalResult evaluate(const Dataset& data, const TrainedModel& model) {
  return evaluate_ensemble(data, std::span<const TrainedModel>(&model, 1));
}

EvalResult evaluate_ensemble(const Dataset& data,
                             std::span<const TrainedModel> members) {
  if (members.empty()) throw DomainError("ensemble of zero models");
  const Vocabulary& vocab = members[0].vocab;
  for (const TrainedModel& m : members) {
    if (m.vocab.blank_ids() != vocab.blank_ids() || m.vocab.size() != vocab.size()) {
      throw ConfigError("ensemble members were trained on different vocabularies");
    }
  }
  std::vector<std::vector<Example>> per_member;
  for (const TrainedModel& m : members) {
    per_member.push_back(make_examples(data, m.vocab, m.config.strategy));
  }
  EvalResult result;
  const std::size_t n = per_member[0].size();
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<std::vector<double>> probs;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const Example& ex = per_member[m][e];
      check_feature_dims(members[m].config.model, *ex.features);
      probs.push_back(predict(members[m].params, members[m].config.model, ex.pair,
                              *ex.features, ex.attributes)
                          .probabilities);
    }
    const std::optional<std::size_t> gold = per_member[0][e].gold;
    ++result.total;
    if (gold && ensemble_predict(probs) == *gold) ++result.correct;
  }
  return result;
}

GradCheckReport model_grad_check(const ModelConfig& config, std::uint64_t seed,
                                 double epsilon) {
  config.validate();
  const Dims& dims = config.dims;
  Rng rng(seed ^ kShuffleSalt);
  FragmentPair pair;
  for (auto* side : {&pair.left, &pair.right}) {
    const std::size_t n = 1 + rng.index(4);
    for (std::size_t i = 0; i < n; ++i) side->push_back(rng.index(dims.vocab));
  }
  FeatureBundle features;
  features.spatial = Tensor({2, dims.m, dims.c_raw});
  features.shots = Tensor({dims.shots, dims.z});
  for (double& x : features.spatial.data()) x = rng.uniform(-1.0, 1.0);
  for (double& x : features.shots.data()) x = rng.uniform(-1.0, 1.0);
  std::vector<double> attributes(config.attributes ? dims.attributes : 0);
  for (double& x : attributes) x = rng.uniform();
  const std::size_t gold = rng.index(dims.blanks);

  const ModelParams params = init_model_params(config, seed);
  auto loss = [&](Graph& g) {
    return cross_entropy(forward(g, config, pair, features, attributes).logits, gold);
  };
  return grad_check(loss, params, epsilon);
}

}  // namespace vfib

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vfib/attention.hpp"
#include "vfib/gradcheck.hpp"
#include "vfib/graph.hpp"
#include "vfib/model.hpp"
#include "vfib/text.hpp"

namespace vfib {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moments per symbol, created on first use.
struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update. Symbols absent from `grads` are treated
/// as having zero gradient. Throws ShapeError on a shape mismatch.
void adam_step(ModelParams& params, const std::map<std::string, Tensor>& grads,
               AdamState& state, const AdamConfig& config);

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
double clip_global_norm(std::map<std::string, Tensor>& grads, double max_norm);

struct TrainConfig {
  std::uint64_t seed = 1;
  AdamConfig adam;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  /// Global-norm clip; 0 disables clipping.
  double clip_norm = 5.0;
  BlankStrategy strategy = BlankStrategy::kMasking;
  ModelConfig model;

  void validate() const;
  nlohmann::json to_json() const;
  /// Fields absent from `j` keep the values of `base`. Unknown keys are
  /// rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

/// Instances plus their decoded visual features, keyed by feature id.
struct Dataset {
  std::vector<ClozeInstance> instances;
  std::map<std::string, FeatureBundle> features;

  const FeatureBundle& bundle(const ClozeInstance& instance) const;
};

/// One (instance, blank) pair ready for the model.
struct Example {
  FragmentPair pair;
  const FeatureBundle* features = nullptr;
  std::span<const double> attributes;
  /// Index into the blank vocabulary; empty when the gold word is not a
  /// candidate (such a blank can never be answered correctly).
  std::optional<std::size_t> gold;
  std::size_t instance = 0;
  std::size_t blank = 0;
};

/// Every blank of every instance under `strategy`, in dataset order.
std::vector<Example> make_examples(const Dataset& data, const Vocabulary& vocab,
                                   BlankStrategy strategy);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Called after each epoch with the current parameters.
using EpochCallback = std::function<void(const EpochLog&, const ModelParams&)>;

/// Mini-batch Adam on per-blank cross-entropy. Batches are drawn from a
/// seeded shuffle and gradients are reduced in example order, so runs with
/// equal inputs are bit-identical. `config.model.dims` vocabulary sizes must
/// already match `vocab`.
TrainResult train(const Dataset& data, const Vocabulary& vocab,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean cross-entropy and its gradient over a batch of examples.
struct BatchGradient {
  double loss = 0.0;
  std::size_t correct = 0;
  std::map<std::string, Tensor> grads;
};
BatchGradient batch_gradient(const ModelParams& params, const ModelConfig& config,
                             std::span<const Example* const> batch);

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

/// A trained model together with the vocabulary it was trained on.
struct TrainedModel {
  TrainConfig config;
  Vocabulary vocab;
  ModelParams params;
};

/// Per-blank accuracy; every blank counts once.
EvalResult evaluate(const Dataset& data, const TrainedModel& model);

/// Per-blank accuracy of the summed member probabilities. Members must share
/// a blank vocabulary.
EvalResult evaluate_ensemble(const Dataset& data,
                             std::span<const TrainedModel> members);

/// Finite-difference check of every parameter of the configured model on
/// one random blank: random fragments (1 to 4 tokens each), features,
/// attribute scores and gold word, parameters from init_model_params(seed).
GradCheckReport model_grad_check(const ModelConfig& config, std::uint64_t seed,
                                 double epsilon = 3e-4);

}  // namespace vfib

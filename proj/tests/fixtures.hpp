// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

// Small synthetic tasks at toy dims, shared by the training tests and the
// acceptance runner.

#pragma once

#include <cstdint>

#include "vfib/synth.hpp"
#include "vfib/text.hpp"
#include "vfib/train.hpp"

namespace vfib::fixtures {

inline SynthSpec toy_spec(SynthRule rule) {
  const Dims d = Dims::preset("toy");
  SynthSpec s;
  s.rule = rule;
  s.regions = d.m;
  s.channels = d.c_raw;
  s.shot_dim = d.z;
  s.shots = d.shots;
  return s;
}

struct Task {
  SynthDataset data;
  Dataset train;
  Dataset test;
  Vocabulary vocab;
};

inline Task make_task(const SynthSpec& spec, std::uint64_t seed) {
  Task t;
  t.data = generate_synthetic(spec, seed);
  t.train = to_dataset(t.data, t.data.train, spec.shots);
  t.test = to_dataset(t.data, t.data.test, spec.shots);
  t.vocab = Vocabulary::build(t.data.train);
  return t;
}

inline TrainConfig toy_train_config(const Vocabulary& vocab, std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.model.dims = Dims::preset("toy");
  c.model.dims.vocab = vocab.size();
  c.model.dims.blanks = vocab.blank_size();
  c.model.dims.attributes = 0;
  return c;
}

inline EvalResult train_and_evaluate(const Task& task, const TrainConfig& config) {
  TrainedModel model{config, task.vocab, train(task.train, task.vocab, config).params};
  return evaluate(task.test, model);
}

}  // namespace vfib::fixtures

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vfib/attention.hpp"
#include "vfib/text.hpp"
#include "vfib/train.hpp"

namespace vfib {

/// Which signal determines a blank's answer.
///
///  left-context    answer = table[token before the blank]
///  right-context   answer = table[token after the blank]
///  both-contexts   answer = (left key + right key) mod |answers|
///  spatial-region  answer = class of the region carrying the signature
///  temporal-shot   answer = class of the shot carrying the signature
///                  (with cues: the signature named by the cue word)
///  mixed           answer = (left key + signature region class) mod |answers|
enum class SynthRule {
  kLeftContext,
  kRightContext,
  kBothContexts,
  kSpatialRegion,
  kTemporalShot,
  kMixed,
};

std::string to_string(SynthRule rule);
SynthRule parse_synth_rule(std::string_view s);

struct SynthSpec {
  SynthRule rule = SynthRule::kLeftContext;
  std::size_t filler_words = 40;
  std::size_t answers = 10;
  /// Distinct context keys for the context rules; 0 means `answers`.
  std::size_t keys = 0;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  std::size_t min_blanks = 1;
  std::size_t max_blanks = 1;
  double noise = 0.0;
  std::size_t train_instances = 500;
  std::size_t test_instances = 200;

  std::size_t frames = 3;
  std::size_t regions = 16;
  std::size_t channels = 20;
  std::size_t shot_dim = 24;
  /// Shots per video before padding/sampling to `shots`.
  std::size_t min_shots = 6;
  std::size_t max_shots = 14;
  std::size_t shots = 10;
  std::size_t attributes = 0;
  double feature_noise = 0.3;
  /// temporal-shot only: with cues > 1, that many shots carry distinct
  /// signatures and a cue word before the blank names the one whose class
  /// is the answer. The other marked shots hold different classes.
  std::size_t cues = 1;

  /// Throws SpecError for an inconsistent specification.
  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
  static SynthSpec from_json(const nlohmann::json& j, SynthSpec base);
};

struct SynthDataset {
  std::vector<ClozeInstance> train;
  std::vector<ClozeInstance> test;
  /// Raw (unpadded) features keyed by id.
  std::map<std::string, FeatureBundle> features;
  /// Rule, answer words and the tables that generated every answer.
  nlohmann::json ground_truth;
};

SynthDataset generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

/// Writes train.jsonl, test.jsonl, features/<id>.*.vftb and ground_truth.json.
void write_synthetic(const SynthDataset& data, const std::filesystem::path& dir);

/// In-memory Dataset for one split, with shots padded/sampled to `shots`.
Dataset to_dataset(const SynthDataset& data, const std::vector<ClozeInstance>& split,
                   std::size_t shots);

}  // namespace vfib

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vfib/tensor.hpp"

namespace vfib {

/// Token standing in for a missing word.
inline constexpr std::string_view kBlankToken = "<b>";
inline constexpr std::size_t kUnkId = 0;
inline constexpr std::string_view kUnkToken = "<unk>";

/// A sentence with one or more blanks and the gold answer for each.
struct ClozeInstance {
  std::vector<std::string> tokens;
  std::vector<std::size_t> blank_positions;
  std::vector<std::string> answers;
  std::string features;
  /// Optional attribute confidence scores in [0, 1].
  std::vector<double> attributes;

  std::size_t blank_count() const { return blank_positions.size(); }

  /// Throws ConfigError unless every blank position indexes a sentinel,
  /// positions are strictly increasing, and there is one answer per blank.
  void validate() const;
};

/// Lowercases and strips punctuation from both ends. The blank sentinel and
/// "_" (an alternate blank marker) are returned unchanged.
std::string normalize_token(std::string_view token);

/// Whitespace tokenization followed by normalize_token. Tokens that become
/// empty are dropped; "_" is mapped to the blank sentinel.
std::vector<std::string> tokenize(std::string_view sentence);

/// Builds an instance from raw text with blanks marked "<b>" or "_".
ClozeInstance make_instance(std::string_view sentence,
                            std::vector<std::string> answers,
                            std::string features = {});

/// Tokens on either side of one blank. `right` is in reversed sentence order.
struct TokenFragments {
  std::vector<std::string> left;
  std::vector<std::string> right;
};

/// Token ids on either side of one blank. `right` is in reversed order.
struct FragmentPair {
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;

  friend bool operator==(const FragmentPair&, const FragmentPair&) = default;
};

enum class BlankStrategy { kSubdivision, kMasking };

std::string to_string(BlankStrategy s);
BlankStrategy parse_blank_strategy(std::string_view s);

/// Full dictionary V (id 0 is UNK) and the blank vocabulary, an ordered
/// subset of V holding every word observed as an answer.
class Vocabulary {
 public:
  /// V in first-appearance order, with each answer placed where its blank
  /// occurs. The blank vocabulary is in first-appearance order of answers.
  /// Throws ConfigError for an empty corpus or one without blanks.
  static Vocabulary build(std::span<const ClozeInstance> corpus);

  std::size_t size() const { return tokens_.size(); }
  std::size_t blank_size() const { return blank_ids_.size(); }

  /// Id of `token`, or UNK.
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::size_t>& blank_ids() const { return blank_ids_; }

  /// Position of `token` within the blank vocabulary, if it is a candidate.
  std::optional<std::size_t> blank_index(std::string_view token) const;
  const std::string& blank_token(std::size_t index) const {
    return tokens_.at(blank_ids_.at(index));
  }

  FragmentPair encode(const TokenFragments& fragments) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::size_t add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> blank_ids_;
  std::unordered_map<std::size_t, std::size_t> blank_pos_;
};

/// Single-blank fragments. Throws ConfigError if the instance has more than
/// one blank.
TokenFragments extract_fragments_single(const ClozeInstance& instance);

/// Fragments bounded by the neighbouring blanks (or the sentence ends).
TokenFragments extract_fragments_subdivision(const ClozeInstance& instance,
                                             std::size_t target);

/// Fragments after deleting every non-target blank.
TokenFragments extract_fragments_masking(const ClozeInstance& instance,
                                         std::size_t target);

TokenFragments extract_fragments(const ClozeInstance& instance,
                                 std::size_t target, BlankStrategy strategy);

/// One-hot vectors of length |V|; ids outside V map to UNK.
std::vector<Tensor> ids_to_onehot_sequence(std::span<const std::size_t> ids,
                                           const Vocabulary& vocab);

// Dataset manifest: one JSON object per line with fields tokens, blank_positions,
// answers, features and optionally attributes.

nlohmann::json instance_to_json(const ClozeInstance& instance);
ClozeInstance instance_from_json(const nlohmann::json& j);
std::vector<ClozeInstance> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    std::span<const ClozeInstance> instances);

}  // namespace vfib

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "vfib/error.hpp"

namespace vfib {

namespace {

bool is_blank(std::string_view token) { return token == kBlankToken; }

std::vector<std::string> reversed(std::vector<std::string> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

void check_target(const ClozeInstance& instance, std::size_t target) {
  if (target >= instance.blank_count()) {
    throw IndexError("blank index " + std::to_string(target) +
                     " out of range for " +
                     std::to_string(instance.blank_count()) + " blanks");
  }
}

}  // namespace

void ClozeInstance::validate() const {
  if (answers.size() != blank_positions.size()) {
    throw ConfigError("instance has " + std::to_string(blank_positions.size()) +
                      " blanks but " + std::to_string(answers.size()) +
                      " answers");
  }
  for (std::size_t i = 0; i < blank_positions.size(); ++i) {
    const std::size_t pos = blank_positions[i];
    if (pos >= tokens.size() || !is_blank(tokens[pos])) {
      throw ConfigError("blank position " + std::to_string(pos) +
                        " does not index a blank token");
    }
    if (i > 0 && pos <= blank_positions[i - 1]) {
      throw ConfigError("blank positions must be strictly increasing");
    }
  }
  const auto sentinels = std::count_if(tokens.begin(), tokens.end(),
                                       [](const auto& t) { return is_blank(t); });
  if (static_cast<std::size_t>(sentinels) != blank_positions.size()) {
    throw ConfigError("sentence has blank tokens not listed in blank_positions");
  }
}

std::string normalize_token(std::string_view token) {
  if (token == kBlankToken || token == "_") return std::string(token);
  std::size_t begin = 0;
  std::size_t end = token.size();
  auto punct = [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  };
  while (begin < end && punct(token[begin])) ++begin;
  while (end > begin && punct(token[end - 1])) --end;
  std::string out(token.substr(begin, end - begin));
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view sentence) {
  std::vector<std::string> out;
  std::istringstream in{std::string(sentence)};
  std::string raw;
  while (in >> raw) {
    std::string t = normalize_token(raw);
    if (t == "_") t = std::string(kBlankToken);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

ClozeInstance make_instance(std::string_view sentence,
                            std::vector<std::string> answers,
                            std::string features) {
  ClozeInstance inst;
  inst.tokens = tokenize(sentence);
  for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
    if (is_blank(inst.tokens[i])) inst.blank_positions.push_back(i);
  }
  for (auto& a : answers) a = normalize_token(a);
  inst.answers = std::move(answers);
  inst.features = std::move(features);
  inst.validate();
  return inst;
}

std::string to_string(BlankStrategy s) {
  return s == BlankStrategy::kMasking ? "masking" : "subdivision";
}

BlankStrategy parse_blank_strategy(std::string_view s) {
  if (s == "masking") return BlankStrategy::kMasking;
  if (s == "subdivision") return BlankStrategy::kSubdivision;
  throw ConfigError("unknown multi-blank strategy '" + std::string(s) +
                    "' (expected subdivision or masking)");
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

Vocabulary Vocabulary::build(std::span<const ClozeInstance> corpus) {
  if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
  Vocabulary v;
  v.add(std::string(kUnkToken));
  for (const ClozeInstance& inst : corpus) {
    inst.validate();
    std::size_t next_blank = 0;
    for (const std::string& tok : inst.tokens) {
      if (!is_blank(tok)) {
        v.add(tok);
        continue;
      }
      const std::size_t id = v.add(inst.answers[next_blank++]);
      if (!v.blank_pos_.contains(id)) {
        v.blank_pos_.emplace(id, v.blank_ids_.size());
        v.blank_ids_.push_back(id);
      }
    }
  }
  if (v.blank_ids_.empty()) {
    throw ConfigError("training corpus contains no blanks");
  }
  return v;
}

std::size_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

std::optional<std::size_t> Vocabulary::blank_index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  auto b = blank_pos_.find(it->second);
  if (b == blank_pos_.end()) return std::nullopt;
  return b->second;
}

FragmentPair Vocabulary::encode(const TokenFragments& fragments) const {
  FragmentPair pair;
  pair.left.reserve(fragments.left.size());
  pair.right.reserve(fragments.right.size());
  for (const auto& t : fragments.left) pair.left.push_back(id(t));
  for (const auto& t : fragments.right) pair.right.push_back(id(t));
  return pair;
}

nlohmann::json Vocabulary::to_json() const {
  return {{"tokens", tokens_}, {"blank_ids", blank_ids_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  try {
    for (const auto& t : j.at("tokens")) v.add(t.get<std::string>());
    for (const auto& b : j.at("blank_ids")) {
      const auto id = b.get<std::size_t>();
      if (id >= v.size() || v.blank_pos_.contains(id)) {
        throw ConfigError("invalid blank id " + std::to_string(id));
      }
      v.blank_pos_.emplace(id, v.blank_ids_.size());
      v.blank_ids_.push_back(id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed vocabulary: ") + e.what());
  }
  if (v.size() == 0 || v.token(kUnkId) != kUnkToken) {
    throw ConfigError("vocabulary must start with the UNK token");
  }
  return v;
}

TokenFragments extract_fragments_single(const ClozeInstance& instance) {
  if (instance.blank_count() != 1) {
    throw ConfigError("extract_fragments_single needs exactly one blank, got " +
                      std::to_string(instance.blank_count()) +
                      "; use the subdivision or masking extraction");
  }
  const std::size_t pos = instance.blank_positions[0];
  TokenFragments f;
  f.left.assign(instance.tokens.begin(),
                instance.tokens.begin() + static_cast<std::ptrdiff_t>(pos));
  f.right.assign(instance.tokens.rbegin(),
                 instance.tokens.rend() - static_cast<std::ptrdiff_t>(pos) - 1);
  return f;
}

TokenFragments extract_fragments_subdivision(const ClozeInstance& instance,
                                             std::size_t target) {
  check_target(instance, target);
  const auto& pos = instance.blank_positions;
  const std::size_t begin = target == 0 ? 0 : pos[target - 1] + 1;
  const std::size_t end =
      target + 1 < pos.size() ? pos[target + 1] : instance.tokens.size();
  TokenFragments f;
  f.left.assign(instance.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                instance.tokens.begin() + static_cast<std::ptrdiff_t>(pos[target]));
  f.right = reversed({instance.tokens.begin() +
                          static_cast<std::ptrdiff_t>(pos[target] + 1),
                      instance.tokens.begin() + static_cast<std::ptrdiff_t>(end)});
  return f;
}

TokenFragments extract_fragments_masking(const ClozeInstance& instance,
                                         std::size_t target) {
  check_target(instance, target);
  const std::size_t at = instance.blank_positions[target];
  TokenFragments f;
  for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
    if (i == at || is_blank(instance.tokens[i])) continue;
    (i < at ? f.left : f.right).push_back(instance.tokens[i]);
  }
  std::reverse(f.right.begin(), f.right.end());
  return f;
}

TokenFragments extract_fragments(const ClozeInstance& instance,
                                 std::size_t target, BlankStrategy strategy) {
  return strategy == BlankStrategy::kMasking
             ? extract_fragments_masking(instance, target)
             : extract_fragments_subdivision(instance, target);
}

std::vector<Tensor> ids_to_onehot_sequence(std::span<const std::size_t> ids,
                                           const Vocabulary& vocab) {
  std::vector<Tensor> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    Tensor t({vocab.size()});
    t[id < vocab.size() ? id : kUnkId] = 1.0;
    out.push_back(std::move(t));
  }
  return out;
}

nlohmann::json instance_to_json(const ClozeInstance& instance) {
  nlohmann::json j = {{"tokens", instance.tokens},
                      {"blank_positions", instance.blank_positions},
                      {"answers", instance.answers},
                      {"features", instance.features}};
  if (!instance.attributes.empty()) j["attributes"] = instance.attributes;
  return j;
}

ClozeInstance instance_from_json(const nlohmann::json& j) {
  ClozeInstance inst;
  try {
    for (const auto& t : j.at("tokens")) {
      inst.tokens.push_back(normalize_token(t.get<std::string>()));
    }
    inst.blank_positions = j.at("blank_positions").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("answers")) {
      inst.answers.push_back(normalize_token(a.get<std::string>()));
    }
    inst.features = j.at("features").get<std::string>();
    if (j.contains("attributes")) {
      inst.attributes = j.at("attributes").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest record: ") + e.what());
  }
  inst.validate();
  return inst;
}

std::vector<ClozeInstance> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ClozeInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
    try {
      out.push_back(instance_from_json(j));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const ClozeInstance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const auto& inst : instances) out << instance_to_json(inst).dump() << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace vfib

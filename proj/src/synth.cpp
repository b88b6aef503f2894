// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/synth.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <set>
#include <span>

#include "vfib/error.hpp"
#include "vfib/io.hpp"
#include "vfib/rng.hpp"

namespace vfib {

namespace {

struct RuleName {
  SynthRule rule;
  const char* name;
};

constexpr RuleName kRuleNames[] = {
    {SynthRule::kLeftContext, "left-context"},
    {SynthRule::kRightContext, "right-context"},
    {SynthRule::kBothContexts, "both-contexts"},
    {SynthRule::kSpatialRegion, "spatial-region"},
    {SynthRule::kTemporalShot, "temporal-shot"},
    {SynthRule::kMixed, "mixed"},
};

bool cued(const SynthSpec& s) {
  return s.rule == SynthRule::kTemporalShot && s.cues > 1;
}

bool uses_left_key(const SynthSpec& s) {
  return s.rule == SynthRule::kLeftContext || s.rule == SynthRule::kBothContexts ||
         s.rule == SynthRule::kMixed || cued(s);
}

bool uses_right_key(const SynthSpec& s) {
  return s.rule == SynthRule::kRightContext || s.rule == SynthRule::kBothContexts;
}

// Tokens occupied by one blank and its keys.
std::size_t unit_length(const SynthSpec& s) {
  return 1 + (uses_left_key(s) ? 1 : 0) + (uses_right_key(s) ? 1 : 0);
}

std::size_t key_count(const SynthSpec& s) {
  return s.keys == 0 ? s.answers : s.keys;
}

std::string word(char prefix, std::size_t i) {
  return std::string(1, prefix) + std::to_string(i);
}

float f32(double x) { return static_cast<float>(x); }

// Per-video visual state shared by all blanks of an instance.
struct Scene {
  std::size_t answer_class = 0;
  std::optional<std::size_t> marked_region;
  std::optional<std::size_t> marked_shot;
  // Cued temporal scenes: which signature marks the answer shot, and the
  // (shot, class, signature) of every decoy.
  std::size_t cue = 0;
  std::vector<std::array<std::size_t, 3>> decoys;
};

class Generator {
 public:
  Generator(const SynthSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
    const std::size_t a = spec_.answers;
    const std::size_t keys = key_count(spec_);
    // Surjective key -> answer table: the first |answers| keys hit every
    // answer once, the rest map uniformly at random.
    std::vector<std::size_t> perm(a);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng_.shuffle(perm);
    table_ = perm;
    for (std::size_t k = a; k < keys; ++k) table_.push_back(rng_.index(a));
    for (std::size_t c = 0; c < a; ++c) {
      spatial_protos_.push_back(random_vector(spec_.channels, 0.0, 1.0));
      shot_protos_.push_back(random_vector(spec_.shot_dim, 0.0, 1.0));
    }
    spatial_signature_ = signature(spec_.channels);
    shot_signatures_.push_back(signature(spec_.shot_dim));
    for (std::size_t c = 1; c < spec_.cues; ++c) {
      shot_signatures_.push_back(signature(spec_.shot_dim));
    }
  }

  SynthDataset run() {
    SynthDataset out;
    nlohmann::json records = nlohmann::json::array();
    for (std::size_t i = 0; i < spec_.train_instances; ++i) {
      // The leading instances cycle through every answer so the training
      // split always exhibits the full answer set.
      std::optional<std::size_t> forced;
      if (i < spec_.answers) forced = i;
      out.train.push_back(instance("train-" + pad(i), forced, out, records));
    }
    for (std::size_t i = 0; i < spec_.test_instances; ++i) {
      out.test.push_back(instance("test-" + pad(i), std::nullopt, out, records));
    }
    out.ground_truth = report(records);
    return out;
  }

 private:
  static std::string pad(std::size_t i) {
    std::string s = std::to_string(i);
    return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
  }

  std::vector<double> random_vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng_.uniform(lo, hi);
    return v;
  }

  // Strong bump on a random half of the channels.
  std::vector<double> signature(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng_.shuffle(idx);
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < std::max<std::size_t>(1, n / 2); ++i) s[idx[i]] = 1.5;
    return s;
  }

  std::size_t range(std::size_t lo, std::size_t hi) {
    return lo + rng_.index(hi - lo + 1);
  }

  std::size_t key_for_answer(std::size_t answer) const {
    for (std::size_t k = 0; k < table_.size(); ++k) {
      if (table_[k] == answer) return k;
    }
    return 0;
  }

  void fill_block(std::span<double> out, const std::vector<double>& proto,
                  const std::vector<double>* sig) {
    for (std::size_t c = 0; c < out.size(); ++c) {
      double x = proto[c] + spec_.feature_noise * rng_.uniform(-1.0, 1.0);
      if (sig) x += (*sig)[c];
      out[c] = f32(x);
    }
  }

  FeatureBundle features(const Scene& scene, std::size_t shot_count) {
    FeatureBundle b;
    b.spatial = Tensor({spec_.frames, spec_.regions, spec_.channels});
    std::vector<std::size_t> region_class(spec_.regions);
    for (auto& c : region_class) c = rng_.index(spec_.answers);
    if (scene.marked_region) region_class[*scene.marked_region] = scene.answer_class;
    for (std::size_t f = 0; f < spec_.frames; ++f) {
      for (std::size_t r = 0; r < spec_.regions; ++r) {
        const bool marked = scene.marked_region == r;
        std::span<double> block(b.spatial.data().data() +
                                    (f * spec_.regions + r) * spec_.channels,
                                spec_.channels);
        fill_block(block, spatial_protos_[region_class[r]],
                   marked ? &spatial_signature_ : nullptr);
      }
    }
    b.shots = Tensor({shot_count, spec_.shot_dim});
    for (std::size_t s = 0; s < shot_count; ++s) {
      std::size_t cls = rng_.index(spec_.answers);
      const std::vector<double>* sig = nullptr;
      if (scene.marked_shot == s) {
        cls = scene.answer_class;
        sig = &shot_signatures_[scene.cue];
      }
      for (const auto& [shot, decoy_class, decoy_sig] : scene.decoys) {
        if (shot == s) {
          cls = decoy_class;
          sig = &shot_signatures_[decoy_sig];
        }
      }
      std::span<double> block(b.shots.data().data() + s * spec_.shot_dim,
                              spec_.shot_dim);
      fill_block(block, shot_protos_[cls], sig);
    }
    return b;
  }

  // Indices of raw shots that survive padding/sampling to spec_.shots.
  std::vector<std::size_t> kept_shots(std::size_t shot_count) const {
    Tensor idx({shot_count, 1});
    for (std::size_t i = 0; i < shot_count; ++i) idx[i] = static_cast<double>(i);
    const Tensor kept = select_shots(idx, spec_.shots);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(shot_count, spec_.shots); ++i) {
      out.push_back(static_cast<std::size_t>(kept[i]));
    }
    return out;
  }

  ClozeInstance instance(const std::string& id, std::optional<std::size_t> forced,
                         SynthDataset& out, nlohmann::json& records) {
    const SynthRule rule = spec_.rule;
    const std::size_t a = spec_.answers;
    const std::size_t length = range(spec_.min_length, spec_.max_length);
    const std::size_t blanks = range(spec_.min_blanks, spec_.max_blanks);

    Scene scene;
    const std::size_t shot_count = range(spec_.min_shots, spec_.max_shots);
    const bool visual = rule == SynthRule::kSpatialRegion ||
                        rule == SynthRule::kTemporalShot || rule == SynthRule::kMixed;
    if (visual) {
      scene.answer_class = rng_.index(a);
      if (rule == SynthRule::kTemporalShot) {
        auto kept = kept_shots(shot_count);
        rng_.shuffle(kept);
        scene.marked_shot = kept[0];
        if (cued(spec_)) {
          scene.cue = rng_.index(spec_.cues);
          for (std::size_t c = 0, k = 1; c < spec_.cues; ++c) {
            if (c != scene.cue) scene.decoys.push_back({kept[k++], 0, c});
          }
        }
      } else {
        scene.marked_region = rng_.index(spec_.regions);
      }
    }

    // Lay out `blanks` units in order, with filler words spread randomly
    // over the blanks + 1 gaps.
    std::vector<std::size_t> gap(blanks + 1, 0);
    for (std::size_t i = 0; i < length - blanks * unit_length(spec_); ++i) {
      ++gap[rng_.index(blanks + 1)];
    }
    ClozeInstance inst;
    inst.features = id;
    nlohmann::json blank_records = nlohmann::json::array();
    auto filler = [&] { inst.tokens.push_back(word('f', rng_.index(spec_.filler_words))); };
    for (std::size_t b = 0; b < blanks; ++b) {
      for (std::size_t i = 0; i < gap[b]; ++i) filler();
      std::optional<std::size_t> left;
      std::optional<std::size_t> right;
      std::size_t answer = 0;
      const std::optional<std::size_t> want = b == 0 ? forced : std::nullopt;
      switch (rule) {
        case SynthRule::kLeftContext:
          left = want ? key_for_answer(*want) : rng_.index(key_count(spec_));
          answer = table_[*left];
          break;
        case SynthRule::kRightContext:
          right = want ? key_for_answer(*want) : rng_.index(key_count(spec_));
          answer = table_[*right];
          break;
        case SynthRule::kBothContexts:
          left = rng_.index(a);
          right = want ? (*want + a - *left) % a : rng_.index(a);
          answer = (*left + *right) % a;
          break;
        case SynthRule::kSpatialRegion:
        case SynthRule::kTemporalShot:
          if (want && b == 0) scene.answer_class = *want;
          answer = scene.answer_class;
          if (cued(spec_)) left = scene.cue;
          break;
        case SynthRule::kMixed:
          left = want ? (*want + a - scene.answer_class) % a : rng_.index(a);
          answer = (*left + scene.answer_class) % a;
          break;
      }
      bool noisy = false;
      if (!want && spec_.noise > 0.0 && rng_.bernoulli(spec_.noise)) {
        answer = rng_.index(a);
        noisy = true;
      }
      if (left) inst.tokens.push_back(word('l', *left));
      inst.blank_positions.push_back(inst.tokens.size());
      inst.tokens.emplace_back(kBlankToken);
      if (right) inst.tokens.push_back(word('r', *right));
      inst.answers.push_back(word('w', answer));

      nlohmann::json br = {{"answer", inst.answers.back()}, {"noisy", noisy}};
      if (left) br["left_key"] = word('l', *left);
      if (right) br["right_key"] = word('r', *right);
      blank_records.push_back(br);
    }
    for (std::size_t i = 0; i < gap[blanks]; ++i) filler();

    if (spec_.attributes > 0) {
      inst.attributes = random_vector(spec_.attributes, 0.0, 1.0);
      for (double& x : inst.attributes) x = f32(x);
    }
    if (!scene.decoys.empty()) {
      // Decoys take distinct classes other than the answer.
      std::vector<std::size_t> classes;
      for (std::size_t c = 0; c < a; ++c) {
        if (c != scene.answer_class) classes.push_back(c);
      }
      rng_.shuffle(classes);
      for (std::size_t d = 0; d < scene.decoys.size(); ++d) scene.decoys[d][1] = classes[d];
    }
    out.features.emplace(id, features(scene, shot_count));

    nlohmann::json rec = {{"id", id}, {"blanks", blank_records}};
    if (visual) rec["class"] = word('w', scene.answer_class);
    if (scene.marked_region) rec["region"] = *scene.marked_region;
    if (scene.marked_shot) rec["shot"] = *scene.marked_shot;
    records.push_back(rec);
    return inst;
  }

  nlohmann::json report(nlohmann::json records) const {
    nlohmann::json answers = nlohmann::json::array();
    for (std::size_t i = 0; i < spec_.answers; ++i) answers.push_back(word('w', i));
    nlohmann::json j = {{"rule", to_string(spec_.rule)},
                        {"spec", spec_.to_json()},
                        {"answers", answers},
                        {"instances", std::move(records)}};
    if (spec_.rule == SynthRule::kLeftContext || spec_.rule == SynthRule::kRightContext) {
      const char prefix = spec_.rule == SynthRule::kLeftContext ? 'l' : 'r';
      nlohmann::json table = nlohmann::json::object();
      for (std::size_t k = 0; k < table_.size(); ++k) {
        table[word(prefix, k)] = word('w', table_[k]);
      }
      j["table"] = table;
    }
    return j;
  }

  SynthSpec spec_;
  Rng rng_;
  std::vector<std::size_t> table_;
  std::vector<std::vector<double>> spatial_protos_;
  std::vector<std::vector<double>> shot_protos_;
  std::vector<double> spatial_signature_;
  std::vector<std::vector<double>> shot_signatures_;
};

}  // namespace

std::string to_string(SynthRule rule) {
  for (const auto& [r, name] : kRuleNames) {
    if (r == rule) return name;
  }
  return "unknown";
}

SynthRule parse_synth_rule(std::string_view s) {
  for (const auto& [r, name] : kRuleNames) {
    if (s == name) return r;
  }
  throw SpecError("unknown synthetic rule '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  if (answers < 2) throw SpecError("answer set needs at least 2 words");
  if (filler_words == 0) throw SpecError("filler vocabulary must be non-empty");
  if (min_length > max_length || min_blanks == 0 || min_blanks > max_blanks) {
    throw SpecError("length and blank ranges must be non-empty");
  }
  if (min_length < max_blanks * unit_length(*this)) {
    throw SpecError("min_length " + std::to_string(min_length) + " cannot hold " +
                    std::to_string(max_blanks) + " blanks with their context keys");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) throw SpecError("noise must lie in [0, 1]");
  if (train_instances < answers) {
    throw SpecError("train split must have at least one instance per answer");
  }
  const std::size_t k = keys == 0 ? answers : keys;
  if ((rule == SynthRule::kLeftContext || rule == SynthRule::kRightContext) &&
      k < answers) {
    throw SpecError("answer set of " + std::to_string(answers) +
                    " exceeds the rule's range of " + std::to_string(k) + " keys");
  }
  if ((rule == SynthRule::kBothContexts || rule == SynthRule::kMixed) && k != answers) {
    throw SpecError("rule '" + to_string(rule) + "' needs keys equal to answers");
  }
  if (frames == 0 || regions == 0 || channels == 0 || shot_dim == 0 || shots == 0) {
    throw SpecError("feature dimensions must be positive");
  }
  if (min_shots == 0 || min_shots > max_shots) {
    throw SpecError("shot count range must be non-empty and positive");
  }
  if (!(feature_noise >= 0.0)) throw SpecError("feature_noise must be non-negative");
  if (cues == 0) throw SpecError("cues must be positive");
  if (cues > std::min(min_shots, shots)) {
    throw SpecError("cues " + std::to_string(cues) + " exceed the guaranteed shot count");
  }
  if (cues > answers) throw SpecError("cues cannot exceed answers");
}

nlohmann::json SynthSpec::to_json() const {
  return {{"rule", to_string(rule)},
          {"filler_words", filler_words},
          {"answers", answers},
          {"keys", keys},
          {"length", {min_length, max_length}},
          {"blanks", {min_blanks, max_blanks}},
          {"noise", noise},
          {"train_instances", train_instances},
          {"test_instances", test_instances},
          {"frames", frames},
          {"regions", regions},
          {"channels", channels},
          {"shot_dim", shot_dim},
          {"shot_range", {min_shots, max_shots}},
          {"shots", shots},
          {"attributes", attributes},
          {"feature_noise", feature_noise},
          {"cues", cues}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) { return from_json(j, SynthSpec{}); }

SynthSpec SynthSpec::from_json(const nlohmann::json& j, SynthSpec base) {
  if (!j.is_object()) throw SpecError("synthetic spec must be a JSON object");
  auto pair = [](const nlohmann::json& v, std::size_t& lo, std::size_t& hi) {
    const auto p = v.get<std::vector<std::size_t>>();
    if (p.size() != 2) throw SpecError("range must have two entries");
    lo = p[0];
    hi = p[1];
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "rule") base.rule = parse_synth_rule(v.get<std::string>());
      else if (key == "filler_words") base.filler_words = v.get<std::size_t>();
      else if (key == "answers") base.answers = v.get<std::size_t>();
      else if (key == "keys") base.keys = v.get<std::size_t>();
      else if (key == "length") pair(v, base.min_length, base.max_length);
      else if (key == "blanks") pair(v, base.min_blanks, base.max_blanks);
      else if (key == "noise") base.noise = v.get<double>();
      else if (key == "train_instances") base.train_instances = v.get<std::size_t>();
      else if (key == "test_instances") base.test_instances = v.get<std::size_t>();
      else if (key == "frames") base.frames = v.get<std::size_t>();
      else if (key == "regions") base.regions = v.get<std::size_t>();
      else if (key == "channels") base.channels = v.get<std::size_t>();
      else if (key == "shot_dim") base.shot_dim = v.get<std::size_t>();
      else if (key == "shot_range") pair(v, base.min_shots, base.max_shots);
      else if (key == "shots") base.shots = v.get<std::size_t>();
      else if (key == "attributes") base.attributes = v.get<std::size_t>();
      else if (key == "feature_noise") base.feature_noise = v.get<double>();
      else if (key == "cues") base.cues = v.get<std::size_t>();
      else throw SpecError("unknown key '" + key + "' in synthetic spec");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed synthetic spec: ") + e.what());
  }
  base.validate();
  return base;
}

SynthDataset generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  SynthDataset out = Generator(spec, seed).run();
  out.ground_truth["seed"] = seed;
  return out;
}

void write_synthetic(const SynthDataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "features", ec);
  if (ec) throw IoError("cannot create " + (dir / "features").string() + ": " + ec.message());
  write_manifest(dir / "train.jsonl", data.train);
  write_manifest(dir / "test.jsonl", data.test);
  for (const auto& [id, bundle] : data.features) {
    save_feature_bundle(dir / "features", id, bundle);
  }
  write_text(dir / "ground_truth.json", data.ground_truth.dump(2) + "\n");
}

Dataset to_dataset(const SynthDataset& data, const std::vector<ClozeInstance>& split,
                   std::size_t shots) {
  Dataset out;
  out.instances = split;
  for (const ClozeInstance& inst : split) {
    const auto it = data.features.find(inst.features);
    if (it == data.features.end()) {
      throw IoError("no features generated for '" + inst.features + "'");
    }
    FeatureBundle b = it->second;
    b.shots = select_shots(b.shots, shots);
    out.features.emplace(inst.features, std::move(b));
  }
  return out;
}

}  // namespace vfib

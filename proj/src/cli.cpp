// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vfib/error.hpp"
#include "vfib/io.hpp"
#include "vfib/synth.hpp"
#include "vfib/train.hpp"

namespace vfib::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string epoch_dir(std::size_t epoch) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", epoch);
  return buf;
}

struct DataFlags {
  std::string data;
  std::string manifest;
  std::string features;
  std::string split;

  void add(CLI::App* cmd, const std::string& default_split) {
    split = default_split;
    cmd->add_option("--data", data, "Directory holding <split>.jsonl and features/");
    cmd->add_option("--manifest", manifest, "Manifest file (overrides --data)");
    cmd->add_option("--features", features, "Feature directory (overrides --data)");
    cmd->add_option("--split", split, "Manifest name inside --data")
        ->capture_default_str();
  }

  fs::path manifest_path() const {
    if (!manifest.empty()) return manifest;
    if (data.empty()) throw ConfigError("pass --data or --manifest");
    return fs::path(data) / (split + ".jsonl");
  }

  fs::path features_path() const {
    if (!features.empty()) return features;
    if (data.empty()) throw ConfigError("pass --data or --features");
    return fs::path(data) / "features";
  }

  Dataset load(std::size_t shots) const {
    return load_dataset(manifest_path(), features_path(), shots);
  }
};

// Flags shared by every command that builds or adjusts a model config.
struct ModelFlags {
  std::string config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string dims;
  std::string strategy;
  std::string baseline;
  std::string attributes;
  std::string spatial;
  std::string temporal;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON train config; flags override it");
    seed_opt = cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--dims", dims, "Dimension preset")
        ->check(CLI::IsMember({"toy", "desk", "full"}));
    cmd->add_option("--strategy", strategy, "Multi-blank fragment strategy")
        ->check(CLI::IsMember({"subdivision", "masking"}));
    cmd->add_option("--baseline", baseline, "Sentence encoder baseline")
        ->check(CLI::IsMember({"none", "left", "right", "bilstm"}));
    cmd->add_option("--attributes", attributes, "Attribute attention head")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--spatial", spatial, "Spatial attention mode")
        ->check(CLI::IsMember({"learned", "uniform", "off"}));
    cmd->add_option("--temporal", temporal, "Temporal attention mode")
        ->check(CLI::IsMember({"learned", "uniform", "off"}));
  }

  TrainConfig resolve(TrainConfig base = {}) const {
    if (!config.empty()) base = TrainConfig::from_json(parse_json_file(config), base);
    if (seed_opt && seed_opt->count() > 0) base.seed = seed;
    ModelConfig& m = base.model;
    if (!dims.empty()) {
      const Dims keep = m.dims;
      m.dims = Dims::preset(dims);
      if (m.dims.vocab == 0) m.dims.vocab = keep.vocab;
      if (m.dims.blanks == 0) m.dims.blanks = keep.blanks;
      if (m.dims.attributes == 0) m.dims.attributes = keep.attributes;
    }
    if (!strategy.empty()) base.strategy = parse_blank_strategy(strategy);
    if (!baseline.empty()) m.encoder = parse_encoder_kind(baseline);
    if (!attributes.empty()) m.attributes = attributes == "on";
    if (!spatial.empty()) m.spatial = parse_attention_mode(spatial);
    if (!temporal.empty()) m.temporal = parse_attention_mode(temporal);
    return base;
  }
};

// Sizes that only the data can determine.
void adapt_dims(TrainConfig& config, const Dataset& data, const Vocabulary& vocab,
                std::ostream& err) {
  Dims& d = config.model.dims;
  d.vocab = vocab.size();
  d.blanks = vocab.blank_size();
  if (!data.features.empty()) {
    const FeatureBundle& b = data.features.begin()->second;
    b.validate();
    if (d.m != b.regions() || d.c_raw != b.channels() || d.z != b.shots.cols()) {
      err << "note: feature sizes taken from data (m=" << b.regions()
          << ", c_raw=" << b.channels() << ", z=" << b.shots.cols() << ")\n";
    }
    d.m = b.regions();
    d.c_raw = b.channels();
    d.z = b.shots.cols();
  }
  if (config.model.attributes) {
    const std::size_t n = data.instances.front().attributes.size();
    for (const ClozeInstance& inst : data.instances) {
      if (inst.attributes.size() != n) {
        throw ConfigError("instances disagree on the number of attribute scores");
      }
    }
    if (n == 0) throw ConfigError("--attributes on but the data has no attribute scores");
    d.attributes = n;
  }
}

std::vector<TrainedModel> load_members(const std::string& checkpoint,
                                       const std::vector<std::string>& ensemble,
                                       const std::string& strategy) {
  std::vector<std::string> dirs = ensemble;
  if (!checkpoint.empty()) dirs.insert(dirs.begin(), checkpoint);
  if (dirs.empty()) throw ConfigError("pass --checkpoint or --ensemble");
  std::vector<TrainedModel> members;
  for (const std::string& dir : dirs) {
    members.push_back(load_checkpoint(dir));
    if (!strategy.empty()) members.back().config.strategy = parse_blank_strategy(strategy);
  }
  return members;
}

// ---------------------------------------------------------------------------

struct GensynthCommand {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  std::string dims;
  std::string rule;
  double noise = -1.0;
  std::size_t answers = 0;
  std::size_t train_instances = 0;
  std::size_t test_instances = 0;
  std::size_t attributes = 0;
  CLI::Option* attributes_opt = nullptr;
  CLI::Option* noise_opt = nullptr;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON synthetic spec; flags override it");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
    cmd->add_option("--dims", dims, "Match feature sizes to a dimension preset")
        ->check(CLI::IsMember({"toy", "desk", "full"}));
    cmd->add_option("--rule", rule, "Answer rule")
        ->check(CLI::IsMember({"left-context", "right-context", "both-contexts",
                               "spatial-region", "temporal-shot", "mixed"}));
    noise_opt = cmd->add_option("--noise", noise, "Answer noise rate");
    cmd->add_option("--answers", answers, "Answer-set size");
    cmd->add_option("--instances", train_instances, "Training instances");
    cmd->add_option("--test-instances", test_instances, "Test instances");
    attributes_opt = cmd->add_option("--attribute-count", attributes,
                                     "Attribute scores per instance");
  }

  int run(std::ostream& os) const {
    SynthSpec spec;
    if (!config.empty()) spec = SynthSpec::from_json(parse_json_file(config));
    if (!dims.empty()) {
      const Dims d = Dims::preset(dims);
      spec.regions = d.m;
      spec.channels = d.c_raw;
      spec.shot_dim = d.z;
      spec.shots = d.shots;
    }
    if (!rule.empty()) spec.rule = parse_synth_rule(rule);
    if (noise_opt->count() > 0) spec.noise = noise;
    if (answers > 0) spec.answers = answers;
    if (train_instances > 0) spec.train_instances = train_instances;
    if (test_instances > 0) spec.test_instances = test_instances;
    if (attributes_opt->count() > 0) spec.attributes = attributes;
    spec.validate();

    const SynthDataset data = generate_synthetic(spec, seed);
    write_synthetic(data, out);
    json effective = spec.to_json();
    effective["seed"] = seed;
    write_text(fs::path(out) / "spec.json", effective.dump(2) + "\n");
    os << json{{"out", out},
               {"rule", to_string(spec.rule)},
               {"answers", spec.answers},
               {"train", data.train.size()},
               {"test", data.test.size()}}
              .dump()
       << "\n";
    return 0;
  }
};

struct TrainCommand {
  ModelFlags model;
  DataFlags data;
  std::string out;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double lr = 0.0;
  double clip = -1.0;
  CLI::Option* clip_opt = nullptr;

  void add(CLI::App* cmd) {
    model.add(cmd);
    data.add(cmd, "train");
    cmd->add_option("--out", out, "Checkpoint directory")->required();
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size");
    cmd->add_option("--lr", lr, "Adam learning rate");
    clip_opt = cmd->add_option("--clip", clip, "Global gradient-norm clip (0 disables)");
  }

  int run(std::ostream& os, std::ostream& err) const {
    TrainConfig config = model.resolve();
    if (epochs > 0) config.epochs = epochs;
    if (batch_size > 0) config.batch_size = batch_size;
    if (lr > 0.0) config.adam.learning_rate = lr;
    if (clip_opt->count() > 0) config.clip_norm = clip;
    config.validate();

    const Dataset dataset = data.load(config.model.dims.shots);
    if (dataset.instances.empty()) throw ConfigError("training manifest is empty");
    const Vocabulary vocab = Vocabulary::build(dataset.instances);
    adapt_dims(config, dataset, vocab, err);
    config.model.validate();

    const fs::path dir = out;
    fs::create_directories(dir);
    std::string log;
    auto on_epoch = [&](const EpochLog& entry, const ModelParams& params) {
      save_checkpoint(dir / "epochs" / epoch_dir(entry.epoch), {config, vocab, params});
      log += entry.to_json().dump() + "\n";
      write_text(dir / "log.jsonl", log);
      err << "epoch " << entry.epoch << " loss " << entry.loss << " accuracy "
          << entry.accuracy << "\n";
    };
    const TrainResult result = train(dataset, vocab, config, on_epoch);
    save_checkpoint(dir, {config, vocab, result.params});

    const EpochLog& last = result.log.back();
    os << json{{"checkpoint", dir.string()},
               {"epochs", last.epoch},
               {"loss", last.loss},
               {"accuracy", last.accuracy},
               {"vocab", vocab.size()},
               {"blanks", vocab.blank_size()}}
              .dump()
       << "\n";
    return 0;
  }
};

struct EvalCommand {
  std::string checkpoint;
  std::vector<std::string> ensemble;
  std::string strategy;
  DataFlags data;

  void add(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory");
    cmd->add_option("--ensemble", ensemble, "Comma-separated checkpoint directories")
        ->delimiter(',');
    cmd->add_option("--strategy", strategy, "Override the multi-blank strategy")
        ->check(CLI::IsMember({"subdivision", "masking"}));
    data.add(cmd, "test");
  }

  int run(std::ostream& os) const {
    const auto members = load_members(checkpoint, ensemble, strategy);
    const Dataset dataset = data.load(members.front().config.model.dims.shots);
    const EvalResult r = evaluate_ensemble(dataset, members);
    os << json{{"accuracy", r.accuracy()},
               {"correct", r.correct},
               {"total", r.total},
               {"members", members.size()}}
              .dump()
       << "\n";
    return 0;
  }
};

struct PredictCommand {
  std::string checkpoint;
  std::vector<std::string> ensemble;
  std::string strategy;
  std::string sentence;
  std::string id;
  DataFlags data;

  void add(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory");
    cmd->add_option("--ensemble", ensemble, "Comma-separated checkpoint directories")
        ->delimiter(',');
    cmd->add_option("--strategy", strategy, "Override the multi-blank strategy")
        ->check(CLI::IsMember({"subdivision", "masking"}));
    cmd->add_option("--sentence", sentence,
                    "Sentence with blanks marked _ (instead of a manifest)");
    cmd->add_option("--id", id, "Feature id for --sentence; zero features if absent");
    data.add(cmd, "test");
  }

  Dataset sentence_dataset(const ModelConfig& config, std::ostream& err) const {
    std::size_t blanks = 0;
    for (const std::string& t : tokenize(sentence)) blanks += t == kBlankToken;
    if (blanks == 0) throw ConfigError("--sentence has no blank (mark it with _)");
    Dataset out;
    out.instances.push_back(
        make_instance(sentence, std::vector<std::string>(blanks), id.empty() ? "-" : id));
    if (!id.empty()) {
      out.features.emplace(id, load_feature_bundle(data.features_path(), id,
                                                   config.dims.shots));
    } else {
      err << "note: no --id given, using all-zero visual features\n";
      FeatureBundle zero;
      zero.spatial = Tensor({1, config.dims.m, config.dims.c_raw});
      zero.shots = Tensor({config.dims.shots, config.dims.z});
      out.features.emplace("-", std::move(zero));
    }
    return out;
  }

  int run(std::ostream& os, std::ostream& err) const {
    const auto members = load_members(checkpoint, ensemble, strategy);
    const ModelConfig& mc = members.front().config.model;
    const Dataset dataset =
        sentence.empty() ? data.load(mc.dims.shots) : sentence_dataset(mc, err);

    std::vector<std::vector<Example>> examples;
    for (const TrainedModel& m : members) {
      examples.push_back(make_examples(dataset, m.vocab, m.config.strategy));
    }
    const Vocabulary& vocab = members.front().vocab;
    json line;
    std::size_t current = dataset.instances.size();
    auto flush = [&] {
      if (!line.is_null()) os << line.dump() << "\n";
      line = nullptr;
    };
    for (std::size_t e = 0; e < examples.front().size(); ++e) {
      const Example& ex = examples.front()[e];
      if (ex.instance != current) {
        flush();
        current = ex.instance;
        line = {{"id", dataset.instances[current].features}, {"blanks", json::array()}};
      }
      std::vector<std::vector<double>> probs;
      PredictionRecord first;
      for (std::size_t m = 0; m < members.size(); ++m) {
        const Example& mex = examples[m][e];
        check_feature_dims(members[m].config.model, *mex.features);
        PredictionRecord r = predict(members[m].params, members[m].config.model,
                                     mex.pair, *mex.features, mex.attributes);
        probs.push_back(r.probabilities);
        if (m == 0) first = std::move(r);
      }
      const std::size_t answer = ensemble_predict(probs);
      double p = 0.0;
      for (const auto& pm : probs) p += pm[answer];
      p /= static_cast<double>(probs.size());
      json blank = {{"blank", ex.blank},
                    {"answer", vocab.blank_token(answer)},
                    {"probability", p},
                    {"p_sp", first.p_sp},
                    {"p_tp", first.p_tp}};
      const std::string& gold = dataset.instances[current].answers[ex.blank];
      if (!gold.empty()) blank["gold"] = gold;
      line["blanks"].push_back(blank);
    }
    flush();
    return 0;
  }
};

struct GradcheckCommand {
  ModelFlags model;
  double epsilon = 3e-4;
  double tolerance = 1e-4;

  void add(CLI::App* cmd) {
    model.add(cmd);
    cmd->add_option("--epsilon", epsilon, "Finite-difference step")
        ->capture_default_str();
    cmd->add_option("--tolerance", tolerance, "Pass threshold on relative error")
        ->capture_default_str();
  }

  int run(std::ostream& os) const {
    TrainConfig base;
    base.model.dims = Dims::preset("toy");
    base.model.attributes = true;
    const TrainConfig resolved = model.resolve(base);
    ModelConfig mc = resolved.model;
    // Presets other than toy leave the data-dependent sizes open.
    if (mc.dims.vocab == 0) mc.dims.vocab = 30;
    if (mc.dims.blanks == 0) mc.dims.blanks = 10;
    if (mc.attributes && mc.dims.attributes == 0) mc.dims.attributes = 5;
    const GradCheckReport report = model_grad_check(mc, resolved.seed, epsilon);
    const bool passed = report.passes(tolerance);
    json worst_entries = json::object();
    for (const auto& [symbol, e] : report.worst_entry) {
      worst_entries[symbol] = {{"index", e.index}, {"analytic", e.analytic},
                               {"numeric", e.numeric}};
    }
    os << json{{"max_relative_error", report.max_relative_error},
               {"worst_entry", worst_entries},
               {"worst", report.worst()},
               {"entries", report.entries_checked},
               {"epsilon", epsilon},
               {"tolerance", tolerance},
               {"passed", passed}}
              .dump()
       << "\n";
    return passed ? 0 : 1;
  }
};

struct ExportCommand {
  std::string checkpoint;
  DataFlags data;
  std::size_t index = 0;
  std::size_t blank = 0;
  std::string grid;
  std::size_t upsample = 1;
  std::string out;

  void add(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    data.add(cmd, "test");
    cmd->add_option("--index", index, "Instance index in the manifest")
        ->capture_default_str();
    cmd->add_option("--blank", blank, "Blank within the instance")->capture_default_str();
    cmd->add_option("--grid", grid, "Heatmap grid as RxC (default: square)");
    cmd->add_option("--upsample", upsample, "Nearest-neighbour upsampling factor")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output directory")->required();
  }

  std::pair<std::size_t, std::size_t> grid_shape(std::size_t m) const {
    if (grid.empty()) {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(m))));
      if (side * side == m) return {side, side};
      return {1, m};
    }
    const auto x = grid.find('x');
    if (x == std::string::npos) throw ConfigError("--grid must look like 14x14");
    try {
      return {std::stoul(grid.substr(0, x)), std::stoul(grid.substr(x + 1))};
    } catch (const std::exception&) {
      throw ConfigError("--grid must look like 14x14");
    }
  }

  int run(std::ostream& os) const {
    const TrainedModel model = load_checkpoint(checkpoint);
    const ModelConfig& mc = model.config.model;
    const Dataset dataset = data.load(mc.dims.shots);
    if (index >= dataset.instances.size()) {
      throw IndexError("--index " + std::to_string(index) + " outside a manifest of " +
                       std::to_string(dataset.instances.size()) + " instances");
    }
    Dataset one;
    one.instances.push_back(dataset.instances[index]);
    one.features = dataset.features;
    const auto examples = make_examples(one, model.vocab, model.config.strategy);
    if (blank >= examples.size()) {
      throw IndexError("--blank " + std::to_string(blank) + " outside an instance with " +
                       std::to_string(examples.size()) + " blanks");
    }
    const Example& ex = examples[blank];
    check_feature_dims(mc, *ex.features);
    PredictionRecord record =
        predict(model.params, mc, ex.pair, *ex.features, ex.attributes);
    record.answer_token = model.vocab.blank_token(record.answer);
    if (record.p_sp.empty()) throw ConfigError("model has no spatial attention to export");
    const auto [rows, cols] = grid_shape(record.p_sp.size());
    export_attention(record, rows, cols, out, upsample);
    write_text(fs::path(out) / "prediction.json", record.to_json().dump(2) + "\n");
    os << json{{"out", out},
               {"id", one.instances[0].features},
               {"blank", blank},
               {"answer", record.answer_token},
               {"grid", {rows, cols}}}
              .dump()
       << "\n";
    return 0;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Video fill-in-the-blank: synthetic data, training and inspection"};
  app.name("vfib");
  app.require_subcommand(1);

  GensynthCommand gensynth;
  TrainCommand train_cmd;
  EvalCommand eval;
  PredictCommand predict_cmd;
  GradcheckCommand gradcheck;
  ExportCommand export_cmd;
  CLI::App* c_gensynth = app.add_subcommand("gensynth", "Generate a synthetic dataset");
  CLI::App* c_train = app.add_subcommand("train", "Train a model and write checkpoints");
  CLI::App* c_eval = app.add_subcommand("eval", "Per-blank accuracy of a checkpoint");
  CLI::App* c_predict = app.add_subcommand("predict", "Answer every blank (JSON lines)");
  CLI::App* c_gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  CLI::App* c_export = app.add_subcommand("export-attn", "Write attention CSV and PGM");
  gensynth.add(c_gensynth);
  train_cmd.add(c_train);
  eval.add(c_eval);
  predict_cmd.add(c_predict);
  gradcheck.add(c_gradcheck);
  export_cmd.add(c_export);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (c_gensynth->parsed()) return gensynth.run(out);
    if (c_train->parsed()) return train_cmd.run(out, err);
    if (c_eval->parsed()) return eval.run(out);
    if (c_predict->parsed()) return predict_cmd.run(out, err);
    if (c_gradcheck->parsed()) return gradcheck.run(out);
    if (c_export->parsed()) return export_cmd.run(out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace vfib::cli

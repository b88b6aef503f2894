// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/encoder.hpp"

#include <array>

#include "vfib/error.hpp"

namespace vfib {

std::string to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kFull: return "none";
    case EncoderKind::kLeftOnly: return "left";
    case EncoderKind::kRightOnly: return "right";
    case EncoderKind::kBiLstm: return "bilstm";
  }
  return "none";
}

EncoderKind parse_encoder_kind(std::string_view s) {
  if (s == "none" || s == "full") return EncoderKind::kFull;
  if (s == "left") return EncoderKind::kLeftOnly;
  if (s == "right") return EncoderKind::kRightOnly;
  if (s == "bilstm") return EncoderKind::kBiLstm;
  throw ConfigError("unknown baseline '" + std::string(s) +
                    "' (expected none, left, right or bilstm)");
}

void init_encoder_params(ModelParams& params, const EncoderDims& dims,
                         EncoderKind kind, Rng& rng) {
  const auto [v, c, h, d] = dims;
  if (v == 0 || c == 0 || h == 0 || d == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  params[sym::kEmbed1] = glorot_uniform(c, v, rng);
  std::size_t combined = 0;
  if (kind != EncoderKind::kRightOnly) {
    LstmParams::init(c, h, rng).store(params, sym::kLstm1Lr);
    combined += h;
  }
  if (kind != EncoderKind::kLeftOnly) {
    LstmParams::init(c, h, rng).store(params, sym::kLstm1Rl);
    combined += h;
  }
  if (kind == EncoderKind::kFull) {
    params[sym::kEmbed2] = glorot_uniform(c, v, rng);
    params[sym::kMemory] = glorot_uniform(h, c, rng);
    LstmParams::init(c, h, rng).store(params, sym::kLstm2Lr);
    LstmParams::init(c, h, rng).store(params, sym::kLstm2Rl);
    combined += 2 * h;
  }
  params[sym::kCombine] = glorot_uniform(d, combined, rng);
}

std::vector<Var> embed(Graph& /*g*/, Var table, std::span<const std::size_t> ids) {
  std::vector<Var> out;
  out.reserve(ids.size());
  // W x for a one-hot x is the id's column.
  for (std::size_t id : ids) out.push_back(column(table, id));
  return out;
}

std::pair<Var, Var> encode_stage1(Graph& g, const FragmentPair& pair) {
  Var table = g.param(sym::kEmbed1);
  const auto left = embed(g, table, pair.left);
  const auto right = embed(g, table, pair.right);
  Var u_l = lstm_sequence(g, LstmVars::bind(g, sym::kLstm1Lr), left);
  Var u_r = lstm_sequence(g, LstmVars::bind(g, sym::kLstm1Rl), right);
  return {u_l, u_r};
}

std::pair<Var, Var> compute_memories(Graph& g, Var u1_l, Var u1_r) {
  // Row vector times W_mu (h x c) == W_mu^T times the column vector.
  Var w_t = transpose(g.param(sym::kMemory));
  Var mu_r = matmul(w_t, u1_l);
  Var mu_l = matmul(w_t, u1_r);
  return {mu_l, mu_r};
}

std::pair<std::vector<Var>, std::vector<Var>> build_stage2_sequences(
    Graph& g, const FragmentPair& pair, Var mu_l, Var mu_r) {
  Var table = g.param(sym::kEmbed2);
  auto wrap = [&](Var mu, std::span<const std::size_t> ids) {
    std::vector<Var> seq;
    seq.reserve(ids.size() + 2);
    seq.push_back(mu);
    for (Var x : embed(g, table, ids)) seq.push_back(x);
    seq.push_back(mu);
    return seq;
  };
  return {wrap(mu_l, pair.left), wrap(mu_r, pair.right)};
}

Var encode_source_sentence(Graph& g, const FragmentPair& pair) {
  const auto [u1_l, u1_r] = encode_stage1(g, pair);
  const auto [mu_l, mu_r] = compute_memories(g, u1_l, u1_r);
  const auto [q2_l, q2_r] = build_stage2_sequences(g, pair, mu_l, mu_r);
  Var u2_l = lstm_sequence(g, LstmVars::bind(g, sym::kLstm2Lr), q2_l);
  Var u2_r = lstm_sequence(g, LstmVars::bind(g, sym::kLstm2Rl), q2_r);
  const std::array<Var, 4> parts = {u1_l, u1_r, u2_l, u2_r};
  return tanh(matmul(g.param(sym::kCombine), concat(parts)));
}

Var encode_baseline(Graph& g, const FragmentPair& pair, EncoderKind kind) {
  Var table = g.param(sym::kEmbed1);
  std::vector<Var> parts;
  if (kind == EncoderKind::kLeftOnly || kind == EncoderKind::kBiLstm) {
    parts.push_back(lstm_sequence(g, LstmVars::bind(g, sym::kLstm1Lr),
                                  embed(g, table, pair.left)));
  }
  if (kind == EncoderKind::kRightOnly || kind == EncoderKind::kBiLstm) {
    parts.push_back(lstm_sequence(g, LstmVars::bind(g, sym::kLstm1Rl),
                                  embed(g, table, pair.right)));
  }
  if (parts.empty()) {
    throw ConfigError("encode_baseline called with the full encoder kind");
  }
  return tanh(matmul(g.param(sym::kCombine), concat(parts)));
}

Var encode_sentence(Graph& g, const FragmentPair& pair, EncoderKind kind) {
  return kind == EncoderKind::kFull ? encode_source_sentence(g, pair)
                                    : encode_baseline(g, pair, kind);
}

}  // namespace vfib

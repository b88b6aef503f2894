// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vfib/graph.hpp"
#include "vfib/lstm.hpp"
#include "vfib/rng.hpp"
#include "vfib/text.hpp"

namespace vfib {

/// Which sentence encoder a model uses. kFull is the two-stage LR/RL encoder
/// with external memory; the others are the single-pass text baselines.
enum class EncoderKind { kFull, kLeftOnly, kRightOnly, kBiLstm };

std::string to_string(EncoderKind kind);
/// Accepts the CLI spellings none|full, left, right, bilstm.
EncoderKind parse_encoder_kind(std::string_view s);

namespace sym {
inline const std::string kEmbed1 = "W1_x";
inline const std::string kEmbed2 = "W2_x";
inline const std::string kMemory = "W_mu";
inline const std::string kLstm1Lr = "lstm1_lr";
inline const std::string kLstm1Rl = "lstm1_rl";
inline const std::string kLstm2Lr = "lstm2_lr";
inline const std::string kLstm2Rl = "lstm2_rl";
inline const std::string kCombine = "W_uq";
}  // namespace sym

struct EncoderDims {
  std::size_t vocab = 0;  // |V|
  std::size_t embed = 0;  // c
  std::size_t hidden = 0; // h
  std::size_t output = 0; // d
};

/// Writes every encoder tensor for `kind` into `params`. W_uq is d x 4h for
/// the full encoder, d x 2h for bilstm and d x h for the one-sided baselines.
void init_encoder_params(ModelParams& params, const EncoderDims& dims,
                         EncoderKind kind, Rng& rng);

/// Stage-1 fragment summaries (u1_l, u1_r).
std::pair<Var, Var> encode_stage1(Graph& g, const FragmentPair& pair);

/// External memories (mu_l, mu_r): mu_r = u1_l W_mu and mu_l = u1_r W_mu.
std::pair<Var, Var> compute_memories(Graph& g, Var u1_l, Var u1_r);

/// Stage-2 input sequences [mu, W2_x tokens..., mu] for each side.
std::pair<std::vector<Var>, std::vector<Var>> build_stage2_sequences(
    Graph& g, const FragmentPair& pair, Var mu_l, Var mu_r);

/// u_q = tanh(W_uq [u1_l | u1_r | u2_l | u2_r]).
Var encode_source_sentence(Graph& g, const FragmentPair& pair);

/// Single-pass text baselines; no stage 2 and no memory.
Var encode_baseline(Graph& g, const FragmentPair& pair, EncoderKind kind);

/// Dispatches on `kind`.
Var encode_sentence(Graph& g, const FragmentPair& pair, EncoderKind kind);

/// Embeds token ids as columns of the given embedding matrix.
std::vector<Var> embed(Graph& g, Var table, std::span<const std::size_t> ids);

}  // namespace vfib

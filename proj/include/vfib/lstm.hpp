// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vfib/graph.hpp"
#include "vfib/rng.hpp"
#include "vfib/tensor.hpp"

namespace vfib {

/// Standard LSTM cell weights. Each gate matrix acts on the concatenation
/// [input, previous hidden] and has shape hidden x (input + hidden).
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor W_i, W_f, W_o, W_c;
  Tensor b_i, b_f, b_o, b_c;

  /// Glorot-uniform gate weights, zero biases, forget bias 1.0.
  static LstmParams init(std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng);
  static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);

  /// Writes the tensors into `params` as "<prefix>.W_i", "<prefix>.b_i", ...
  void store(ModelParams& params, const std::string& prefix) const;
  static LstmParams load(const ModelParams& params, const std::string& prefix);
};

/// An LSTM's parameters bound into a graph.
struct LstmVars {
  Var W_i, W_f, W_o, W_c;
  Var b_i, b_f, b_o, b_c;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static LstmVars bind(Graph& g, const std::string& prefix);
  static LstmVars bind(Graph& g, const LstmParams& p, const std::string& prefix);
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(const LstmVars& cell, Var x, const LstmState& prev);

/// Hidden state after every step, starting from zero hidden and cell state.
std::vector<Var> lstm_states(Graph& g, const LstmVars& cell,
                             std::span<const Var> inputs);

/// Final hidden state; the zero vector for an empty sequence.
Var lstm_sequence(Graph& g, const LstmVars& cell, std::span<const Var> inputs);

/// Tensor-level convenience over the graph version.
Tensor lstm_sequence(std::span<const Tensor> inputs, const LstmParams& params);

/// Glorot-uniform matrix of shape rows x cols.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

/// Symbols written by LstmParams::store for `prefix`.
std::vector<std::string> lstm_symbols(const std::string& prefix);

}  // namespace vfib

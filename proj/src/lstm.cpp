// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/lstm.hpp"

#include <array>
#include <cmath>

#include "vfib/error.hpp"

namespace vfib {

namespace {

constexpr std::array<const char*, 8> kSuffixes = {
    ".W_i", ".W_f", ".W_o", ".W_c", ".b_i", ".b_f", ".b_o", ".b_c"};

const Tensor& fetch(const ModelParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden_dim,
                            Rng& rng) {
  LstmParams p = zeros(input_dim, hidden_dim);
  // fan_in is the concatenated [input, hidden] width, fan_out the gate width.
  p.W_i = glorot_uniform(hidden_dim, input_dim + hidden_dim, rng);
  p.W_f = glorot_uniform(hidden_dim, input_dim + hidden_dim, rng);
  p.W_o = glorot_uniform(hidden_dim, input_dim + hidden_dim, rng);
  p.W_c = glorot_uniform(hidden_dim, input_dim + hidden_dim, rng);
  p.b_f = Tensor({hidden_dim}, 1.0);
  return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const std::vector<std::size_t> w{hidden_dim, input_dim + hidden_dim};
  p.W_i = p.W_f = p.W_o = p.W_c = Tensor(w);
  p.b_i = p.b_f = p.b_o = p.b_c = Tensor({hidden_dim});
  return p;
}

void LstmParams::store(ModelParams& params, const std::string& prefix) const {
  const std::array<const Tensor*, 8> tensors = {&W_i, &W_f, &W_o, &W_c,
                                                &b_i, &b_f, &b_o, &b_c};
  for (std::size_t i = 0; i < kSuffixes.size(); ++i) {
    params[prefix + kSuffixes[i]] = *tensors[i];
  }
}

LstmParams LstmParams::load(const ModelParams& params,
                            const std::string& prefix) {
  LstmParams p;
  p.W_i = fetch(params, prefix + ".W_i");
  p.W_f = fetch(params, prefix + ".W_f");
  p.W_o = fetch(params, prefix + ".W_o");
  p.W_c = fetch(params, prefix + ".W_c");
  p.b_i = fetch(params, prefix + ".b_i");
  p.b_f = fetch(params, prefix + ".b_f");
  p.b_o = fetch(params, prefix + ".b_o");
  p.b_c = fetch(params, prefix + ".b_c");
  p.hidden_dim = p.W_i.rows();
  p.input_dim = p.W_i.cols() - p.hidden_dim;
  return p;
}

std::vector<std::string> lstm_symbols(const std::string& prefix) {
  std::vector<std::string> out;
  for (const char* s : kSuffixes) out.push_back(prefix + s);
  return out;
}

LstmVars LstmVars::bind(Graph& g, const std::string& prefix) {
  LstmVars v;
  v.W_i = g.param(prefix + ".W_i");
  v.W_f = g.param(prefix + ".W_f");
  v.W_o = g.param(prefix + ".W_o");
  v.W_c = g.param(prefix + ".W_c");
  v.b_i = g.param(prefix + ".b_i");
  v.b_f = g.param(prefix + ".b_f");
  v.b_o = g.param(prefix + ".b_o");
  v.b_c = g.param(prefix + ".b_c");
  v.hidden_dim = v.W_i.value().rows();
  if (v.W_i.value().cols() <= v.hidden_dim) {
    throw ShapeError("LSTM '" + prefix + "' gate matrix " +
                     v.W_i.value().shape_string() + " has no input columns");
  }
  v.input_dim = v.W_i.value().cols() - v.hidden_dim;
  return v;
}

LstmVars LstmVars::bind(Graph& g, const LstmParams& p,
                        const std::string& prefix) {
  g.parameter(prefix + ".W_i", p.W_i);
  g.parameter(prefix + ".W_f", p.W_f);
  g.parameter(prefix + ".W_o", p.W_o);
  g.parameter(prefix + ".W_c", p.W_c);
  g.parameter(prefix + ".b_i", p.b_i);
  g.parameter(prefix + ".b_f", p.b_f);
  g.parameter(prefix + ".b_o", p.b_o);
  g.parameter(prefix + ".b_c", p.b_c);
  return bind(g, prefix);
}

LstmState lstm_step(const LstmVars& cell, Var x, const LstmState& prev) {
  if (x.value().rank() != 1 || x.value().size() != cell.input_dim) {
    throw ShapeError("LSTM input of shape " + x.value().shape_string() +
                     " does not match input dim " +
                     std::to_string(cell.input_dim));
  }
  const std::array<Var, 2> parts = {x, prev.h};
  Var z = concat(parts);
  Var i = sigmoid(add(matmul(cell.W_i, z), cell.b_i));
  Var f = sigmoid(add(matmul(cell.W_f, z), cell.b_f));
  Var o = sigmoid(add(matmul(cell.W_o, z), cell.b_o));
  Var candidate = tanh(add(matmul(cell.W_c, z), cell.b_c));
  Var c = add(mul(f, prev.c), mul(i, candidate));
  Var h = mul(o, tanh(c));
  return {h, c};
}

std::vector<Var> lstm_states(Graph& g, const LstmVars& cell,
                             std::span<const Var> inputs) {
  LstmState state{g.zeros({cell.hidden_dim}), g.zeros({cell.hidden_dim})};
  std::vector<Var> hidden;
  hidden.reserve(inputs.size());
  for (Var x : inputs) {
    state = lstm_step(cell, x, state);
    hidden.push_back(state.h);
  }
  return hidden;
}

Var lstm_sequence(Graph& g, const LstmVars& cell, std::span<const Var> inputs) {
  if (inputs.empty()) return g.zeros({cell.hidden_dim});
  return lstm_states(g, cell, inputs).back();
}

Tensor lstm_sequence(std::span<const Tensor> inputs, const LstmParams& params) {
  Graph g;
  LstmVars cell = LstmVars::bind(g, params, "lstm");
  std::vector<Var> xs;
  xs.reserve(inputs.size());
  for (const Tensor& t : inputs) xs.push_back(g.constant(t));
  return lstm_sequence(g, cell, xs).value();
}

}  // namespace vfib

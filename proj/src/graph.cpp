// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#include "vfib/graph.hpp"

#include <algorithm>
#include <cmath>

#include "vfib/error.hpp"

namespace vfib {

namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

// Rank-1 tensors act as column vectors.
Dims matrix_dims(const Tensor& t) {
  if (t.rank() == 1) return {t.shape()[0], 1};
  if (t.rank() == 2) return {t.shape()[0], t.shape()[1]};
  throw ShapeError("expected a vector or matrix, got shape " +
                   t.shape_string());
}

// out[p x r] += a[p x q] * b[q x r], with optional transposition of a or b.
void gemm_acc(const double* a, const double* b, double* out, std::size_t p,
              std::size_t q, std::size_t r, bool trans_a, bool trans_b) {
  for (std::size_t i = 0; i < p; ++i) {
    double* orow = out + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = trans_a ? a[k * p + i] : a[i * q + k];
      if (aik == 0.0) continue;
      if (trans_b) {
        for (std::size_t j = 0; j < r; ++j) orow[j] += aik * b[j * q + k];
      } else {
        const double* brow = b + k * r;
        for (std::size_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
      }
    }
  }
}

void accumulate(Tensor& slot, const Tensor& delta) {
  if (slot.empty()) {
    slot = delta;
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += delta[i];
}

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw ContractError("variable is not bound to a graph");
  return *a.graph;
}

void same_graph(Var a, Var b) {
  if (a.graph != b.graph) {
    throw ContractError("operands belong to different graphs");
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

void require_vector(const Tensor& t, const char* op) {
  if (t.rank() != 1) {
    throw ShapeError(std::string(op) + ": expected a vector, got shape " +
                     t.shape_string());
  }
}

}  // namespace

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::push(OpKind op, std::vector<NodeId> inputs, Tensor value,
                std::size_t aux) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), nullptr, aux});
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  return push(OpKind::kConstant, {}, std::move(value));
}

Var Graph::parameter(const std::string& symbol, Tensor value) {
  if (params_.contains(symbol)) {
    throw ContractError("parameter '" + symbol + "' registered twice");
  }
  Var v = push(OpKind::kParameter, {}, std::move(value));
  params_.emplace(symbol, v.id);
  return v;
}

Var Graph::param(const std::string& symbol) {
  if (auto it = params_.find(symbol); it != params_.end()) {
    return Var{this, it->second};
  }
  if (store_ != nullptr) {
    if (auto it = store_->find(symbol); it != store_->end()) {
      nodes_.push_back(Node{OpKind::kParameter, {}, Tensor(), &it->second, 0});
      params_.emplace(symbol, nodes_.size() - 1);
      return Var{this, nodes_.size() - 1};
    }
  }
  throw ConfigError("unknown parameter symbol '" + symbol + "'");
}

bool Graph::has_param(const std::string& symbol) const {
  return params_.contains(symbol) ||
         (store_ != nullptr && store_->contains(symbol));
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = nodes_.at(id);
  return n.external != nullptr ? *n.external : n.value;
}

std::map<std::string, Tensor> Graph::backward(Var loss) const {
  if (loss.graph != this) throw ContractError("loss belongs to another graph");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        value(loss.id).shape_string());
  }
  std::vector<Tensor> grads(loss.id + 1);
  grads[loss.id] = Tensor(value(loss.id).shape(), 1.0);
  for (NodeId id = loss.id + 1; id-- > 0;) {
    if (grads[id].empty()) continue;
    propagate(id, grads[id], grads);
  }
  std::map<std::string, Tensor> out;
  for (const auto& [symbol, id] : params_) {
    if (id <= loss.id && !grads[id].empty()) {
      out.emplace(symbol, std::move(grads[id]));
    } else {
      out.emplace(symbol, Tensor::zeros_like(value(id)));
    }
  }
  return out;
}

void Graph::propagate(NodeId id, const Tensor& g,
                      std::vector<Tensor>& grads) const {
  const Node& n = nodes_[id];
  const Tensor& y = value(id);
  switch (n.op) {
    case OpKind::kConstant:
    case OpKind::kParameter:
      return;
    case OpKind::kMatMul: {
      const Tensor& a = value(n.inputs[0]);
      const Tensor& b = value(n.inputs[1]);
      const Dims da = matrix_dims(a);
      const Dims db = matrix_dims(b);
      Tensor ga = Tensor::zeros_like(a);
      Tensor gb = Tensor::zeros_like(b);
      // dA = G B^T, dB = A^T G
      gemm_acc(g.data().data(), b.data().data(), ga.data().data(), da.rows,
               db.cols, da.cols, false, true);
      gemm_acc(a.data().data(), g.data().data(), gb.data().data(), da.cols,
               da.rows, db.cols, true, false);
      accumulate(grads[n.inputs[0]], ga);
      accumulate(grads[n.inputs[1]], gb);
      return;
    }
    case OpKind::kTranspose: {
      const Tensor& a = value(n.inputs[0]);
      const Dims da = matrix_dims(a);
      Tensor ga = Tensor::zeros_like(a);
      for (std::size_t i = 0; i < da.rows; ++i) {
        for (std::size_t j = 0; j < da.cols; ++j) {
          ga[i * da.cols + j] = g[j * da.rows + i];
        }
      }
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kAdd:
      accumulate(grads[n.inputs[0]], g);
      accumulate(grads[n.inputs[1]], g);
      return;
    case OpKind::kMul: {
      const Tensor& a = value(n.inputs[0]);
      const Tensor& b = value(n.inputs[1]);
      Tensor ga = Tensor::zeros_like(a);
      Tensor gb = Tensor::zeros_like(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] = g[i] * b[i];
        gb[i] = g[i] * a[i];
      }
      accumulate(grads[n.inputs[0]], ga);
      accumulate(grads[n.inputs[1]], gb);
      return;
    }
    case OpKind::kScale: {
      const double factor = value(n.inputs[1])[0];
      Tensor ga = g;
      for (double& x : ga.data()) x *= factor;
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kAddColumns: {
      const Tensor& v = value(n.inputs[1]);
      const std::size_t k = v.size();
      const std::size_t cols = g.size() / k;
      Tensor gv = Tensor::zeros_like(v);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < cols; ++j) gv[i] += g[i * cols + j];
      }
      accumulate(grads[n.inputs[0]], g);
      accumulate(grads[n.inputs[1]], gv);
      return;
    }
    case OpKind::kTanh: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - y[i] * y[i];
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kSigmoid: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kRelu: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) {
        if (y[i] <= 0.0) ga[i] = 0.0;
      }
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kSoftmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
      Tensor ga = g;
      for (std::size_t i = 0; i < y.size(); ++i) ga[i] = y[i] * (g[i] - dot);
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
    case OpKind::kConcat: {
      std::size_t offset = 0;
      for (NodeId in : n.inputs) {
        const Tensor& part = value(in);
        Tensor gp = Tensor::zeros_like(part);
        std::copy_n(g.data().begin() + static_cast<std::ptrdiff_t>(offset),
                    part.size(), gp.data().begin());
        offset += part.size();
        accumulate(grads[in], gp);
      }
      return;
    }
    case OpKind::kColumn: {
      const Tensor& m = value(n.inputs[0]);
      Tensor& slot = grads[n.inputs[0]];
      if (slot.empty()) slot = Tensor::zeros_like(m);
      const std::size_t cols = m.cols();
      for (std::size_t i = 0; i < m.rows(); ++i) slot[i * cols + n.aux] += g[i];
      return;
    }
    case OpKind::kStackColumns: {
      const std::size_t cols = n.inputs.size();
      const std::size_t rows = y.rows();
      for (std::size_t j = 0; j < cols; ++j) {
        Tensor gc({rows});
        for (std::size_t i = 0; i < rows; ++i) gc[i] = g[i * cols + j];
        accumulate(grads[n.inputs[j]], gc);
      }
      return;
    }
    case OpKind::kSum: {
      const Tensor& a = value(n.inputs[0]);
      accumulate(grads[n.inputs[0]], Tensor(a.shape(), g[0]));
      return;
    }
    case OpKind::kCrossEntropy: {
      const Tensor& logits = value(n.inputs[0]);
      std::vector<double> p = stable_softmax(logits.data());
      Tensor ga = Tensor::zeros_like(logits);
      for (std::size_t i = 0; i < p.size(); ++i) {
        ga[i] = g[0] * (p[i] - (i == n.aux ? 1.0 : 0.0));
      }
      accumulate(grads[n.inputs[0]], ga);
      return;
    }
  }
}

Var matmul(Var a, Var b) {
  same_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  const Dims da = matrix_dims(ta);
  const Dims db = matrix_dims(tb);
  if (da.cols != db.rows) {
    throw ShapeError("matmul: inner dimensions differ, " + ta.shape_string() +
                     " x " + tb.shape_string());
  }
  std::vector<std::size_t> shape = tb.rank() == 1
                                       ? std::vector<std::size_t>{da.rows}
                                       : std::vector<std::size_t>{da.rows, db.cols};
  Tensor out(std::move(shape));
  gemm_acc(ta.data().data(), tb.data().data(), out.data().data(), da.rows,
           da.cols, db.cols, false, false);
  return graph_of(a).push(OpKind::kMatMul, {a.id, b.id}, std::move(out));
}

Var transpose(Var a) {
  const Tensor& ta = a.value();
  const Dims d = matrix_dims(ta);
  Tensor out({d.cols, d.rows});
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      out[j * d.rows + i] = ta[i * d.cols + j];
    }
  }
  return graph_of(a).push(OpKind::kTranspose, {a.id}, std::move(out));
}

Var add(Var a, Var b) {
  same_graph(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& tb = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
  return graph_of(a).push(OpKind::kAdd, {a.id, b.id}, std::move(out));
}

Var mul(Var a, Var b) {
  same_graph(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& tb = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
  return graph_of(a).push(OpKind::kMul, {a.id, b.id}, std::move(out));
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a);
  Var f = g.constant(Tensor({}, factor));
  Tensor out = a.value();
  for (double& x : out.data()) x *= factor;
  return g.push(OpKind::kScale, {a.id, f.id}, std::move(out));
}

Var add_columns(Var m, Var v) {
  same_graph(m, v);
  const Tensor& tm = m.value();
  const Tensor& tv = v.value();
  require_vector(tv, "add_columns");
  const Dims d = matrix_dims(tm);
  if (d.rows != tv.size()) {
    throw ShapeError("add_columns: matrix " + tm.shape_string() +
                     " vs vector " + tv.shape_string());
  }
  Tensor out = tm;
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) out[i * d.cols + j] += tv[i];
  }
  return graph_of(m).push(OpKind::kAddColumns, {m.id, v.id}, std::move(out));
}

Var tanh(Var a) {
  Tensor out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  return graph_of(a).push(OpKind::kTanh, {a.id}, std::move(out));
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& x : out.data()) {
    // Branches keep exp() from overflowing for large |x|.
    if (x >= 0.0) {
      x = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      x = e / (1.0 + e);
    }
  }
  return graph_of(a).push(OpKind::kSigmoid, {a.id}, std::move(out));
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  return graph_of(a).push(OpKind::kRelu, {a.id}, std::move(out));
}

Var softmax(Var v) {
  require_vector(v.value(), "softmax");
  Tensor out = Tensor::vector(stable_softmax(v.value().data()));
  return graph_of(v).push(OpKind::kSoftmax, {v.id}, std::move(out));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  std::vector<double> data;
  std::vector<NodeId> ids;
  for (Var p : parts) {
    same_graph(parts[0], p);
    require_vector(p.value(), "concat");
    const auto values = p.value().data();
    data.insert(data.end(), values.begin(), values.end());
    ids.push_back(p.id);
  }
  return graph_of(parts[0]).push(OpKind::kConcat, std::move(ids),
                                 Tensor::vector(std::move(data)));
}

Var column(Var m, std::size_t j) {
  const Tensor& tm = m.value();
  const Dims d = matrix_dims(tm);
  if (j >= d.cols) {
    throw IndexError("column " + std::to_string(j) + " out of range for " +
                     tm.shape_string());
  }
  Tensor out({d.rows});
  for (std::size_t i = 0; i < d.rows; ++i) out[i] = tm[i * d.cols + j];
  return graph_of(m).push(OpKind::kColumn, {m.id}, std::move(out), j);
}

Var stack_columns(std::span<const Var> cols) {
  if (cols.empty()) throw ShapeError("stack_columns: no operands");
  const std::size_t rows = cols[0].value().size();
  const std::size_t n = cols.size();
  Tensor out({rows, n});
  std::vector<NodeId> ids;
  for (std::size_t j = 0; j < n; ++j) {
    same_graph(cols[0], cols[j]);
    const Tensor& c = cols[j].value();
    require_vector(c, "stack_columns");
    if (c.size() != rows) {
      throw ShapeError("stack_columns: column lengths differ, " +
                       std::to_string(rows) + " vs " + std::to_string(c.size()));
    }
    for (std::size_t i = 0; i < rows; ++i) out[i * n + j] = c[i];
    ids.push_back(cols[j].id);
  }
  return graph_of(cols[0]).push(OpKind::kStackColumns, std::move(ids),
                                std::move(out));
}

Var sum(Var a) {
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return graph_of(a).push(OpKind::kSum, {a.id}, Tensor({}, total));
}

Var cross_entropy(Var logits, std::size_t gold) {
  const Tensor& z = logits.value();
  require_vector(z, "cross_entropy");
  if (gold >= z.size()) {
    throw IndexError("gold label " + std::to_string(gold) +
                     " out of range for " + std::to_string(z.size()) +
                     " classes");
  }
  const double peak = *std::max_element(z.data().begin(), z.data().end());
  double total = 0.0;
  for (double x : z.data()) total += std::exp(x - peak);
  const double loss = peak + std::log(total) - z[gold];
  return graph_of(logits).push(OpKind::kCrossEntropy, {logits.id},
                               Tensor({}, loss), gold);
}

}  // namespace vfib

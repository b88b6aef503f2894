// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vfib Authors.

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vfib/tensor.hpp"

namespace vfib {

class Graph;

using NodeId = std::size_t;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  NodeId id = 0;

  const Tensor& value() const;
};

enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,
  kTranspose,
  kAdd,
  kMul,
  kScale,
  kAddColumns,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kConcat,
  kColumn,
  kStackColumns,
  kSum,
  kCrossEntropy,
};

/// Append-only computation tape with reverse-mode differentiation.
///
/// Nodes are stored in creation order, so every node's inputs precede it.
/// Parameters are registered once per symbol, either explicitly or lazily
/// from a ModelParams store passed at construction. A store must outlive the
/// graph; parameter values are read in place, not copied.
class Graph {
 public:
  Graph() = default;
  explicit Graph(const ModelParams* store) : store_(store) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var zeros(std::vector<std::size_t> shape) { return constant(Tensor(std::move(shape))); }

  /// Registers a parameter that is owned by the graph.
  Var parameter(const std::string& symbol, Tensor value);

  /// Looks up a registered parameter, registering it from the store on first
  /// use. Throws ConfigError when the symbol is unknown.
  Var param(const std::string& symbol);
  bool has_param(const std::string& symbol) const;

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  const std::map<std::string, NodeId>& parameters() const { return params_; }
  OpKind kind(NodeId id) const { return nodes_[id].op; }
  std::span<const NodeId> inputs(NodeId id) const { return nodes_[id].inputs; }

  Var push(OpKind op, std::vector<NodeId> inputs, Tensor value,
           std::size_t aux = 0);

  /// Gradient of a scalar `loss` with respect to every registered parameter.
  std::map<std::string, Tensor> backward(Var loss) const;

 private:
  struct Node {
    OpKind op;
    std::vector<NodeId> inputs;
    Tensor value;
    const Tensor* external = nullptr;
    std::size_t aux = 0;
  };

  void propagate(NodeId id, const Tensor& grad,
                 std::vector<Tensor>& grads) const;

  const ModelParams* store_ = nullptr;
  std::vector<Node> nodes_;
  std::map<std::string, NodeId> params_;
};

// Differentiable operations. All inputs must belong to the same graph.

/// Matrix product. A rank-1 right operand is treated as a column vector and
/// the result is then rank 1.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// Elementwise (Hadamard) product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Adds vector `v` (length k) to every column of matrix `m` (k x n).
Var add_columns(Var m, Var v);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
/// Stable softmax of a rank-1 tensor.
Var softmax(Var v);
/// Concatenates rank-1 tensors.
Var concat(std::span<const Var> parts);
/// Column `j` of a matrix as a rank-1 tensor.
Var column(Var m, std::size_t j);
/// Stacks equal-length rank-1 tensors as the columns of a matrix.
Var stack_columns(std::span<const Var> cols);
Var sum(Var a);
/// -log softmax(logits)[gold], via a fused log-sum-exp.
Var cross_entropy(Var logits, std::size_t gold);

}  // namespace vfib

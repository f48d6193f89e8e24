// Copyright 2026 The sparse-evolve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sparse_evolve/sparse_param.hpp"
#include "sparse_evolve/tensor.hpp"

namespace sparse_evolve {

using NodeId = std::size_t;

/// Reverse-mode tape over dense tensors.
///
/// Nodes are appended in evaluation order, so inputs always precede their
/// consumers and backward() simply walks the tape from the end. Parameters
/// are referenced, not owned: every SparseParam used in an op must outlive
/// the graph. Parameter gradients are accumulated into
/// SparseParam::dense_grad (unmasked) for params with requires_grad set.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId input(Tensor value);

  /// x[batch, in] * (values .* mask)[in, out] + bias[out]; bias may be null.
  NodeId masked_linear(NodeId x, SparseParam& weight, SparseParam* bias);
  /// Stride-1 cross-correlation of x[batch, c_in, h, w] with a masked
  /// kernel[c_out, c_in, kh, kw], zero padded by `padding` on every side.
  NodeId conv2d(NodeId x, SparseParam& kernel, std::size_t padding);

  NodeId relu(NodeId x);
  NodeId leaky_relu(NodeId x, double slope);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);

  NodeId reshape(NodeId x, Shape shape);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);

  /// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets, in
  /// the log-sum-exp stable form. logits may be [batch] or [batch, 1].
  NodeId bce_logits(NodeId logits, std::span<const double> targets);

  /// Propagates d(loss)/d(node) for every node and accumulates parameter
  /// gradients. `loss` must hold a single element.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  /// Gradient after backward(); an empty tensor if the node was not reached.
  const Tensor& grad(NodeId id) const { return nodes_.at(id).grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;
    std::function<void(const Tensor& gout)> backward;
  };

  NodeId push(std::string op, std::vector<NodeId> inputs, Tensor value,
              std::function<void(const Tensor&)> backward);
  Tensor& grad_slot(NodeId id);
  NodeId unary(const char* op, NodeId x, double (*f)(double, double), double (*df)(double, double, double),
               double arg);

  std::vector<Node> nodes_;
};

}  // namespace sparse_evolve

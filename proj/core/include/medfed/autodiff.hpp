// Copyright 2026 The medfed Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "medfed/tensor.hpp"

namespace medfed::ad {

class Graph;

/// Handle to a node recorded on a Graph. Cheap to copy; only valid while the
/// owning Graph is alive.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kTanh,
  kSigmoid,
  kAddBias,
  kSoftmax,
  kConcat,
  kGatherRows,
  kCrossEntropy,
  kSum,
  kReshape,
  kStack,
  kAddBroadcastGroups,
  kDotLast,
  kWeightedSum,
  kSelectRows,
  kSliceRows,
  kConcatRows,
};

const char* to_string(OpKind kind);

/// Per-node data some ops need in the backward pass.
struct OpAux {
  std::vector<std::size_t> indices;
  std::vector<double> weights;
  double factor = 0.0;
};

/// Dynamic reverse-mode tape. Every operation appends one node, so the
/// record is topologically ordered by construction. A Graph belongs to a
/// single task and is neither copyable nor movable (Vars point into it).
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Anonymous leaf that receives a gradient.
  Var variable(Tensor value);
  /// Named leaf; backward() reports its gradient under `name`.
  Var parameter(std::string name, Tensor value);

  const Tensor& value(Var v) const;
  /// Gradient after backward(); zeros of the value's shape when the node was
  /// not reached.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;
  OpKind kind(Var v) const;
  std::span<const std::uint32_t> inputs(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar loss. Returns the gradient of every named
  /// parameter, zero-filled for parameters the loss does not depend on.
  std::map<std::string, Tensor> backward(Var loss);

  using Aux = OpAux;

  /// Appends an op node. Used by the op functions below; the value must
  /// already be computed from the inputs.
  Var record(OpKind kind, std::initializer_list<Var> inputs, Tensor value,
             Aux aux = {});
  Var record(OpKind kind, std::span<const Var> inputs, Tensor value,
             Aux aux = {});

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Aux aux;
  };

  Var push_leaf(Tensor value, bool requires_grad);
  void backprop_node(std::uint32_t index);
  Tensor& grad_slot(std::uint32_t index);
  void add_grad(std::uint32_t index, Tensor contribution);

  std::vector<Node> nodes_;
  std::map<std::string, std::uint32_t> parameters_;
};

// Differentiable operations. Inputs must come from the same Graph.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
/// a[R×n] + bias[n] broadcast over rows.
Var add_bias(Var a, Var bias);
/// Softmax over the last axis; see kernels::softmax for `valid_lengths`.
Var softmax(Var x, std::vector<std::size_t> valid_lengths = {});
Var concat(Var a, Var b);
/// Rows `ids` of table[V×d] stacked into [n×d].
Var gather_rows(Var table, std::vector<std::size_t> ids);
/// Row `id` of table[V×d] as a [d] vector.
Var embed_lookup(Var table, std::size_t id);
/// −log softmax(logits)[target] for logits of shape [V]; rank-0 result.
Var cross_entropy(Var logits, std::size_t target);
/// Σ_r weights[r] · (−log softmax(logits[r])[targets[r]]) for logits [R×V].
Var cross_entropy(Var logits, std::vector<std::size_t> targets,
                  std::vector<double> weights);
Var sum(Var a);
Var reshape(Var a, Shape shape);
/// Stacks equally shaped [B×H] inputs into [B×S×H].
Var stack(std::span<const Var> parts);
/// x[B×S×A] + q[B×A], q broadcast across the S axis.
Var add_broadcast_groups(Var x, Var q);
/// Contracts the last axis of x[...×A] with v[A].
Var dot_last(Var x, Var v);
/// out[b] = Σ_s weights[b,s] · states[b,s,:] for weights[B×S], states[B×S×H].
Var weighted_sum(Var weights, Var states);
/// Row r of the result is row r of `when_true` if active[r], else of
/// `when_false`. Used to freeze recurrent state on padded positions.
Var select_rows(std::vector<bool> active, Var when_true, Var when_false);
/// Rows [begin, end) of a[R×d].
Var slice_rows(Var a, std::size_t begin, std::size_t end);
/// a[Ra×d] on top of b[Rb×d].
Var concat_rows(Var a, Var b);

}  // namespace medfed::ad

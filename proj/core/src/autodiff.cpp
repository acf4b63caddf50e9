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

#include "medfed/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "medfed/errors.hpp"

namespace medfed::ad {

namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  if (a.graph() != b.graph()) {
    throw ContractError("operands recorded on different graphs");
  }
  return graph_of(a);
}

std::size_t last_dim(const Tensor& t) {
  return t.rank() == 0 ? 1 : t.shape().back();
}

}  // namespace

const Tensor& Var::value() const { return graph_of(*this).value(*this); }

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kConcat: return "concat";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kSum: return "sum";
    case OpKind::kReshape: return "reshape";
    case OpKind::kStack: return "stack";
    case OpKind::kAddBroadcastGroups: return "add_broadcast_groups";
    case OpKind::kDotLast: return "dot_last";
    case OpKind::kWeightedSum: return "weighted_sum";
    case OpKind::kSelectRows: return "select_rows";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kConcatRows: return "concat_rows";
  }
  return "unknown";
}

Var Graph::push_leaf(Tensor value, bool requires_grad) {
  require_finite(value, "leaf");
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) { return push_leaf(std::move(value), false); }

Var Graph::variable(Tensor value) { return push_leaf(std::move(value), true); }

Var Graph::parameter(std::string name, Tensor value) {
  if (parameters_.contains(name)) {
    throw ContractError("parameter '" + name + "' registered twice");
  }
  Var v = push_leaf(std::move(value), true);
  parameters_.emplace(std::move(name), v.id());
  return v;
}

const Tensor& Graph::value(Var v) const { return nodes_.at(v.id()).value; }

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_.at(v.id());
  return node.has_grad ? node.grad : Tensor(node.value.shape());
}

bool Graph::requires_grad(Var v) const {
  return nodes_.at(v.id()).requires_grad;
}

OpKind Graph::kind(Var v) const { return nodes_.at(v.id()).kind; }

std::span<const std::uint32_t> Graph::inputs(Var v) const {
  return nodes_.at(v.id()).inputs;
}

Var Graph::record(OpKind kind, std::initializer_list<Var> inputs, Tensor value,
                  Aux aux) {
  return record(kind, std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(value), std::move(aux));
}

Var Graph::record(OpKind kind, std::span<const Var> inputs, Tensor value,
                  Aux aux) {
  require_finite(value, to_string(kind));
  Node node;
  node.kind = kind;
  node.value = std::move(value);
  node.aux = std::move(aux);
  node.inputs.reserve(inputs.size());
  for (Var in : inputs) {
    if (in.graph() != this) {
      throw ContractError("input recorded on a different graph");
    }
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Graph::add_grad(std::uint32_t index, Tensor contribution) {
  Node& node = nodes_[index];
  if (!node.has_grad) {
    require_same_shape(node.value, contribution, "add_grad");
    node.grad = std::move(contribution);
    node.has_grad = true;
  } else {
    kernels::accumulate(node.grad, contribution);
  }
}

Tensor& Graph::grad_slot(std::uint32_t index) {
  Node& node = nodes_[index];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

std::map<std::string, Tensor> Graph::backward(Var loss) {
  if (loss.graph() != this) throw ContractError("loss from a different graph");
  if (value(loss).size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        medfed::to_string(value(loss).shape()));
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  grad_slot(loss.id())[0] = 1.0;
  for (std::uint32_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (node.kind == OpKind::kLeaf || !node.has_grad || !node.requires_grad) {
      continue;
    }
    backprop_node(i);
  }
  std::map<std::string, Tensor> grads;
  for (const auto& [name, index] : parameters_) {
    grads.emplace(name, grad(Var(this, index)));
  }
  return grads;
}

void Graph::backprop_node(std::uint32_t index) {
  // The upstream gradient is moved out while inputs are updated (inputs always
  // precede the node, so it cannot be one of them) and restored afterwards.
  Tensor g = std::move(nodes_[index].grad);
  struct Restore {
    Node& node;
    Tensor& g;
    ~Restore() { node.grad = std::move(g); }
  } restore{nodes_[index], g};
  const Node& node = nodes_[index];
  const auto& in = node.inputs;
  auto wants = [&](std::size_t k) { return nodes_[in[k]].requires_grad; };
  auto input_value = [&](std::size_t k) -> const Tensor& {
    return nodes_[in[k]].value;
  };

  switch (node.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kMatmul: {
      if (wants(0)) {
        add_grad(in[0], kernels::matmul_nt(g, input_value(1)));
      }
      if (wants(1)) {
        add_grad(in[1], kernels::matmul_tn(input_value(0), g));
      }
      break;
    }
    case OpKind::kAdd:
      if (wants(0)) add_grad(in[0], g);
      if (wants(1)) add_grad(in[1], g);
      break;
    case OpKind::kSub:
      if (wants(0)) add_grad(in[0], g);
      if (wants(1)) add_grad(in[1], kernels::scale(g, -1.0));
      break;
    case OpKind::kMul:
      if (wants(0)) {
        add_grad(in[0], kernels::mul(g, input_value(1)));
      }
      if (wants(1)) {
        add_grad(in[1], kernels::mul(g, input_value(0)));
      }
      break;
    case OpKind::kScale:
      kernels::axpy(node.aux.factor, g, grad_slot(in[0]));
      break;
    case OpKind::kTanh: {
      const Tensor& y = node.value;
      Tensor d(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) d[i] = g[i] * (1 - y[i] * y[i]);
      add_grad(in[0], std::move(d));
      break;
    }
    case OpKind::kSigmoid: {
      const Tensor& y = node.value;
      Tensor d(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) d[i] = g[i] * y[i] * (1 - y[i]);
      add_grad(in[0], std::move(d));
      break;
    }
    case OpKind::kAddBias: {
      if (wants(0)) add_grad(in[0], g);
      if (wants(1)) {
        Tensor& db = grad_slot(in[1]);
        const std::size_t n = db.size();
        for (std::size_t i = 0; i < g.size(); ++i) db[i % n] += g[i];
      }
      break;
    }
    case OpKind::kSoftmax: {
      Tensor& dst = grad_slot(in[0]);
      const Tensor& y = node.value;
      const std::size_t cols = last_dim(y);
      for (std::size_t r = 0; r * cols < y.size(); ++r) {
        const std::size_t base = r * cols;
        double dotp = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dotp += g[base + c] * y[base + c];
        for (std::size_t c = 0; c < cols; ++c) {
          dst[base + c] += y[base + c] * (g[base + c] - dotp);
        }
      }
      break;
    }
    case OpKind::kConcat: {
      const std::size_t p = last_dim(input_value(0));
      const std::size_t q = last_dim(input_value(1));
      const std::size_t rows = (p + q) == 0 ? 0 : g.size() / (p + q);
      for (std::size_t r = 0; r < rows; ++r) {
        if (wants(0)) {
          Tensor& da = grad_slot(in[0]);
          for (std::size_t c = 0; c < p; ++c) da[r * p + c] += g[r * (p + q) + c];
        }
        if (wants(1)) {
          Tensor& db = grad_slot(in[1]);
          for (std::size_t c = 0; c < q; ++c) {
            db[r * q + c] += g[r * (p + q) + p + c];
          }
        }
      }
      break;
    }
    case OpKind::kGatherRows: {
      Tensor& dst = grad_slot(in[0]);
      const std::size_t d = input_value(0).dim(1);
      const auto& ids = node.aux.indices;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t c = 0; c < d; ++c) dst[ids[i] * d + c] += g[i * d + c];
      }
      break;
    }
    case OpKind::kCrossEntropy: {
      const Tensor& logits = input_value(0);
      Tensor& dst = grad_slot(in[0]);
      const std::size_t vocab = last_dim(logits);
      const auto& targets = node.aux.indices;
      const auto& weights = node.aux.weights;
      const Tensor probs = kernels::softmax(logits);
      for (std::size_t r = 0; r < targets.size(); ++r) {
        if (weights[r] == 0.0) continue;
        const double w = g[0] * weights[r];
        for (std::size_t c = 0; c < vocab; ++c) {
          const double onehot = c == targets[r] ? 1.0 : 0.0;
          dst[r * vocab + c] += w * (probs[r * vocab + c] - onehot);
        }
      }
      break;
    }
    case OpKind::kSum: {
      Tensor& dst = grad_slot(in[0]);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[0];
      break;
    }
    case OpKind::kReshape:
      add_grad(in[0], g.reshaped(input_value(0).shape()));
      break;
    case OpKind::kStack: {
      const std::size_t steps = in.size();
      const std::size_t batch = node.value.dim(0);
      const std::size_t hidden = node.value.dim(2);
      for (std::size_t s = 0; s < steps; ++s) {
        if (!wants(s)) continue;
        Tensor& dst = grad_slot(in[s]);
        for (std::size_t b = 0; b < batch; ++b) {
          const double* src = g.data().data() + (b * steps + s) * hidden;
          for (std::size_t h = 0; h < hidden; ++h) dst[b * hidden + h] += src[h];
        }
      }
      break;
    }
    case OpKind::kAddBroadcastGroups: {
      if (wants(0)) add_grad(in[0], g);
      if (wants(1)) {
        Tensor& dq = grad_slot(in[1]);
        const std::size_t batch = node.value.dim(0);
        const std::size_t steps = node.value.dim(1);
        const std::size_t width = node.value.dim(2);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t s = 0; s < steps; ++s) {
            const double* src = g.data().data() + (b * steps + s) * width;
            for (std::size_t a = 0; a < width; ++a) dq[b * width + a] += src[a];
          }
        }
      }
      break;
    }
    case OpKind::kDotLast: {
      const Tensor& x = input_value(0);
      const Tensor& v = input_value(1);
      const std::size_t width = v.size();
      const std::size_t rows = g.size();
      if (wants(0)) {
        Tensor& dx = grad_slot(in[0]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t a = 0; a < width; ++a) dx[r * width + a] += g[r] * v[a];
        }
      }
      if (wants(1)) {
        Tensor& dv = grad_slot(in[1]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t a = 0; a < width; ++a) dv[a] += g[r] * x[r * width + a];
        }
      }
      break;
    }
    case OpKind::kWeightedSum: {
      const Tensor& alpha = input_value(0);
      const Tensor& states = input_value(1);
      const std::size_t batch = states.dim(0);
      const std::size_t steps = states.dim(1);
      const std::size_t hidden = states.dim(2);
      if (wants(0)) {
        Tensor& da = grad_slot(in[0]);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t s = 0; s < steps; ++s) {
            const double* st = states.data().data() + (b * steps + s) * hidden;
            double acc = 0.0;
            for (std::size_t h = 0; h < hidden; ++h) acc += g[b * hidden + h] * st[h];
            da[b * steps + s] += acc;
          }
        }
      }
      if (wants(1)) {
        Tensor& ds = grad_slot(in[1]);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t s = 0; s < steps; ++s) {
            const double w = alpha[b * steps + s];
            double* dst = ds.data().data() + (b * steps + s) * hidden;
            for (std::size_t h = 0; h < hidden; ++h) dst[h] += w * g[b * hidden + h];
          }
        }
      }
      break;
    }
    case OpKind::kSelectRows: {
      const auto& active = node.aux.indices;
      const std::size_t width = last_dim(node.value);
      for (std::size_t r = 0; r < active.size(); ++r) {
        const std::size_t k = active[r] ? 0 : 1;
        if (!wants(k)) continue;
        Tensor& dst = grad_slot(in[k]);
        for (std::size_t c = 0; c < width; ++c) dst[r * width + c] += g[r * width + c];
      }
      break;
    }
    case OpKind::kSliceRows: {
      Tensor& dst = grad_slot(in[0]);
      const std::size_t offset = node.aux.indices[0] * last_dim(node.value);
      for (std::size_t i = 0; i < g.size(); ++i) dst[offset + i] += g[i];
      break;
    }
    case OpKind::kConcatRows: {
      const std::size_t split = input_value(0).size();
      const auto first = g.data().subspan(0, split);
      const auto second = g.data().subspan(split);
      if (wants(0)) {
        add_grad(in[0], Tensor(input_value(0).shape(),
                               std::vector<double>(first.begin(), first.end())));
      }
      if (wants(1)) {
        add_grad(in[1], Tensor(input_value(1).shape(),
                               std::vector<double>(second.begin(), second.end())));
      }
      break;
    }
  }
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(OpKind::kMatmul, {a, b}, kernels::matmul(a.value(), b.value()));
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(OpKind::kAdd, {a, b}, kernels::add(a.value(), b.value()));
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(OpKind::kSub, {a, b}, kernels::sub(a.value(), b.value()));
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(OpKind::kMul, {a, b}, kernels::mul(a.value(), b.value()));
}

Var scale(Var a, double factor) {
  Graph::Aux aux;
  aux.factor = factor;
  return graph_of(a).record(OpKind::kScale, {a},
                            kernels::scale(a.value(), factor), std::move(aux));
}

Var tanh(Var a) {
  return graph_of(a).record(OpKind::kTanh, {a}, kernels::tanh(a.value()));
}

Var sigmoid(Var a) {
  return graph_of(a).record(OpKind::kSigmoid, {a}, kernels::sigmoid(a.value()));
}

Var add_bias(Var a, Var bias) {
  Graph& g = graph_of(a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  if (b.rank() != 1 || x.rank() == 0 || x.shape().back() != b.size()) {
    throw DimensionError("add_bias: " + medfed::to_string(x.shape()) + " + " +
                         medfed::to_string(b.shape()));
  }
  Tensor out = x;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % n];
  return g.record(OpKind::kAddBias, {a, bias}, std::move(out));
}

Var softmax(Var x, std::vector<std::size_t> valid_lengths) {
  Tensor out = kernels::softmax(x.value(), valid_lengths);
  return graph_of(x).record(OpKind::kSoftmax, {x}, std::move(out));
}

Var concat(Var a, Var b) {
  Graph& g = graph_of(a, b);
  return g.record(OpKind::kConcat, {a, b}, kernels::concat(a.value(), b.value()));
}

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  const Tensor& t = table.value();
  if (t.rank() != 2) {
    throw DimensionError("gather_rows: table must be a matrix, got " +
                         medfed::to_string(t.shape()));
  }
  const std::size_t rows = t.dim(0);
  const std::size_t d = t.dim(1);
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw OutOfVocabularyError("token id " + std::to_string(ids[i]) +
                                 " outside table of " + std::to_string(rows) +
                                 " rows");
    }
    std::copy_n(t.data().data() + ids[i] * d, d, out.data().data() + i * d);
  }
  Graph::Aux aux;
  aux.indices = std::move(ids);
  return graph_of(table).record(OpKind::kGatherRows, {table}, std::move(out),
                                std::move(aux));
}

Var embed_lookup(Var table, std::size_t id) {
  Var row = gather_rows(table, {id});
  return reshape(row, {row.shape()[1]});
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& x = logits.value();
  if (x.rank() != 1) {
    throw DimensionError("cross_entropy: expected [V] logits, got " +
                         medfed::to_string(x.shape()));
  }
  return cross_entropy(logits, std::vector<std::size_t>{target},
                       std::vector<double>{1.0});
}

Var cross_entropy(Var logits, std::vector<std::size_t> targets,
                  std::vector<double> weights) {
  const Tensor& x = logits.value();
  const std::size_t vocab = last_dim(x);
  if (x.rank() == 0 || vocab == 0) {
    throw DimensionError("cross_entropy: empty logits");
  }
  const std::size_t rows = x.size() / vocab;
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(rows) +
                         " rows but " + std::to_string(targets.size()) +
                         " targets and " + std::to_string(weights.size()) +
                         " weights");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] >= vocab) {
      throw OutOfVocabularyError("cross_entropy: target " +
                                 std::to_string(targets[r]) +
                                 " outside vocabulary of " +
                                 std::to_string(vocab));
    }
    if (weights[r] == 0.0) continue;
    const double* row = x.data().data() + r * vocab;
    const double peak = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) z += std::exp(row[c] - peak);
    // log-sum-exp form keeps the loss exact for saturated logits.
    total += weights[r] * (peak + std::log(z) - row[targets[r]]);
  }
  Graph::Aux aux;
  aux.indices = std::move(targets);
  aux.weights = std::move(weights);
  return graph_of(logits).record(OpKind::kCrossEntropy, {logits},
                                 Tensor::scalar(total), std::move(aux));
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.data()) total += v;
  return graph_of(a).record(OpKind::kSum, {a}, Tensor::scalar(total));
}

Var reshape(Var a, Shape shape) {
  return graph_of(a).record(OpKind::kReshape, {a},
                            a.value().reshaped(std::move(shape)));
}

Var stack(std::span<const Var> parts) {
  if (parts.empty()) throw EmptySequenceError("stack: no inputs");
  const Shape& first = parts.front().shape();
  if (first.size() != 2) {
    throw DimensionError("stack: expected [B×H] parts, got " +
                         medfed::to_string(first));
  }
  const std::size_t batch = first[0];
  const std::size_t hidden = first[1];
  const std::size_t steps = parts.size();
  Tensor out({batch, steps, hidden});
  for (std::size_t s = 0; s < steps; ++s) {
    const Tensor& p = parts[s].value();
    if (p.shape() != first) {
      throw DimensionError("stack: part " + std::to_string(s) + " has shape " +
                           medfed::to_string(p.shape()) + ", expected " +
                           medfed::to_string(first));
    }
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(p.data().data() + b * hidden, hidden,
                  out.data().data() + (b * steps + s) * hidden);
    }
  }
  return graph_of(parts.front()).record(OpKind::kStack, parts, std::move(out));
}

Var add_broadcast_groups(Var x, Var q) {
  Graph& g = graph_of(x, q);
  const Tensor& xv = x.value();
  const Tensor& qv = q.value();
  if (xv.rank() != 3 || qv.rank() != 2 || xv.dim(0) != qv.dim(0) ||
      xv.dim(2) != qv.dim(1)) {
    throw DimensionError("add_broadcast_groups: " +
                         medfed::to_string(xv.shape()) + " + " +
                         medfed::to_string(qv.shape()));
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t steps = xv.dim(1);
  const std::size_t width = xv.dim(2);
  Tensor out = xv;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      double* dst = out.data().data() + (b * steps + s) * width;
      for (std::size_t a = 0; a < width; ++a) dst[a] += qv[b * width + a];
    }
  }
  return g.record(OpKind::kAddBroadcastGroups, {x, q}, std::move(out));
}

Var dot_last(Var x, Var v) {
  Graph& g = graph_of(x, v);
  const Tensor& xv = x.value();
  const Tensor& vv = v.value();
  if (vv.rank() != 1 || xv.rank() == 0 || xv.shape().back() != vv.size()) {
    throw DimensionError("dot_last: " + medfed::to_string(xv.shape()) + " . " +
                         medfed::to_string(vv.shape()));
  }
  Shape shape(xv.shape().begin(), xv.shape().end() - 1);
  const std::size_t width = vv.size();
  Tensor out(shape);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::size_t a = 0; a < width; ++a) acc += xv[r * width + a] * vv[a];
    out[r] = acc;
  }
  return g.record(OpKind::kDotLast, {x, v}, std::move(out));
}

Var weighted_sum(Var weights, Var states) {
  Graph& g = graph_of(weights, states);
  const Tensor& w = weights.value();
  const Tensor& st = states.value();
  if (w.rank() != 2 || st.rank() != 3 || w.dim(0) != st.dim(0) ||
      w.dim(1) != st.dim(1)) {
    throw DimensionError("weighted_sum: " + medfed::to_string(w.shape()) +
                         " with " + medfed::to_string(st.shape()));
  }
  const std::size_t batch = st.dim(0);
  const std::size_t steps = st.dim(1);
  const std::size_t hidden = st.dim(2);
  Tensor out({batch, hidden});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      const double a = w[b * steps + s];
      const double* src = st.data().data() + (b * steps + s) * hidden;
      for (std::size_t h = 0; h < hidden; ++h) out[b * hidden + h] += a * src[h];
    }
  }
  return g.record(OpKind::kWeightedSum, {weights, states}, std::move(out));
}

Var select_rows(std::vector<bool> active, Var when_true, Var when_false) {
  Graph& g = graph_of(when_true, when_false);
  const Tensor& a = when_true.value();
  const Tensor& b = when_false.value();
  require_same_shape(a, b, "select_rows");
  const std::size_t width = last_dim(a);
  if (a.rank() == 0 || active.size() * width != a.size()) {
    throw DimensionError("select_rows: " + std::to_string(active.size()) +
                         " flags for shape " + medfed::to_string(a.shape()));
  }
  Tensor out = b;
  Graph::Aux aux;
  aux.indices.resize(active.size());
  for (std::size_t r = 0; r < active.size(); ++r) {
    aux.indices[r] = active[r] ? 1 : 0;
    if (active[r]) {
      std::copy_n(a.data().data() + r * width, width,
                  out.data().data() + r * width);
    }
  }
  return g.record(OpKind::kSelectRows, {when_true, when_false}, std::move(out),
                  std::move(aux));
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& t = a.value();
  if (t.rank() != 2 || begin > end || end > t.dim(0)) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") of " + medfed::to_string(t.shape()));
  }
  const std::size_t d = t.dim(1);
  const auto first = t.data().begin() + static_cast<std::ptrdiff_t>(begin * d);
  Tensor out({end - begin, d},
             std::vector<double>(first, first + static_cast<std::ptrdiff_t>((end - begin) * d)));
  Graph::Aux aux;
  aux.indices = {begin};
  return graph_of(a).record(OpKind::kSliceRows, {a}, std::move(out), std::move(aux));
}

Var concat_rows(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(1)) {
    throw DimensionError("concat_rows: " + medfed::to_string(x.shape()) + " and " +
                         medfed::to_string(y.shape()));
  }
  std::vector<double> data;
  data.reserve(x.size() + y.size());
  data.insert(data.end(), x.data().begin(), x.data().end());
  data.insert(data.end(), y.data().begin(), y.data().end());
  return g.record(OpKind::kConcatRows, {a, b},
                  Tensor({x.dim(0) + y.dim(0), x.dim(1)}, std::move(data)));
}

}  // namespace medfed::ad

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

#include "medfed/model.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "medfed/errors.hpp"
#include "medfed/rng.hpp"

namespace medfed {

namespace {

using ad::Var;

void gru_shapes(std::size_t input, std::size_t hidden, std::vector<Shape>& out) {
  out.push_back({input, hidden});
  out.push_back({input, hidden});
  out.push_back({input, hidden});
  out.push_back({hidden, hidden});
  out.push_back({hidden, hidden});
  out.push_back({hidden, hidden});
  out.push_back({hidden});
  out.push_back({hidden});
  out.push_back({hidden});
}

ModelParams params_from_shapes(const ModelDims& dims) {
  const std::vector<Shape> shapes = parameter_shapes(dims);
  ModelParams params;
  std::size_t i = 0;
  params.for_each([&](const std::string&, Tensor& t) { t = Tensor(shapes[i++]); });
  return params;
}

/// Wraps precomputed encoder states so the value API can reuse attend_batch.
EncodedBatch encoded_from_states(const ParamVars& p, ad::Graph& graph,
                                 const EncoderOutput& enc) {
  if (enc.states.empty()) {
    throw EmptySequenceError("attention over an empty encoder output");
  }
  const std::size_t steps = enc.states.size();
  const std::size_t hidden = enc.states.front().size();
  std::vector<double> flat;
  flat.reserve(steps * hidden);
  for (const Tensor& s : enc.states) {
    if (s.size() != hidden) {
      throw DimensionError("encoder states have inconsistent sizes");
    }
    flat.insert(flat.end(), s.data().begin(), s.data().end());
  }
  EncodedBatch out;
  out.states = graph.constant(Tensor({1, steps, hidden}, std::move(flat)));
  Var keys_flat = ad::matmul(ad::reshape(out.states, {steps, hidden}), p.attn_w2);
  out.keys = ad::reshape(keys_flat, {1, steps, keys_flat.shape()[1]});
  out.final_state = graph.constant(enc.final_state.reshaped({1, hidden}));
  out.lengths = {steps};
  return out;
}

Tensor row_vector(const Tensor& v, const char* what) {
  if (v.rank() != 1) {
    throw DimensionError(std::string(what) + ": expected a vector, got " +
                         to_string(v.shape()));
  }
  return v.reshaped({1, v.size()});
}

Tensor flatten(const Tensor& t) { return t.reshaped({t.size()}); }

}  // namespace

void ModelDims::validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || attention_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (vocab_in < kReservedTokens || vocab_out < kReservedTokens) {
    throw ConfigError("vocabularies must include the 4 reserved tokens");
  }
}

std::vector<std::string> parameter_names() {
  std::vector<std::string> names;
  ModelParams().for_each(
      [&](const std::string& name, const Tensor&) { names.push_back(name); });
  return names;
}

std::vector<Shape> parameter_shapes(const ModelDims& d) {
  std::vector<Shape> shapes;
  shapes.push_back({d.vocab_in, d.embed_dim});
  shapes.push_back({d.vocab_out, d.embed_dim});
  gru_shapes(d.embed_dim, d.hidden_dim, shapes);
  gru_shapes(d.embed_dim, d.hidden_dim, shapes);
  shapes.push_back({d.hidden_dim, d.attention_dim});
  shapes.push_back({d.hidden_dim, d.attention_dim});
  shapes.push_back({d.attention_dim});
  shapes.push_back({2 * d.hidden_dim, d.hidden_dim});
  shapes.push_back({d.hidden_dim, d.vocab_out});
  return shapes;
}

ModelDims dims_of(const ModelParams& params) {
  ModelDims d;
  if (params.input_embedding.rank() != 2 || params.output_embedding.rank() != 2 ||
      params.encoder_gru.u_z.rank() != 2 || params.attn_w1.rank() != 2) {
    throw DimensionError("model parameters are missing or malformed");
  }
  d.vocab_in = params.input_embedding.dim(0);
  d.embed_dim = params.input_embedding.dim(1);
  d.vocab_out = params.output_embedding.dim(0);
  d.hidden_dim = params.encoder_gru.u_z.dim(0);
  d.attention_dim = params.attn_w1.dim(1);
  const std::vector<Shape> expected = parameter_shapes(d);
  std::size_t i = 0;
  params.for_each([&](const std::string& name, const Tensor& t) {
    if (t.shape() != expected[i]) {
      throw DimensionError("parameter " + name + " has shape " +
                           to_string(t.shape()) + ", expected " +
                           to_string(expected[i]));
    }
    ++i;
  });
  return d;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ModelParams params = params_from_shapes(dims);
  Rng rng(seed);
  params.for_each([&](const std::string& name, Tensor& t) {
    const bool is_bias = name.find(".b_") != std::string::npos;
    if (is_bias) return;
    const double fan_in = static_cast<double>(t.dim(0));
    const double fan_out = t.rank() == 2 ? static_cast<double>(t.dim(1)) : 1.0;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : t.data()) v = dist(rng);
  });
  return params;
}

ModelParams zero_params(const ModelDims& dims) {
  dims.validate();
  return params_from_shapes(dims);
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  params.for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

bool all_finite(const ModelParams& params) {
  bool ok = true;
  params.for_each(
      [&](const std::string&, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  std::vector<const Tensor*> lhs;
  a.for_each([&](const std::string&, const Tensor& t) { lhs.push_back(&t); });
  std::size_t i = 0;
  bool equal = true;
  b.for_each([&](const std::string&, const Tensor& t) {
    equal = equal && (*lhs[i++] == t);
  });
  return equal;
}

ParamVars bind(ad::Graph& graph, const ModelParams& params, bool trainable) {
  ParamVars vars;
  std::vector<Var> bound;
  params.for_each([&](const std::string& name, const Tensor& t) {
    bound.push_back(trainable ? graph.parameter(name, t) : graph.constant(t));
  });
  std::size_t i = 0;
  vars.for_each([&](const std::string&, Var& v) { v = bound[i++]; });
  return vars;
}

ModelParams gradients(const ad::Graph& graph, const ParamVars& vars) {
  std::vector<Tensor> grads;
  vars.for_each(
      [&](const std::string&, const Var& v) { grads.push_back(graph.grad(v)); });
  ModelParams out;
  std::size_t i = 0;
  out.for_each([&](const std::string&, Tensor& t) { t = std::move(grads[i++]); });
  return out;
}

Var gru_step(const GruVars& p, Var input, Var h_prev) {
  using namespace ad;
  Var z = sigmoid(add_bias(add(matmul(input, p.w_z), matmul(h_prev, p.u_z)), p.b_z));
  Var r = sigmoid(add_bias(add(matmul(input, p.w_r), matmul(h_prev, p.u_r)), p.b_r));
  Var candidate = ad::tanh(
      add_bias(add(matmul(input, p.w_h), matmul(mul(r, h_prev), p.u_h)), p.b_h));
  // (1 − z)⊙h + z⊙h̃ written as h + z⊙(h̃ − h)
  return add(h_prev, mul(z, sub(candidate, h_prev)));
}

EncodedBatch encode_batch(const ParamVars& p,
                          std::span<const std::vector<TokenId>> sequences) {
  if (sequences.empty()) throw EmptySequenceError("encode: empty batch");
  ad::Graph& graph = *p.input_embedding.graph();
  const std::size_t batch = sequences.size();
  const std::size_t hidden = p.encoder_gru.u_z.shape()[0];

  EncodedBatch out;
  out.lengths.reserve(batch);
  std::size_t steps = 0;
  for (const auto& seq : sequences) {
    if (seq.empty()) throw EmptySequenceError("encode: empty input sequence");
    out.lengths.push_back(seq.size());
    steps = std::max(steps, seq.size());
  }

  // Rows are processed longest first so that step s only touches the prefix
  // of sequences that are still running; finished rows keep their state.
  std::vector<std::size_t> order(batch);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sequences[a].size() > sequences[b].size();
  });
  const bool permuted = !std::is_sorted(order.begin(), order.end());

  Var h = graph.constant(Tensor({batch, hidden}));
  std::vector<Var> states;
  states.reserve(steps);
  std::size_t running = batch;
  for (std::size_t s = 0; s < steps; ++s) {
    while (running > 0 && sequences[order[running - 1]].size() <= s) --running;
    std::vector<TokenId> ids(running);
    for (std::size_t r = 0; r < running; ++r) ids[r] = sequences[order[r]][s];
    Var x = ad::gather_rows(p.input_embedding, std::move(ids));
    if (running == batch) {
      h = gru_step(p.encoder_gru, x, h);
    } else {
      Var next = gru_step(p.encoder_gru, x, ad::slice_rows(h, 0, running));
      h = ad::concat_rows(next, ad::slice_rows(h, running, batch));
    }
    states.push_back(h);
  }
  if (permuted) {
    std::vector<std::size_t> position(batch);
    for (std::size_t r = 0; r < batch; ++r) position[order[r]] = r;
    Var stacked = ad::reshape(ad::stack(states), {batch, steps * hidden});
    states.clear();
    out.states = ad::reshape(ad::gather_rows(stacked, position), {batch, steps, hidden});
    h = ad::gather_rows(h, std::move(position));
  } else {
    out.states = ad::stack(states);
  }
  Var keys_flat =
      ad::matmul(ad::reshape(out.states, {batch * steps, hidden}), p.attn_w2);
  out.keys = ad::reshape(keys_flat, {batch, steps, keys_flat.shape()[1]});
  out.final_state = h;
  return out;
}

AttentionVars attend_batch(const ParamVars& p, Var decoder_hidden,
                           const EncodedBatch& enc) {
  AttentionVars out;
  Var query = ad::matmul(decoder_hidden, p.attn_w1);
  out.scores =
      ad::dot_last(ad::tanh(ad::add_broadcast_groups(enc.keys, query)), p.attn_v);
  out.weights = ad::softmax(out.scores, enc.lengths);
  out.context = ad::weighted_sum(out.weights, enc.states);
  out.attn_vector =
      ad::tanh(ad::matmul(ad::concat(out.context, decoder_hidden), p.attn_wc));
  return out;
}

DecodeStepVars decode_step_batch(const ParamVars& p,
                                 std::span<const TokenId> prev_tokens,
                                 Var h_prev, const EncodedBatch& enc) {
  DecodeStepVars out;
  Var embedded = ad::gather_rows(
      p.output_embedding,
      std::vector<std::size_t>(prev_tokens.begin(), prev_tokens.end()));
  out.hidden = gru_step(p.decoder_gru, embedded, h_prev);
  out.attention = attend_batch(p, out.hidden, enc);
  out.logits = ad::matmul(out.attention.attn_vector, p.out_proj);
  return out;
}

Tensor gru_step(const GruParams& p, const Tensor& input, const Tensor& h_prev) {
  ad::Graph graph;
  GruVars vars;
  std::vector<Var> bound;
  GruParams::visit(p, "gru", [&](const std::string&, const Tensor& t) {
    bound.push_back(graph.constant(t));
  });
  std::size_t i = 0;
  GruVars::visit(vars, "gru", [&](const std::string&, Var& v) { v = bound[i++]; });
  Var out = gru_step(vars, graph.constant(row_vector(input, "gru_step input")),
                     graph.constant(row_vector(h_prev, "gru_step state")));
  return flatten(out.value());
}

EncoderOutput encode(const ModelParams& params,
                     std::span<const TokenId> input_ids) {
  if (input_ids.empty()) throw EmptySequenceError("encode: empty input sequence");
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  const std::vector<std::vector<TokenId>> batch{
      std::vector<TokenId>(input_ids.begin(), input_ids.end())};
  const EncodedBatch enc = encode_batch(p, batch);
  const Tensor& states = enc.states.value();
  const std::size_t steps = states.dim(1);
  const std::size_t hidden = states.dim(2);
  EncoderOutput out;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> row(states.data().begin() + s * hidden,
                            states.data().begin() + (s + 1) * hidden);
    out.states.push_back(Tensor::vector(std::move(row)));
  }
  out.final_state = flatten(enc.final_state.value());
  return out;
}

double attention_score(const ModelParams& params, const Tensor& h_t,
                       const Tensor& h_s) {
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  Var q = ad::matmul(graph.constant(row_vector(h_t, "attention_score h_t")),
                     p.attn_w1);
  Var k = ad::matmul(graph.constant(row_vector(h_s, "attention_score h_s")),
                     p.attn_w2);
  return ad::dot_last(ad::tanh(ad::add(q, k)), p.attn_v).value().item();
}

AttentionOutput attend(const ModelParams& params, const Tensor& h_t,
                       const EncoderOutput& enc) {
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  const EncodedBatch batch = encoded_from_states(p, graph, enc);
  const AttentionVars a =
      attend_batch(p, graph.constant(row_vector(h_t, "attend h_t")), batch);
  return {flatten(a.weights.value()), flatten(a.context.value()),
          flatten(a.attn_vector.value())};
}

DecodeStepResult decode_step(const ModelParams& params,
                             const DecoderState& state,
                             const EncoderOutput& enc) {
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  const EncodedBatch batch = encoded_from_states(p, graph, enc);
  const TokenId prev[] = {state.prev_token};
  const DecodeStepVars step = decode_step_batch(
      p, prev, graph.constant(row_vector(state.hidden, "decode_step state")),
      batch);
  DecodeStepResult out;
  out.logits = flatten(step.logits.value());
  out.state.hidden = flatten(step.hidden.value());
  out.state.prev_token = state.prev_token;
  out.attention = {flatten(step.attention.weights.value()),
                   flatten(step.attention.context.value()),
                   flatten(step.attention.attn_vector.value())};
  return out;
}

GreedyResult greedy_decode(const ModelParams& params,
                           std::span<const TokenId> input_ids,
                           std::size_t max_len) {
  if (max_len == 0) throw ContractError("greedy_decode: max_len must be >= 1");
  if (input_ids.empty()) throw EmptySequenceError("greedy_decode: empty input");
  ad::Graph graph;
  const ParamVars p = bind(graph, params, false);
  const std::vector<std::vector<TokenId>> batch{
      std::vector<TokenId>(input_ids.begin(), input_ids.end())};
  const EncodedBatch enc = encode_batch(p, batch);
  const std::size_t source_len = input_ids.size();

  GreedyResult out;
  std::vector<double> rows;
  Var hidden = enc.final_state;
  TokenId prev = kStartId;
  for (std::size_t step = 0; step < max_len; ++step) {
    const TokenId prev_tokens[] = {prev};
    const DecodeStepVars d = decode_step_batch(p, prev_tokens, hidden, enc);
    const Tensor& weights = d.attention.weights.value();
    rows.insert(rows.end(), weights.data().begin(), weights.data().end());
    const Tensor& logits = d.logits.value();
    TokenId best = 0;
    for (TokenId t = 1; t < logits.size(); ++t) {
      if (logits[t] > logits[best]) best = t;
    }
    hidden = d.hidden;
    if (best == kEndId) break;
    out.output_ids.push_back(best);
    prev = best;
  }
  const std::size_t steps = rows.size() / source_len;
  out.attention = Tensor({steps, source_len}, std::move(rows));
  return out;
}

}  // namespace medfed

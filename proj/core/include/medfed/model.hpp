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
#include <span>
#include <string>
#include <vector>

#include "medfed/autodiff.hpp"
#include "medfed/tensor.hpp"

namespace medfed {

using TokenId = std::size_t;

/// Reserved token ids shared by the input and output vocabularies.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kStartId = 1;
inline constexpr TokenId kEndId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kReservedTokens = 4;

struct ModelDims {
  std::size_t vocab_in = 0;
  std::size_t vocab_out = 0;
  std::size_t embed_dim = 256;
  std::size_t hidden_dim = 1024;
  std::size_t attention_dim = 1024;

  /// Throws ConfigError unless every field is positive and both vocabularies
  /// hold at least the reserved tokens.
  void validate() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// GRU weights. Input matrices are [input_dim×hidden], recurrent matrices
/// [hidden×hidden], biases [hidden]:
///   z = σ(x·W_z + h·U_z + b_z)
///   r = σ(x·W_r + h·U_r + b_r)
///   h̃ = tanh(x·W_h + (r⊙h)·U_h + b_h)
///   h' = (1 − z)⊙h + z⊙h̃
template <class T>
struct BasicGruParams {
  T w_z, w_r, w_h;
  T u_z, u_r, u_h;
  T b_z, b_r, b_h;

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".w_z", self.w_z);
    f(prefix + ".w_r", self.w_r);
    f(prefix + ".w_h", self.w_h);
    f(prefix + ".u_z", self.u_z);
    f(prefix + ".u_r", self.u_r);
    f(prefix + ".u_h", self.u_h);
    f(prefix + ".b_z", self.b_z);
    f(prefix + ".b_r", self.b_r);
    f(prefix + ".b_h", self.b_h);
  }
};

/// Every trainable tensor of the encoder–attention–decoder model. The same
/// template holds concrete values (Tensor) or tape handles (ad::Var).
template <class T>
struct BasicModelParams {
  T input_embedding;   // [vocab_in×embed]
  T output_embedding;  // [vocab_out×embed]
  BasicGruParams<T> encoder_gru;
  BasicGruParams<T> decoder_gru;
  T attn_w1;   // [hidden×attention], applied to the decoder state
  T attn_w2;   // [hidden×attention], applied to encoder states
  T attn_v;    // [attention]
  T attn_wc;   // [2·hidden×hidden], applied to [context; decoder state]
  T out_proj;  // [hidden×vocab_out]

  /// Calls f(name, tensor) for every tensor in a fixed canonical order.
  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f(std::string("input_embedding"), self.input_embedding);
    f(std::string("output_embedding"), self.output_embedding);
    BasicGruParams<T>::visit(self.encoder_gru, "encoder_gru", f);
    BasicGruParams<T>::visit(self.decoder_gru, "decoder_gru", f);
    f(std::string("attn_w1"), self.attn_w1);
    f(std::string("attn_w2"), self.attn_w2);
    f(std::string("attn_v"), self.attn_v);
    f(std::string("attn_wc"), self.attn_wc);
    f(std::string("out_proj"), self.out_proj);
  }
};

using GruParams = BasicGruParams<Tensor>;
using ModelParams = BasicModelParams<Tensor>;
using GruVars = BasicGruParams<ad::Var>;
using ParamVars = BasicModelParams<ad::Var>;

/// Canonical tensor names in for_each order.
std::vector<std::string> parameter_names();

/// Expected shape of every tensor for the given dims, in for_each order.
std::vector<Shape> parameter_shapes(const ModelDims& dims);

/// Dims recovered from tensor shapes. Throws DimensionError when the shapes
/// are not mutually consistent.
ModelDims dims_of(const ModelParams& params);

/// Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic in (dims, seed).
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Params with every element zero.
ModelParams zero_params(const ModelDims& dims);

/// Total number of scalar weights.
std::size_t parameter_count(const ModelParams& params);

bool all_finite(const ModelParams& params);
bool operator==(const ModelParams& a, const ModelParams& b);

/// Binds each tensor as a named parameter (trainable) or a constant.
ParamVars bind(ad::Graph& graph, const ModelParams& params, bool trainable);

/// Gradients of all parameters bound by bind(); zero where unreached.
ModelParams gradients(const ad::Graph& graph, const ParamVars& vars);

// ---------------------------------------------------------------------------
// Batched graph building blocks. Batch rows are examples; sequences are
// right-padded and the real lengths are carried alongside.

/// One GRU step for input[B×d] and h_prev[B×H].
ad::Var gru_step(const GruVars& p, ad::Var input, ad::Var h_prev);

struct EncodedBatch {
  ad::Var states;       // [B×S×H], frozen past each sequence's length
  ad::Var keys;         // [B×S×A], states · W_2, reused by every decode step
  ad::Var final_state;  // [B×H]
  std::vector<std::size_t> lengths;
};

/// Runs the encoder GRU over a batch of token sequences (each non-empty).
EncodedBatch encode_batch(const ParamVars& p,
                          std::span<const std::vector<TokenId>> sequences);

struct AttentionVars {
  ad::Var scores;       // [B×S], v_aᵀ tanh(W_1 h_t + W_2 h̄_s)
  ad::Var weights;      // [B×S], softmax of scores over real positions
  ad::Var context;      // [B×H], Σ_s α_s h̄_s
  ad::Var attn_vector;  // [B×H], tanh([c_t; h_t] · W_c)
};

AttentionVars attend_batch(const ParamVars& p, ad::Var decoder_hidden,
                           const EncodedBatch& enc);

struct DecodeStepVars {
  ad::Var logits;  // [B×vocab_out]
  ad::Var hidden;  // [B×H]
  AttentionVars attention;
};

/// Decoder GRU on the previous tokens, attention with the new state, then
/// projection of the attention vector to output logits.
DecodeStepVars decode_step_batch(const ParamVars& p,
                                 std::span<const TokenId> prev_tokens,
                                 ad::Var h_prev, const EncodedBatch& enc);

// ---------------------------------------------------------------------------
// Single-example value API.

struct EncoderOutput {
  std::vector<Tensor> states;  // one [H] state per source token
  Tensor final_state;          // [H]
};

struct AttentionOutput {
  Tensor weights;      // [S]
  Tensor context;      // [H]
  Tensor attn_vector;  // [H]
};

struct DecoderState {
  Tensor hidden;  // [H]
  TokenId prev_token = kStartId;
};

struct DecodeStepResult {
  Tensor logits;  // [vocab_out]
  DecoderState state;
  AttentionOutput attention;
};

struct GreedyResult {
  std::vector<TokenId> output_ids;  // without the terminating <end>
  Tensor attention;                 // [steps×S]
};

Tensor gru_step(const GruParams& p, const Tensor& input, const Tensor& h_prev);
EncoderOutput encode(const ModelParams& params,
                     std::span<const TokenId> input_ids);
double attention_score(const ModelParams& params, const Tensor& h_t,
                       const Tensor& h_s);
AttentionOutput attend(const ModelParams& params, const Tensor& h_t,
                       const EncoderOutput& enc);
DecodeStepResult decode_step(const ModelParams& params,
                             const DecoderState& state,
                             const EncoderOutput& enc);
/// Argmax decoding from <start> with the encoder's final state. Ties go to
/// the lowest token id. Stops at <end> or after max_len steps.
GreedyResult greedy_decode(const ModelParams& params,
                           std::span<const TokenId> input_ids,
                           std::size_t max_len);

}  // namespace medfed

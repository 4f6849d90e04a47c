// Copyright 2026 The topicret Authors.
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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topicret/binary_io.hpp"
#include "topicret/corpus.hpp"
#include "topicret/tensor.hpp"
#include "topicret/topic_model.hpp"

namespace topicret {

enum class Granularity : std::uint8_t { kTopic = 0, kWord = 1, kGlobal = 2 };

std::string_view granularity_name(Granularity g);
Granularity parse_granularity(std::string_view name);

// Topic id of entries that do not belong to a topic bucket.
inline constexpr std::int32_t kNoTopic = -1;

struct EncoderShape {
  std::size_t vocab = 0;
  std::size_t max_len = 180;
  std::size_t context_dim = 64;    // d_c
  std::size_t attention_dim = 64;  // d_a
  std::size_t output_dim = 256;    // dim
  std::size_t topics = 8;

  void validate() const;
  bool operator==(const EncoderShape&) const = default;
};

// Every trainable tensor. Vectors are stored as 1×n matrices.
struct EncoderParams {
  EncoderShape shape;
  Matrix token_embeddings;     // V × d_c
  Matrix position_embeddings;  // L_max × d_c
  Matrix attn_query;           // d_c × d_c
  Matrix attn_key;             // d_c × d_c
  Matrix attn_value;           // d_c × d_c
  Matrix attn_output;          // d_c × d_c
  Matrix ffn_weight;           // d_c × d_c
  Matrix ffn_bias;             // 1 × d_c
  Matrix pool_weight;          // d_a × d_c, shared by all buckets
  Matrix pool_bias;            // 1 × d_a
  Matrix topic_queries;        // K × d_a
  Matrix projection;           // dim × d_c

  static EncoderParams zeros(const EncoderShape& shape);
  // Uniform(-0.05, 0.05) embeddings and topic queries, Xavier-uniform maps,
  // zero biases.
  static EncoderParams initialize(const EncoderShape& shape, std::uint64_t seed);

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn("token_embeddings", token_embeddings);
    fn("position_embeddings", position_embeddings);
    fn("attn_query", attn_query);
    fn("attn_key", attn_key);
    fn("attn_value", attn_value);
    fn("attn_output", attn_output);
    fn("ffn_weight", ffn_weight);
    fn("ffn_bias", ffn_bias);
    fn("pool_weight", pool_weight);
    fn("pool_bias", pool_bias);
    fn("topic_queries", topic_queries);
    fn("projection", projection);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<EncoderParams*>(this)->for_each(
        [&](std::string_view name, Matrix& m) { fn(name, std::as_const(m)); });
  }

  std::size_t parameter_count() const;
  // Rounds every value to the nearest float, matching what TGEN stores.
  void round_to_float();

  // TGEN: magic, u32 version, u32 d_c, d_a, dim, K, V, L_max, then every
  // tensor row-major as f32 in for_each order.
  void serialize_into(io::ByteWriter& w) const;
  static EncoderParams deserialize_from(io::ByteReader& r);
  std::vector<std::uint8_t> serialize() const;
  static EncoderParams deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const EncoderParams&) const = default;
};

// Intermediate values of the contextual encoder, kept for backprop.
struct ContextCache {
  Matrix input;   // token + position embeddings
  Matrix query, key, value;
  Matrix attention;  // n × n, row-softmaxed
  Matrix mixed;      // attention-weighted values
  Matrix hidden;     // input + attn_output * mixed
  Matrix ffn;        // tanh(ffn_weight * hidden + ffn_bias)
  Matrix output;     // hidden + ffn
};

// One self-attention layer and one tanh feed-forward layer, each wrapped in
// a residual connection.
void contextual_forward(const EncoderParams& params, std::span<const TokenId> tokens,
                        ContextCache& cache);
Matrix encode_contextual(const EncoderParams& params, const TokenSeq& tokens);
void contextual_backward(const EncoderParams& params, std::span<const TokenId> tokens,
                         const ContextCache& cache, const Matrix& d_output,
                         EncoderParams& grad);

struct Bucket {
  std::int32_t topic = 0;
  std::vector<std::size_t> positions;  // ascending token positions
  Matrix members;                      // one contextual row per position
};

// Ordered by topic id. Marker positions are never bucketed.
std::vector<Bucket> bucket_by_topic(const Matrix& contextual,
                                    const TopicAssignmentTable& table,
                                    std::span<const TokenId> tokens);

struct PoolCache {
  std::vector<double> weights;  // softmaxed attention weights
  Matrix hidden;                // tanh(W u_i + b), B × d_a
};

std::vector<double> attention_pool(const EncoderParams& params, const Matrix& members,
                                   std::int32_t topic, PoolCache* cache = nullptr);
void attention_pool_backward(const EncoderParams& params, const Matrix& members,
                             std::int32_t topic, const PoolCache& cache,
                             std::span<const double> d_output, EncoderParams& grad,
                             Matrix& d_members);

struct Projection {
  std::vector<double> value;
  double norm = 0.0;  // norm of P·v before normalization
  bool degenerate = false;
};

// P·v, L2-normalized when `normalize` is set. A zero pre-image returns the
// zero vector flagged degenerate.
Projection project(const EncoderParams& params, std::span<const double> v,
                   bool normalize);
void project_backward(const EncoderParams& params, std::span<const double> input,
                      const Projection& result, std::span<const double> d_output,
                      bool normalize, EncoderParams& grad, std::span<double> d_input);

// Token sequence plus its frozen topic table.
struct PreparedText {
  TokenSeq tokens;
  TopicAssignmentTable table;
};

// Full forward state of one text, enough to backpropagate.
struct EncodedText {
  Granularity granularity = Granularity::kTopic;  // after empty-bucket fallback
  ContextCache context;
  std::vector<Bucket> buckets;
  std::vector<PoolCache> pools;
  std::vector<std::size_t> word_positions;
  Matrix pooled;  // projection inputs, N × d_c
  std::vector<Projection> projections;
  std::vector<std::int32_t> topic_ids;
  Matrix embeddings;  // N × dim
};

EncodedText forward_text(const EncoderParams& params, const PreparedText& text,
                         Granularity granularity, bool normalize);
void backward_text(const EncoderParams& params, const PreparedText& text,
                   const EncodedText& encoded, const Matrix& d_embeddings,
                   bool normalize, EncoderParams& grad);

// What gets scored and stored: a text's final embeddings at float precision.
struct Representation {
  std::string text_id;
  Granularity granularity = Granularity::kTopic;
  std::size_t dim = 0;
  std::vector<std::int32_t> topic_ids;
  std::vector<float> values;  // size() × dim
  std::vector<std::uint8_t> degenerate;

  std::size_t size() const { return topic_ids.size(); }
  std::span<const float> embedding(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

Representation to_representation(std::string text_id, Granularity requested,
                                  const EncodedText& encoded);

struct EncodingContext {
  const Vocab* vocab = nullptr;
  const LdaModel* lda = nullptr;
  const EncoderParams* params = nullptr;
  TopicExtractionConfig extraction;
  LengthLimits limits;
  bool normalize = true;
};

// tokenize → fold-in topics → word-topic table.
PreparedText prepare_text(const EncodingContext& ctx, std::string text_id,
                          std::string_view raw, TextKind kind);

Representation encode_text(const EncodingContext& ctx, std::string text_id,
                           std::string_view raw, TextKind kind,
                           Granularity granularity);

}  // namespace topicret

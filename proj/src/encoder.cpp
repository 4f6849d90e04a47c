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

#include "topicret/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "topicret/common.hpp"

namespace topicret {

namespace {

constexpr char kEncoderMagic[4] = {'T', 'G', 'E', 'N'};
constexpr std::uint32_t kEncoderVersion = 1;

void fill_uniform(Matrix& m, double limit, Rng& rng) {
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
}

void fill_xavier(Matrix& m, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  fill_uniform(m, limit, rng);
}

// In-place softmax with max shift.
void softmax(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

std::string_view granularity_name(Granularity g) {
  switch (g) {
    case Granularity::kTopic: return "topic";
    case Granularity::kWord: return "word";
    case Granularity::kGlobal: return "global";
  }
  return "unknown";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "topic") return Granularity::kTopic;
  if (name == "word") return Granularity::kWord;
  if (name == "global") return Granularity::kGlobal;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown granularity " + std::string(name));
}

void EncoderShape::validate() const {
  if (context_dim < 1 || attention_dim < 1 || output_dim < 1) {
    throw Error(ErrorCode::kInvalidConfig, "encoder dimensions must be >= 1");
  }
  if (vocab <= special::kCount || max_len < 3 || topics < 1) {
    throw Error(ErrorCode::kInvalidConfig, "encoder shape too small");
  }
}

EncoderParams EncoderParams::zeros(const EncoderShape& s) {
  EncoderParams p;
  p.shape = s;
  p.token_embeddings = Matrix(s.vocab, s.context_dim);
  p.position_embeddings = Matrix(s.max_len, s.context_dim);
  p.attn_query = Matrix(s.context_dim, s.context_dim);
  p.attn_key = Matrix(s.context_dim, s.context_dim);
  p.attn_value = Matrix(s.context_dim, s.context_dim);
  p.attn_output = Matrix(s.context_dim, s.context_dim);
  p.ffn_weight = Matrix(s.context_dim, s.context_dim);
  p.ffn_bias = Matrix(1, s.context_dim);
  p.pool_weight = Matrix(s.attention_dim, s.context_dim);
  p.pool_bias = Matrix(1, s.attention_dim);
  p.topic_queries = Matrix(s.topics, s.attention_dim);
  p.projection = Matrix(s.output_dim, s.context_dim);
  return p;
}

EncoderParams EncoderParams::initialize(const EncoderShape& s, std::uint64_t seed) {
  s.validate();
  EncoderParams p = zeros(s);
  Rng rng(seed);
  fill_uniform(p.token_embeddings, 0.05, rng);
  fill_uniform(p.position_embeddings, 0.05, rng);
  fill_xavier(p.attn_query, rng);
  fill_xavier(p.attn_key, rng);
  fill_xavier(p.attn_value, rng);
  fill_xavier(p.attn_output, rng);
  fill_xavier(p.ffn_weight, rng);
  fill_xavier(p.pool_weight, rng);
  fill_uniform(p.topic_queries, 0.05, rng);
  fill_xavier(p.projection, rng);
  p.round_to_float();
  return p;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Matrix& m) { n += m.size(); });
  return n;
}

void EncoderParams::round_to_float() {
  for_each([](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = static_cast<float>(v);
  });
}

void EncoderParams::serialize_into(io::ByteWriter& w) const {
  w.put_string(std::string_view(kEncoderMagic, 4));
  w.put<std::uint32_t>(kEncoderVersion);
  for (std::size_t v : {shape.context_dim, shape.attention_dim, shape.output_dim,
                        shape.topics, shape.vocab, shape.max_len}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  for_each([&](std::string_view, const Matrix& m) {
    for (double v : m.values()) w.put<float>(static_cast<float>(v));
  });
}

EncoderParams EncoderParams::deserialize_from(io::ByteReader& r) {
  if (r.get_string(4) != std::string_view(kEncoderMagic, 4)) {
    throw Error(ErrorCode::kFormatError, "not a TGEN block");
  }
  if (r.get<std::uint32_t>() != kEncoderVersion) {
    throw Error(ErrorCode::kFormatError, "unsupported TGEN version");
  }
  EncoderShape s;
  s.context_dim = r.get<std::uint32_t>();
  s.attention_dim = r.get<std::uint32_t>();
  s.output_dim = r.get<std::uint32_t>();
  s.topics = r.get<std::uint32_t>();
  s.vocab = r.get<std::uint32_t>();
  s.max_len = r.get<std::uint32_t>();
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormatError, e.what());
  }
  EncoderParams p = zeros(s);
  p.for_each([&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = r.get<float>();
  });
  return p;
}

std::vector<std::uint8_t> EncoderParams::serialize() const {
  io::ByteWriter w;
  serialize_into(w);
  return std::move(w.bytes());
}

EncoderParams EncoderParams::deserialize(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  auto p = deserialize_from(r);
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after TGEN block");
  }
  return p;
}

void contextual_forward(const EncoderParams& params, std::span<const TokenId> tokens,
                        ContextCache& cache) {
  const std::size_t n = tokens.size();
  const std::size_t dc = params.shape.context_dim;
  if (n > params.shape.max_len) {
    throw Error(ErrorCode::kShapeError, "sequence longer than position table");
  }

  cache.input = Matrix(n, dc);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tok = static_cast<std::size_t>(tokens[i]);
    if (tok >= params.shape.vocab) {
      throw Error(ErrorCode::kShapeError, "token id outside vocabulary");
    }
    auto x = cache.input.row(i);
    const auto te = params.token_embeddings.row(tok);
    const auto pe = params.position_embeddings.row(i);
    for (std::size_t c = 0; c < dc; ++c) x[c] = te[c] + pe[c];
  }

  linear_rows(cache.input, params.attn_query, cache.query);
  linear_rows(cache.input, params.attn_key, cache.key);
  linear_rows(cache.input, params.attn_value, cache.value);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dc));
  cache.attention = Matrix(n, n);
  cache.mixed = Matrix(n, dc);
  for (std::size_t i = 0; i < n; ++i) {
    auto a = cache.attention.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = dot(cache.query.row(i), cache.key.row(j)) * scale;
    }
    softmax(a);
    auto o = cache.mixed.row(i);
    for (std::size_t j = 0; j < n; ++j) axpy(a[j], cache.value.row(j), o);
  }

  linear_rows(cache.mixed, params.attn_output, cache.hidden);
  for (std::size_t i = 0; i < n; ++i) {
    axpy(1.0, cache.input.row(i), cache.hidden.row(i));
  }

  linear_rows(cache.hidden, params.ffn_weight, cache.ffn);
  cache.output = Matrix(n, dc);
  const auto bias = params.ffn_bias.row(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto f = cache.ffn.row(i);
    auto out = cache.output.row(i);
    const auto h = cache.hidden.row(i);
    for (std::size_t c = 0; c < dc; ++c) {
      f[c] = std::tanh(f[c] + bias[c]);
      out[c] = h[c] + f[c];
    }
  }
}

Matrix encode_contextual(const EncoderParams& params, const TokenSeq& tokens) {
  ContextCache cache;
  contextual_forward(params, tokens.tokens, cache);
  return std::move(cache.output);
}

void contextual_backward(const EncoderParams& params, std::span<const TokenId> tokens,
                         const ContextCache& cache, const Matrix& d_output,
                         EncoderParams& grad) {
  const std::size_t n = tokens.size();
  const std::size_t dc = params.shape.context_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dc));

  // Feed-forward sublayer.
  Matrix d_hidden = d_output;
  std::vector<double> g(dc);
  auto d_bias = grad.ffn_bias.row(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto dout = d_output.row(i);
    const auto f = cache.ffn.row(i);
    for (std::size_t c = 0; c < dc; ++c) g[c] = dout[c] * (1.0 - f[c] * f[c]);
    outer_add(grad.ffn_weight, g, cache.hidden.row(i));
    axpy(1.0, g, d_bias);
    matvec_transposed_add(params.ffn_weight, g, d_hidden.row(i));
  }

  // Attention sublayer.
  Matrix d_input = d_hidden;
  Matrix d_mixed(n, dc);
  for (std::size_t i = 0; i < n; ++i) {
    outer_add(grad.attn_output, d_hidden.row(i), cache.mixed.row(i));
    matvec_transposed_add(params.attn_output, d_hidden.row(i), d_mixed.row(i));
  }

  Matrix d_query(n, dc), d_key(n, dc), d_value(n, dc);
  std::vector<double> d_attn(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = cache.attention.row(i);
    const auto dmix = d_mixed.row(i);
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      d_attn[j] = dot(dmix, cache.value.row(j));
      weighted += a[j] * d_attn[j];
      axpy(a[j], dmix, d_value.row(j));
    }
    auto dq = d_query.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double ds = a[j] * (d_attn[j] - weighted) * scale;
      if (ds == 0.0) continue;
      axpy(ds, cache.key.row(j), dq);
      axpy(ds, cache.query.row(i), d_key.row(j));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto x = cache.input.row(i);
    auto dx = d_input.row(i);
    outer_add(grad.attn_query, d_query.row(i), x);
    outer_add(grad.attn_key, d_key.row(i), x);
    outer_add(grad.attn_value, d_value.row(i), x);
    matvec_transposed_add(params.attn_query, d_query.row(i), dx);
    matvec_transposed_add(params.attn_key, d_key.row(i), dx);
    matvec_transposed_add(params.attn_value, d_value.row(i), dx);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto dx = d_input.row(i);
    axpy(1.0, dx, grad.token_embeddings.row(static_cast<std::size_t>(tokens[i])));
    axpy(1.0, dx, grad.position_embeddings.row(i));
  }
}

std::vector<Bucket> bucket_by_topic(const Matrix& contextual,
                                    const TopicAssignmentTable& table,
                                    std::span<const TokenId> tokens) {
  if (table.size() != contextual.rows() || tokens.size() != contextual.rows()) {
    throw Error(ErrorCode::kShapeError,
                "topic table and contextual embeddings disagree in length");
  }
  std::map<std::int32_t, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (is_marker(tokens[i])) continue;
    for (auto t : table.positions[i]) grouped[t].push_back(i);
  }
  std::vector<Bucket> buckets;
  buckets.reserve(grouped.size());
  for (auto& [topic, positions] : grouped) {
    Bucket b;
    b.topic = topic;
    b.members = Matrix(positions.size(), contextual.cols());
    for (std::size_t r = 0; r < positions.size(); ++r) {
      std::copy_n(contextual.row(positions[r]).begin(), contextual.cols(),
                  b.members.row(r).begin());
    }
    b.positions = std::move(positions);
    buckets.push_back(std::move(b));
  }
  return buckets;
}

std::vector<double> attention_pool(const EncoderParams& params, const Matrix& members,
                                   std::int32_t topic, PoolCache* cache) {
  const std::size_t count = members.rows();
  if (count == 0) throw Error(ErrorCode::kEmptyBucket, "cannot pool an empty bucket");
  if (topic < 0 || static_cast<std::size_t>(topic) >= params.shape.topics) {
    throw Error(ErrorCode::kShapeError, "topic id out of range");
  }
  const std::size_t da = params.shape.attention_dim;
  const auto q = params.topic_queries.row(static_cast<std::size_t>(topic));
  const auto b = params.pool_bias.row(0);

  PoolCache local;
  PoolCache& c = cache != nullptr ? *cache : local;
  c.hidden = Matrix(count, da);
  c.weights.assign(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    auto z = c.hidden.row(i);
    matvec(params.pool_weight, members.row(i), z);
    for (std::size_t a = 0; a < da; ++a) z[a] = std::tanh(z[a] + b[a]);
    c.weights[i] = dot(q, z);
  }
  softmax(c.weights);

  std::vector<double> out(members.cols(), 0.0);
  for (std::size_t i = 0; i < count; ++i) axpy(c.weights[i], members.row(i), out);
  return out;
}

void attention_pool_backward(const EncoderParams& params, const Matrix& members,
                             std::int32_t topic, const PoolCache& cache,
                             std::span<const double> d_output, EncoderParams& grad,
                             Matrix& d_members) {
  const std::size_t count = members.rows();
  const std::size_t da = params.shape.attention_dim;
  const auto t = static_cast<std::size_t>(topic);
  const auto q = params.topic_queries.row(t);
  auto dq = grad.topic_queries.row(t);
  auto db = grad.pool_bias.row(0);

  std::vector<double> d_weight(count);
  double weighted = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    d_weight[i] = dot(d_output, members.row(i));
    weighted += cache.weights[i] * d_weight[i];
    axpy(cache.weights[i], d_output, d_members.row(i));
  }
  std::vector<double> d_pre(da);
  for (std::size_t i = 0; i < count; ++i) {
    const double d_logit = cache.weights[i] * (d_weight[i] - weighted);
    const auto z = cache.hidden.row(i);
    axpy(d_logit, z, dq);
    for (std::size_t a = 0; a < da; ++a) {
      d_pre[a] = d_logit * q[a] * (1.0 - z[a] * z[a]);
    }
    outer_add(grad.pool_weight, d_pre, members.row(i));
    axpy(1.0, d_pre, db);
    matvec_transposed_add(params.pool_weight, d_pre, d_members.row(i));
  }
}

Projection project(const EncoderParams& params, std::span<const double> v,
                   bool normalize) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNumericalError, "non-finite projection input");
    }
  }
  Projection p;
  p.value.resize(params.shape.output_dim);
  matvec(params.projection, v, p.value);
  p.norm = std::sqrt(dot(p.value, p.value));
  if (p.norm == 0.0) {
    p.degenerate = true;
    return p;
  }
  if (normalize) {
    for (double& x : p.value) x /= p.norm;
  }
  return p;
}

void project_backward(const EncoderParams& params, std::span<const double> input,
                      const Projection& result, std::span<const double> d_output,
                      bool normalize, EncoderParams& grad, std::span<double> d_input) {
  std::vector<double> d_pre(d_output.begin(), d_output.end());
  if (normalize) {
    if (result.degenerate) return;
    const double along = dot(result.value, d_output);
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
      d_pre[i] = (d_output[i] - result.value[i] * along) / result.norm;
    }
  }
  outer_add(grad.projection, d_pre, input);
  matvec_transposed_add(params.projection, d_pre, d_input);
}

EncodedText forward_text(const EncoderParams& params, const PreparedText& text,
                         Granularity granularity, bool normalize) {
  const auto& tokens = text.tokens.tokens;
  const std::size_t dc = params.shape.context_dim;
  EncodedText enc;
  contextual_forward(params, tokens, enc.context);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_marker(tokens[i])) enc.word_positions.push_back(i);
  }
  if (enc.word_positions.empty()) {
    throw Error(ErrorCode::kEmptyText, "text has no word positions");
  }

  enc.granularity = granularity;
  if (granularity == Granularity::kTopic) {
    enc.buckets = bucket_by_topic(enc.context.output, text.table, tokens);
    if (enc.buckets.empty()) enc.granularity = Granularity::kGlobal;
  }

  switch (enc.granularity) {
    case Granularity::kTopic: {
      enc.pooled = Matrix(enc.buckets.size(), dc);
      enc.pools.resize(enc.buckets.size());
      for (std::size_t b = 0; b < enc.buckets.size(); ++b) {
        const auto& bucket = enc.buckets[b];
        auto pooled = attention_pool(params, bucket.members, bucket.topic, &enc.pools[b]);
        std::copy(pooled.begin(), pooled.end(), enc.pooled.row(b).begin());
        enc.topic_ids.push_back(bucket.topic);
      }
      break;
    }
    case Granularity::kWord: {
      enc.pooled = Matrix(enc.word_positions.size(), dc);
      for (std::size_t r = 0; r < enc.word_positions.size(); ++r) {
        const auto c = enc.context.output.row(enc.word_positions[r]);
        std::copy(c.begin(), c.end(), enc.pooled.row(r).begin());
        enc.topic_ids.push_back(kNoTopic);
      }
      break;
    }
    case Granularity::kGlobal: {
      enc.pooled = Matrix(1, dc);
      auto mean = enc.pooled.row(0);
      const double inv = 1.0 / static_cast<double>(enc.word_positions.size());
      for (auto pos : enc.word_positions) axpy(inv, enc.context.output.row(pos), mean);
      enc.topic_ids.push_back(kNoTopic);
      break;
    }
  }

  enc.embeddings = Matrix(enc.pooled.rows(), params.shape.output_dim);
  for (std::size_t r = 0; r < enc.pooled.rows(); ++r) {
    enc.projections.push_back(project(params, enc.pooled.row(r), normalize));
    const auto& v = enc.projections.back().value;
    std::copy(v.begin(), v.end(), enc.embeddings.row(r).begin());
  }
  return enc;
}

void backward_text(const EncoderParams& params, const PreparedText& text,
                   const EncodedText& enc, const Matrix& d_embeddings,
                   bool normalize, EncoderParams& grad) {
  const auto& tokens = text.tokens.tokens;
  const std::size_t dc = params.shape.context_dim;
  Matrix d_pooled(enc.pooled.rows(), dc);
  for (std::size_t r = 0; r < enc.pooled.rows(); ++r) {
    project_backward(params, enc.pooled.row(r), enc.projections[r],
                     d_embeddings.row(r), normalize, grad, d_pooled.row(r));
  }

  Matrix d_context(tokens.size(), dc);
  switch (enc.granularity) {
    case Granularity::kTopic: {
      for (std::size_t b = 0; b < enc.buckets.size(); ++b) {
        const auto& bucket = enc.buckets[b];
        Matrix d_members(bucket.members.rows(), dc);
        attention_pool_backward(params, bucket.members, bucket.topic, enc.pools[b],
                                d_pooled.row(b), grad, d_members);
        for (std::size_t r = 0; r < bucket.positions.size(); ++r) {
          axpy(1.0, d_members.row(r), d_context.row(bucket.positions[r]));
        }
      }
      break;
    }
    case Granularity::kWord: {
      for (std::size_t r = 0; r < enc.word_positions.size(); ++r) {
        axpy(1.0, d_pooled.row(r), d_context.row(enc.word_positions[r]));
      }
      break;
    }
    case Granularity::kGlobal: {
      const double inv = 1.0 / static_cast<double>(enc.word_positions.size());
      for (auto pos : enc.word_positions) axpy(inv, d_pooled.row(0), d_context.row(pos));
      break;
    }
  }
  contextual_backward(params, tokens, enc.context, d_context, grad);
}

Representation to_representation(std::string text_id, Granularity requested,
                                  const EncodedText& encoded) {
  Representation rep;
  rep.text_id = std::move(text_id);
  rep.granularity = requested;
  rep.dim = encoded.embeddings.cols();
  rep.topic_ids = encoded.topic_ids;
  rep.values.reserve(encoded.embeddings.size());
  for (double v : encoded.embeddings.values()) rep.values.push_back(static_cast<float>(v));
  for (const auto& p : encoded.projections) rep.degenerate.push_back(p.degenerate ? 1 : 0);
  return rep;
}

PreparedText prepare_text(const EncodingContext& ctx, std::string text_id,
                          std::string_view raw, TextKind kind) {
  PreparedText out;
  out.tokens = tokenize(*ctx.vocab, raw, kind, ctx.limits, std::move(text_id));
  const auto topics = infer_doc_topics(*ctx.lda, out.tokens);
  out.table = extract_word_topics(*ctx.lda, out.tokens, topics.proportions, ctx.extraction);
  return out;
}

Representation encode_text(const EncodingContext& ctx, std::string text_id,
                           std::string_view raw, TextKind kind,
                           Granularity granularity) {
  auto prepared = prepare_text(ctx, std::move(text_id), raw, kind);
  const auto encoded = forward_text(*ctx.params, prepared, granularity, ctx.normalize);
  return to_representation(std::move(prepared.tokens.text_id), granularity, encoded);
}

}  // namespace topicret

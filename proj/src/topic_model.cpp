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

#include "topicret/topic_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "topicret/binary_io.hpp"
#include "topicret/common.hpp"

namespace topicret {

namespace {

constexpr char kLdaMagic[4] = {'T', 'G', 'L', 'D'};
constexpr std::uint32_t kLdaVersion = 1;

// Draws an index from unnormalized cumulative weights.
std::size_t sample_cumulative(std::span<const double> cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

}  // namespace

LdaConfig LdaConfig::with_topics(std::size_t k) {
  LdaConfig c;
  c.topics = k;
  c.alpha = 1.0 / static_cast<double>(k);
  c.eta = 1.0 / static_cast<double>(k);
  return c;
}

void LdaConfig::validate() const {
  if (topics < 2) throw Error(ErrorCode::kInvalidConfig, "K must be >= 2");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be > 0");
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidConfig, "eta must be > 0");
}

LdaModel::LdaModel(LdaConfig config, Matrix topic_word, Matrix doc_topic)
    : config_(config),
      topic_word_(std::move(topic_word)),
      doc_topic_(std::move(doc_topic)) {}

bool is_topic_word(TokenId id) {
  return id >= static_cast<TokenId>(special::kCount);
}

LdaModel fit_lda(std::span<const TokenSeq> docs, std::size_t vocab_size,
                 const LdaConfig& config) {
  config.validate();
  const std::size_t k_topics = config.topics;
  const double alpha = config.alpha;
  const double eta = config.eta;
  const double v_eta = static_cast<double>(vocab_size) * eta;

  // Flattened corpus: words[offsets[d] .. offsets[d+1]).
  std::vector<TokenId> words;
  std::vector<std::size_t> offsets{0};
  for (const auto& doc : docs) {
    for (auto id : doc.tokens) {
      if (!is_topic_word(id)) continue;
      if (static_cast<std::size_t>(id) >= vocab_size) {
        throw Error(ErrorCode::kShapeError, "token id outside vocabulary");
      }
      words.push_back(id);
    }
    offsets.push_back(words.size());
  }
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "corpus has no topic words");
  }

  const std::size_t n_docs = docs.size();
  std::vector<std::int32_t> doc_topic_counts(n_docs * k_topics, 0);
  std::vector<std::int32_t> word_topic_counts(vocab_size * k_topics, 0);
  std::vector<std::int64_t> topic_counts(k_topics, 0);
  std::vector<std::uint32_t> assignment(words.size());

  Rng rng(config.seed);
  for (std::size_t d = 0; d < n_docs; ++d) {
    for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) {
      const auto k = static_cast<std::uint32_t>(rng.below(k_topics));
      assignment[i] = k;
      ++doc_topic_counts[d * k_topics + k];
      ++word_topic_counts[words[i] * k_topics + k];
      ++topic_counts[k];
    }
  }

  std::vector<double> cumulative(k_topics);
  for (std::size_t iter = 0; iter < config.train_iters; ++iter) {
    for (std::size_t d = 0; d < n_docs; ++d) {
      auto* dt = &doc_topic_counts[d * k_topics];
      for (std::size_t i = offsets[d]; i < offsets[d + 1]; ++i) {
        auto* wt = &word_topic_counts[words[i] * k_topics];
        std::uint32_t k = assignment[i];
        --dt[k];
        --wt[k];
        --topic_counts[k];

        double total = 0.0;
        for (std::size_t t = 0; t < k_topics; ++t) {
          total += (dt[t] + alpha) * (wt[t] + eta) / (topic_counts[t] + v_eta);
          cumulative[t] = total;
        }
        k = static_cast<std::uint32_t>(sample_cumulative(cumulative, rng));

        assignment[i] = k;
        ++dt[k];
        ++wt[k];
        ++topic_counts[k];
      }
    }
  }

  Matrix doc_topic(n_docs, k_topics);
  for (std::size_t d = 0; d < n_docs; ++d) {
    const double len = static_cast<double>(offsets[d + 1] - offsets[d]);
    const double denom = len + static_cast<double>(k_topics) * alpha;
    for (std::size_t t = 0; t < k_topics; ++t) {
      doc_topic(d, t) = (doc_topic_counts[d * k_topics + t] + alpha) / denom;
    }
  }
  Matrix topic_word(k_topics, vocab_size);
  for (std::size_t t = 0; t < k_topics; ++t) {
    const double denom = static_cast<double>(topic_counts[t]) + v_eta;
    for (std::size_t w = 0; w < vocab_size; ++w) {
      topic_word(t, w) = (word_topic_counts[w * k_topics + t] + eta) / denom;
    }
  }
  return LdaModel(config, std::move(topic_word), std::move(doc_topic));
}

TopicInference infer_doc_topics(const LdaModel& model, const TokenSeq& text) {
  const auto& config = model.config();
  const std::size_t k_topics = model.topics();
  const double alpha = config.alpha;

  std::vector<TokenId> words;
  for (auto id : text.tokens) {
    if (is_topic_word(id) && static_cast<std::size_t>(id) < model.vocab_size()) {
      words.push_back(id);
    }
  }
  TopicInference out;
  if (words.empty()) {
    out.proportions.assign(k_topics, 1.0 / static_cast<double>(k_topics));
    out.degenerate = true;
    return out;
  }

  Rng rng(splitmix64(config.seed ^ fnv1a64(text.text_id)));
  const auto& phi = model.topic_word();
  std::vector<std::int32_t> counts(k_topics, 0);
  std::vector<std::uint32_t> assignment(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    assignment[i] = static_cast<std::uint32_t>(rng.below(k_topics));
    ++counts[assignment[i]];
  }

  const std::size_t sweeps = std::max<std::size_t>(config.infer_iters, 1);
  const std::size_t burn_in = sweeps / 2;
  std::vector<double> accumulated(k_topics, 0.0);
  std::vector<double> cumulative(k_topics);
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto w = static_cast<std::size_t>(words[i]);
      --counts[assignment[i]];
      double total = 0.0;
      for (std::size_t t = 0; t < k_topics; ++t) {
        total += (counts[t] + alpha) * phi(t, w);
        cumulative[t] = total;
      }
      assignment[i] = static_cast<std::uint32_t>(sample_cumulative(cumulative, rng));
      ++counts[assignment[i]];
    }
    if (s >= burn_in) {
      for (std::size_t t = 0; t < k_topics; ++t) accumulated[t] += counts[t];
    }
  }

  const double samples = static_cast<double>(sweeps - burn_in);
  const double denom =
      static_cast<double>(words.size()) + static_cast<double>(k_topics) * alpha;
  out.proportions.resize(k_topics);
  for (std::size_t t = 0; t < k_topics; ++t) {
    out.proportions[t] = (accumulated[t] / samples + alpha) / denom;
  }
  return out;
}

void TopicExtractionConfig::validate() const {
  // theta_t above 1 is accepted: it switches extraction off.
  if (!(theta_t >= 0.0) || !std::isfinite(theta_t)) {
    throw Error(ErrorCode::kInvalidConfig, "theta_t must be >= 0");
  }
  if (!(theta_wf >= 0.0 && theta_wf <= 1.0) ||
      !(theta_wr >= 0.0 && theta_wr <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "word thresholds must be in [0, 1]");
  }
}

std::size_t TopicAssignmentTable::total_assignments() const {
  std::size_t n = 0;
  for (const auto& p : positions) n += p.size();
  return n;
}

std::vector<std::int32_t> TopicAssignmentTable::topics() const {
  std::vector<std::int32_t> out;
  for (const auto& p : positions) out.insert(out.end(), p.begin(), p.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TopicAssignmentTable extract_word_topics(const LdaModel& model,
                                         const TokenSeq& text,
                                         std::span<const double> topic_dist,
                                         const TopicExtractionConfig& config) {
  const std::size_t k_topics = model.topics();
  if (topic_dist.size() != k_topics) {
    throw Error(ErrorCode::kShapeError, "topic distribution has wrong length");
  }

  std::vector<TokenId> distinct;
  for (auto id : text.tokens) {
    if (is_topic_word(id) && static_cast<std::size_t>(id) < model.vocab_size()) {
      distinct.push_back(id);
    }
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const double l = static_cast<double>(distinct.size());

  // word_topics[j] collects topics for distinct[j], ascending by t.
  std::vector<std::vector<std::int32_t>> word_topics(distinct.size());
  std::vector<std::size_t> order(distinct.size());
  for (std::size_t t = 0; t < k_topics; ++t) {
    if (!(topic_dist[t] >= config.theta_t)) continue;
    const auto probs = model.topic_word().row(t);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // `distinct` is ascending, so index order is the id tie-break.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return probs[distinct[a]] > probs[distinct[b]];
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t j = order[r];
      const double p = probs[distinct[j]];
      const double rank_ratio = static_cast<double>(r + 1) / l;
      if (p >= config.theta_wf || rank_ratio <= config.theta_wr) {
        word_topics[j].push_back(static_cast<std::int32_t>(t));
      }
    }
  }

  TopicAssignmentTable table;
  table.positions.resize(text.tokens.size());
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    const auto id = text.tokens[i];
    if (!is_topic_word(id)) continue;
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), id);
    if (it == distinct.end() || *it != id) continue;
    table.positions[i] = word_topics[it - distinct.begin()];
  }
  return table;
}

std::vector<std::uint8_t> LdaModel::serialize() const {
  io::ByteWriter w;
  w.put_string(std::string_view(kLdaMagic, 4));
  w.put<std::uint32_t>(kLdaVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(topics()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(vocab_size()));
  w.put<double>(config_.alpha);
  w.put<double>(config_.eta);
  w.put<std::uint64_t>(config_.seed);
  for (double v : topic_word_.values()) w.put<double>(v);
  for (double v : doc_topic_.values()) w.put<double>(v);
  return std::move(w.bytes());
}

LdaModel LdaModel::deserialize(std::span<const std::uint8_t> bytes,
                               std::size_t infer_iters) {
  io::ByteReader r(bytes);
  if (r.get_string(4) != std::string_view(kLdaMagic, 4)) {
    throw Error(ErrorCode::kFormatError, "not a TGLD file");
  }
  if (r.get<std::uint32_t>() != kLdaVersion) {
    throw Error(ErrorCode::kFormatError, "unsupported TGLD version");
  }
  LdaConfig config;
  config.topics = r.get<std::uint32_t>();
  const std::size_t vocab = r.get<std::uint32_t>();
  config.alpha = r.get<double>();
  config.eta = r.get<double>();
  config.seed = r.get<std::uint64_t>();
  config.infer_iters = infer_iters;
  if (config.topics == 0) throw Error(ErrorCode::kFormatError, "K is zero");

  const std::size_t tw_bytes = config.topics * vocab * sizeof(double);
  if (r.remaining() < tw_bytes ||
      (r.remaining() - tw_bytes) % (config.topics * sizeof(double)) != 0) {
    throw Error(ErrorCode::kFormatError, "TGLD payload size mismatch");
  }
  const std::size_t docs = (r.remaining() - tw_bytes) / (config.topics * sizeof(double));
  Matrix topic_word(config.topics, vocab);
  for (double& v : topic_word.values()) v = r.get<double>();
  Matrix doc_topic(docs, config.topics);
  for (double& v : doc_topic.values()) v = r.get<double>();
  return LdaModel(config, std::move(topic_word), std::move(doc_topic));
}

void LdaModel::save(const std::filesystem::path& path) const {
  io::write_file(path, serialize());
}

LdaModel LdaModel::load(const std::filesystem::path& path,
                        std::size_t infer_iters) {
  return deserialize(io::read_file(path), infer_iters);
}

}  // namespace topicret

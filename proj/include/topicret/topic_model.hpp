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
#include <filesystem>
#include <span>
#include <vector>

#include "topicret/corpus.hpp"
#include "topicret/tensor.hpp"

namespace topicret {

struct LdaConfig {
  std::size_t topics = 8;
  double alpha = 1.0 / 8;
  double eta = 1.0 / 8;
  std::size_t train_iters = 200;
  std::size_t infer_iters = 50;
  std::uint64_t seed = 1;

  // alpha = eta = 1/K.
  static LdaConfig with_topics(std::size_t k);
  void validate() const;
  bool operator==(const LdaConfig&) const = default;
};

// Fitted collapsed-Gibbs LDA. Both matrices are row-stochastic.
class LdaModel {
 public:
  LdaModel() = default;
  LdaModel(LdaConfig config, Matrix topic_word, Matrix doc_topic);

  const LdaConfig& config() const { return config_; }
  std::size_t topics() const { return topic_word_.rows(); }
  std::size_t vocab_size() const { return topic_word_.cols(); }
  std::size_t documents() const { return doc_topic_.rows(); }

  const Matrix& topic_word() const { return topic_word_; }
  const Matrix& doc_topic() const { return doc_topic_; }

  void set_infer_iters(std::size_t n) { config_.infer_iters = n; }

  // TGLD: magic, u32 version, u32 K, u32 V, f64 alpha, f64 eta, u64 seed,
  // then topic_word (K×V) and doc_topic (D×K) as f64. D follows from size.
  std::vector<std::uint8_t> serialize() const;
  static LdaModel deserialize(std::span<const std::uint8_t> bytes,
                              std::size_t infer_iters);
  void save(const std::filesystem::path& path) const;
  static LdaModel load(const std::filesystem::path& path,
                       std::size_t infer_iters);

 private:
  LdaConfig config_;
  Matrix topic_word_;
  Matrix doc_topic_;
};

// Words the topic model sees: every non-special token.
bool is_topic_word(TokenId id);

LdaModel fit_lda(std::span<const TokenSeq> docs, std::size_t vocab_size,
                 const LdaConfig& config);

struct TopicInference {
  std::vector<double> proportions;
  bool degenerate = false;
};

// Fold-in Gibbs with topic_word held fixed, seeded by (model seed, text id).
// Proportions are averaged over the second half of the sweeps.
TopicInference infer_doc_topics(const LdaModel& model, const TokenSeq& text);

struct TopicExtractionConfig {
  double theta_t = 0.15;
  double theta_wf = 0.005;
  double theta_wr = 0.2;

  void validate() const;
  bool operator==(const TopicExtractionConfig&) const = default;
};

// Per-position topic lists for one text. Lists are sorted and unique.
struct TopicAssignmentTable {
  std::vector<std::vector<std::int32_t>> positions;

  std::size_t size() const { return positions.size(); }
  std::size_t total_assignments() const;
  std::vector<std::int32_t> topics() const;
  bool operator==(const TopicAssignmentTable&) const = default;
};

// Representative topics pass theta_t. Within each, a distinct word of the
// text is kept when its topic-word probability passes theta_wf or its
// 1-based rank among the text's words (descending probability, ascending
// id on ties) divided by the distinct-word count is at most theta_wr.
TopicAssignmentTable extract_word_topics(const LdaModel& model,
                                         const TokenSeq& text,
                                         std::span<const double> topic_dist,
                                         const TopicExtractionConfig& config);

}  // namespace topicret

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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topicret/common.hpp"
#include "topicret/corpus.hpp"
#include "topicret/encoder.hpp"
#include "topicret/index.hpp"
#include "topicret/topic_model.hpp"
#include "topicret/trainer.hpp"

namespace topicret {

// Everything one workflow run depends on. The file form is flat key=value
// lines; keys are the CLI flag names without the leading dashes.
struct RunConfig {
  std::string collection;
  std::string queries;
  std::string qrels;
  std::string triples;
  std::string train_queries;
  std::string artifacts = "artifacts";

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::uint64_t min_count = 1;

  std::size_t topics = 8;
  std::optional<double> alpha;  // unset = 1/K
  std::optional<double> eta;    // unset = 1/K
  std::size_t lda_train_iters = 200;
  std::size_t lda_infer_iters = 50;

  double theta_t = 0.15;
  double theta_wf = 0.005;
  double theta_wr = 0.2;

  std::size_t negatives = 3;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool normalize = true;
  Granularity granularity = Granularity::kTopic;

  std::size_t dim = 256;
  std::size_t context_dim = 64;
  std::size_t attention_dim = 64;
  std::size_t max_query_len = 32;
  std::size_t max_doc_len = 180;

  QuantKind scheme = QuantKind::kF32;
  std::size_t k = 1000;

  // Throws ParseError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value, std::size_t line = 0);
  std::string get(std::string_view key) const;
  static const std::vector<std::string_view>& keys();

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);
  std::string render() const;

  void validate() const;

  LdaConfig lda() const;
  TopicExtractionConfig extraction() const;
  TrainConfig train() const;
  LengthLimits limits() const;
  EncoderShape encoder_shape(std::size_t vocab_size) const;
  std::uint64_t init_seed() const;

  // Canonical text of every setting that shapes the learned artifacts. Paths,
  // threads, k, and scheme are left out.
  std::string fingerprint_text() const;
  Fingerprint fingerprint(const Vocab& vocab) const;

  std::filesystem::path artifact(std::string_view name) const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace topicret

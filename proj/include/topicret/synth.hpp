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
#include <string>
#include <vector>

#include "topicret/corpus.hpp"

namespace topicret {

// Planted retrieval task. Each document is built on a theme (an unordered
// pair of topics with disjoint vocabularies), queries sample words from one
// theme, and every document sharing that theme is relevant.
struct SynthConfig {
  std::size_t topics = 8;
  std::size_t docs = 2000;
  std::size_t queries = 200;
  std::size_t train_queries = 400;
  std::size_t negatives = 3;
  std::size_t words_per_topic = 40;
  std::size_t noise_words = 200;
  double noise_rate = 0.1;
  std::size_t min_doc_words = 150;
  std::size_t max_doc_words = 178;
  std::size_t min_query_words = 6;
  std::size_t max_query_words = 12;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthCorpus {
  TextCollection docs;
  TextCollection queries;
  TextCollection train_queries;
  Judgments qrels;
  TrainingSet triples;
};

SynthCorpus generate_synth(const SynthConfig& config);

// File names written by write_synth, relative to its output directory.
namespace synth_files {
inline constexpr const char* kCollection = "collection.tsv";
inline constexpr const char* kQueries = "queries.tsv";
inline constexpr const char* kTrainQueries = "train_queries.tsv";
inline constexpr const char* kQrels = "qrels.txt";
inline constexpr const char* kTriples = "triples.tsv";
}  // namespace synth_files

void write_synth(const std::filesystem::path& dir, const SynthCorpus& corpus);

// Single-topic documents over disjoint per-topic vocabularies ("p<t>w<i>").
struct PlantedCorpus {
  TextCollection docs;
  std::vector<std::size_t> doc_topic;
  std::vector<std::vector<std::string>> topic_words;
};

PlantedCorpus generate_planted(std::size_t topics, std::size_t words_per_topic,
                               std::size_t docs, std::size_t doc_words,
                               std::uint64_t seed);

}  // namespace topicret

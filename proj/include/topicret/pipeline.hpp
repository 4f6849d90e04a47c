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

#include <filesystem>
#include <span>
#include <vector>

#include "topicret/config.hpp"
#include "topicret/corpus.hpp"
#include "topicret/encoder.hpp"
#include "topicret/index.hpp"
#include "topicret/topic_model.hpp"
#include "topicret/trainer.hpp"

namespace topicret {

namespace artifact_files {
inline constexpr const char* kVocab = "vocab.tsv";
inline constexpr const char* kLda = "lda.tgld";
inline constexpr const char* kCheckpoint = "encoder.tgck";
inline constexpr const char* kIndex = "index.tgix";
inline constexpr const char* kRun = "run.trec";
inline constexpr const char* kMetrics = "metrics.tsv";
inline constexpr const char* kTrainLog = "train_log.tsv";
}  // namespace artifact_files

std::vector<std::string> raw_texts(const TextCollection& c);

std::vector<TokenSeq> tokenize_collection(const Vocab& vocab, const TextCollection& c,
                                          TextKind kind, const LengthLimits& limits);

// Vocabulary and topic model fitted on the document collection.
struct TopicStage {
  Vocab vocab;
  LdaModel lda;
};
TopicStage fit_topic_stage(const RunConfig& config, const TextCollection& docs);

// Tokenization, fold-in and word-topic extraction for every text; runs in
// parallel and keeps collection order.
std::vector<PreparedText> prepare_collection(const EncodingContext& ctx,
                                             const TextCollection& c, TextKind kind);

struct TrainingData {
  std::vector<PreparedText> texts;
  std::vector<TrainingExample> examples;
};

// Prepares only the texts the triples reference. Unknown ids throw
// IncompatibleArtifacts.
TrainingData prepare_training(const EncodingContext& ctx, const TextCollection& docs,
                              const TextCollection& queries, const TrainingSet& triples);

std::vector<Representation> encode_collection(const EncodingContext& ctx,
                                              const TextCollection& c, TextKind kind,
                                              Granularity granularity);

// Refuses a checkpoint whose fingerprint differs from `expected`, then encodes
// the collection, quantizes it, and writes the index when `out` is non-empty.
RepresentationIndex build_index(const EncodingContext& ctx, const TextCollection& docs,
                                const Checkpoint& checkpoint, const Fingerprint& expected,
                                QuantKind scheme, Granularity granularity,
                                const std::filesystem::path& out = {});

// Artifacts produced by lda-train and train, loaded and cross-checked.
struct Workspace {
  RunConfig config;
  Vocab vocab;
  LdaModel lda;
  Checkpoint checkpoint;
  Fingerprint fingerprint{};

  static Workspace load(const RunConfig& config);
  EncodingContext context() const;
};

}  // namespace topicret

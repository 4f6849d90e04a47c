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

#include "topicret/pipeline.hpp"

#include <exception>
#include <unordered_map>

#include "topicret/binary_io.hpp"

namespace topicret {

namespace {

template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, F f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out[u] = f(u);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

std::vector<std::string> raw_texts(const TextCollection& c) {
  std::vector<std::string> out;
  out.reserve(c.size());
  for (const auto& r : c) out.push_back(r.text);
  return out;
}

std::vector<TokenSeq> tokenize_collection(const Vocab& vocab, const TextCollection& c,
                                          TextKind kind, const LengthLimits& limits) {
  std::vector<TokenSeq> out;
  out.reserve(c.size());
  for (const auto& r : c) out.push_back(tokenize(vocab, r.text, kind, limits, r.id));
  return out;
}

TopicStage fit_topic_stage(const RunConfig& config, const TextCollection& docs) {
  if (docs.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty collection");
  const auto texts = raw_texts(docs);
  TopicStage s;
  s.vocab = Vocab::build(texts, config.min_count);
  const auto seqs =
      tokenize_collection(s.vocab, docs, TextKind::kDocument, config.limits());
  s.lda = fit_lda(seqs, s.vocab.size(), config.lda());
  return s;
}

std::vector<PreparedText> prepare_collection(const EncodingContext& ctx,
                                             const TextCollection& c, TextKind kind) {
  return parallel_map<PreparedText>(c.size(), [&](std::size_t i) {
    return prepare_text(ctx, c[i].id, c[i].text, kind);
  });
}

TrainingData prepare_training(const EncodingContext& ctx, const TextCollection& docs,
                              const TextCollection& queries, const TrainingSet& triples) {
  struct Pending {
    const TextCollection::Record* record;
    TextKind kind;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> query_slot, doc_slot;
  auto slot = [&](std::unordered_map<std::string, std::size_t>& slots,
                  const TextCollection& c, const std::string& id, TextKind kind) {
    auto it = slots.find(id);
    if (it != slots.end()) return it->second;
    const auto* rec = c.find(id);
    if (!rec) {
      throw Error(ErrorCode::kIncompatibleArtifacts,
                  "triples reference unknown text '" + id + "'");
    }
    slots.emplace(id, pending.size());
    pending.push_back({rec, kind});
    return pending.size() - 1;
  };

  TrainingData data;
  for (const auto& t : triples.triples) {
    TrainingExample ex;
    ex.query = slot(query_slot, queries, t.query_id, TextKind::kQuery);
    ex.positive = slot(doc_slot, docs, t.positive_id, TextKind::kDocument);
    for (const auto& n : t.negative_ids) {
      ex.negatives.push_back(slot(doc_slot, docs, n, TextKind::kDocument));
    }
    data.examples.push_back(std::move(ex));
  }
  data.texts = parallel_map<PreparedText>(pending.size(), [&](std::size_t i) {
    return prepare_text(ctx, pending[i].record->id, pending[i].record->text,
                        pending[i].kind);
  });
  return data;
}

std::vector<Representation> encode_collection(const EncodingContext& ctx,
                                              const TextCollection& c, TextKind kind,
                                              Granularity granularity) {
  return parallel_map<Representation>(c.size(), [&](std::size_t i) {
    return encode_text(ctx, c[i].id, c[i].text, kind, granularity);
  });
}

RepresentationIndex build_index(const EncodingContext& ctx, const TextCollection& docs,
                                const Checkpoint& checkpoint, const Fingerprint& expected,
                                QuantKind scheme, Granularity granularity,
                                const std::filesystem::path& out) {
  if (checkpoint.fingerprint != expected) {
    throw Error(ErrorCode::kIncompatibleArtifacts,
                "checkpoint fingerprint " + to_hex(checkpoint.fingerprint) +
                    " does not match configuration " + to_hex(expected));
  }
  EncodingContext c = ctx;
  c.params = &checkpoint.params;
  const auto reps = encode_collection(c, docs, TextKind::kDocument, granularity);
  auto index = RepresentationIndex::build(reps, checkpoint.params.projection.rows(),
                                          scheme, granularity, expected);
  if (!out.empty()) {
    index.save(out);
    return RepresentationIndex::load(out);
  }
  return index;
}

Workspace Workspace::load(const RunConfig& config) {
  Workspace w;
  w.config = config;
  w.vocab = Vocab::parse(io::read_text_file(config.artifact(artifact_files::kVocab)));
  w.lda = LdaModel::load(config.artifact(artifact_files::kLda), config.lda_infer_iters);
  if (w.lda.vocab_size() != w.vocab.size() || w.lda.topics() != config.topics) {
    throw Error(ErrorCode::kIncompatibleArtifacts,
                "topic model does not match vocabulary or topic count");
  }
  w.checkpoint = Checkpoint::load(config.artifact(artifact_files::kCheckpoint));
  w.fingerprint = config.fingerprint(w.vocab);
  if (w.checkpoint.fingerprint != w.fingerprint) {
    throw Error(ErrorCode::kIncompatibleArtifacts,
                "encoder checkpoint was trained under a different configuration");
  }
  return w;
}

EncodingContext Workspace::context() const {
  EncodingContext ctx;
  ctx.vocab = &vocab;
  ctx.lda = &lda;
  ctx.params = &checkpoint.params;
  ctx.extraction = config.extraction();
  ctx.limits = config.limits();
  ctx.normalize = config.normalize;
  return ctx;
}

}  // namespace topicret

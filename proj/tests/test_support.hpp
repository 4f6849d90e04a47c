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

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "topicret/common.hpp"
#include "topicret/encoder.hpp"
#include "topicret/pipeline.hpp"
#include "topicret/synth.hpp"

namespace topicret::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("topicret_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Representation random_representation(Rng& rng, std::string id, std::size_t entries,
                                             std::size_t dim, bool unit = false) {
  Representation r;
  r.text_id = std::move(id);
  r.dim = dim;
  r.granularity = Granularity::kWord;
  r.topic_ids.assign(entries, kNoTopic);
  r.degenerate.assign(entries, 0);
  r.values.resize(entries * dim);
  for (std::size_t e = 0; e < entries; ++e) {
    double norm = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = rng.uniform(-1.0, 1.0);
      r.values[e * dim + c] = static_cast<float>(v);
      norm += v * v;
    }
    if (unit) {
      for (std::size_t c = 0; c < dim; ++c) {
        r.values[e * dim + c] = static_cast<float>(r.values[e * dim + c] / std::sqrt(norm));
      }
    }
  }
  return r;
}

// The 4-topic planted corpus, fitted once per test binary.
struct PlantedFixture {
  PlantedCorpus corpus;
  Vocab vocab;
  LdaModel lda;
  std::vector<TokenSeq> docs;

  static const PlantedFixture& get() {
    static const PlantedFixture f = [] {
      PlantedFixture p;
      p.corpus = generate_planted(4, 50, 400, 60, 11);
      const auto texts = raw_texts(p.corpus.docs);
      p.vocab = Vocab::build(texts, 1);
      LengthLimits limits;
      limits.max_doc_len = 62;
      p.docs = tokenize_collection(p.vocab, p.corpus.docs, TextKind::kDocument, limits);
      LdaConfig cfg = LdaConfig::with_topics(4);
      cfg.train_iters = 200;
      cfg.infer_iters = 200;
      cfg.seed = 5;
      p.lda = fit_lda(p.docs, p.vocab.size(), cfg);
      return p;
    }();
    return f;
  }
};

}  // namespace topicret::testing

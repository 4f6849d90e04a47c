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

#include "topicret/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "topicret/common.hpp"

namespace topicret {

namespace {

std::string topic_word(std::size_t topic, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "t%zuw%03zu", topic, i);
  return buf;
}

std::string noise_word(std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "n%03zu", i);
  return buf;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%05zu", prefix, i);
  return buf;
}

struct Theme {
  std::size_t a;
  std::size_t b;
};

std::string theme_query(Rng& rng, const SynthConfig& c, const Theme& t) {
  const std::size_t n =
      c.min_query_words + rng.below(c.max_query_words - c.min_query_words + 1);
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t topic = rng.uniform() < 0.5 ? t.a : t.b;
    if (i) text += ' ';
    text += topic_word(topic, rng.below(c.words_per_topic));
  }
  return text;
}

}  // namespace

void SynthConfig::validate() const {
  if (topics < 2) throw Error(ErrorCode::kInvalidConfig, "synth needs >= 2 topics");
  if (docs < 1 || queries < 1 || words_per_topic < 1) {
    throw Error(ErrorCode::kInvalidConfig, "synth sizes must be positive");
  }
  if (min_doc_words < 1 || min_doc_words > max_doc_words || min_query_words < 1 ||
      min_query_words > max_query_words) {
    throw Error(ErrorCode::kInvalidConfig, "bad synth length range");
  }
  if (noise_rate < 0.0 || noise_rate >= 1.0 || (noise_rate > 0.0 && noise_words == 0)) {
    throw Error(ErrorCode::kInvalidConfig, "bad synth noise settings");
  }
  if (train_queries > 0 && negatives < 1) {
    throw Error(ErrorCode::kInvalidConfig, "synth triples need >= 1 negative");
  }
}

SynthCorpus generate_synth(const SynthConfig& c) {
  c.validate();
  Rng rng(splitmix64(c.seed));
  std::vector<Theme> themes;
  for (std::size_t a = 0; a < c.topics; ++a) {
    for (std::size_t b = a + 1; b < c.topics; ++b) themes.push_back({a, b});
  }

  SynthCorpus out;
  std::vector<std::size_t> doc_theme(c.docs);
  std::vector<std::vector<std::size_t>> theme_docs(themes.size());
  for (std::size_t d = 0; d < c.docs; ++d) {
    const std::size_t th = rng.below(themes.size());
    doc_theme[d] = th;
    theme_docs[th].push_back(d);
    const double weight = rng.uniform(0.3, 0.7);
    const std::size_t n =
        c.min_doc_words + rng.below(c.max_doc_words - c.min_doc_words + 1);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ' ';
      if (rng.uniform() < c.noise_rate) {
        text += noise_word(rng.below(c.noise_words));
        continue;
      }
      const std::size_t topic = rng.uniform() < weight ? themes[th].a : themes[th].b;
      text += topic_word(topic, rng.below(c.words_per_topic));
    }
    out.docs.add(numbered("d", d), std::move(text));
  }

  std::vector<std::size_t> populated;
  for (std::size_t th = 0; th < themes.size(); ++th) {
    if (!theme_docs[th].empty()) populated.push_back(th);
  }

  for (std::size_t q = 0; q < c.queries; ++q) {
    const std::size_t th = populated[rng.below(populated.size())];
    const std::string qid = numbered("q", q);
    out.queries.add(qid, theme_query(rng, c, themes[th]));
    for (std::size_t d : theme_docs[th]) {
      out.qrels.relevant[qid].insert(std::string(out.docs[d].id));
    }
  }

  out.triples.negatives = c.train_queries > 0 ? c.negatives : 0;
  for (std::size_t q = 0; q < c.train_queries; ++q) {
    const std::size_t th = populated[rng.below(populated.size())];
    const std::string qid = numbered("tq", q);
    out.train_queries.add(qid, theme_query(rng, c, themes[th]));
    TrainingTriple triple;
    triple.query_id = qid;
    const auto& pos = theme_docs[th];
    triple.positive_id = out.docs[pos[rng.below(pos.size())]].id;
    while (triple.negative_ids.size() < c.negatives) {
      const std::size_t d = rng.below(c.docs);
      if (doc_theme[d] == th) continue;
      const auto& id = out.docs[d].id;
      if (std::find(triple.negative_ids.begin(), triple.negative_ids.end(), id) !=
          triple.negative_ids.end()) {
        continue;
      }
      triple.negative_ids.push_back(id);
    }
    out.triples.triples.push_back(std::move(triple));
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  write_collection(dir / synth_files::kCollection, corpus.docs);
  write_collection(dir / synth_files::kQueries, corpus.queries);
  write_collection(dir / synth_files::kTrainQueries, corpus.train_queries);
  write_qrels(dir / synth_files::kQrels, corpus.qrels);
  write_triples(dir / synth_files::kTriples, corpus.triples);
}

PlantedCorpus generate_planted(std::size_t topics, std::size_t words_per_topic,
                               std::size_t docs, std::size_t doc_words,
                               std::uint64_t seed) {
  if (topics < 1 || words_per_topic < 1 || docs < 1 || doc_words < 1) {
    throw Error(ErrorCode::kInvalidConfig, "planted corpus sizes must be positive");
  }
  Rng rng(splitmix64(seed));
  PlantedCorpus out;
  out.topic_words.resize(topics);
  for (std::size_t t = 0; t < topics; ++t) {
    for (std::size_t i = 0; i < words_per_topic; ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "p%zuw%03zu", t, i);
      out.topic_words[t].push_back(buf);
    }
  }
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t t = d % topics;
    std::string text;
    for (std::size_t i = 0; i < doc_words; ++i) {
      if (i) text += ' ';
      text += out.topic_words[t][rng.below(words_per_topic)];
    }
    out.docs.add(numbered("d", d), std::move(text));
    out.doc_topic.push_back(t);
  }
  return out;
}

}  // namespace topicret

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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "test_support.hpp"
#include "topicret/topic_model.hpp"

namespace topicret {
namespace {

using testing::PlantedFixture;

double row_sum(std::span<const double> r) { return std::accumulate(r.begin(), r.end(), 0.0); }

TEST(Lda, RowsAreStochastic) {
  const auto& f = PlantedFixture::get();
  for (std::size_t t = 0; t < f.lda.topics(); ++t) {
    EXPECT_NEAR(row_sum(f.lda.topic_word().row(t)), 1.0, 1e-9);
  }
  for (std::size_t d = 0; d < f.lda.documents(); ++d) {
    EXPECT_NEAR(row_sum(f.lda.doc_topic().row(d)), 1.0, 1e-9);
  }
  for (double v : f.lda.topic_word().values()) EXPECT_GE(v, 0.0);
}

TEST(Lda, DeterministicUnderSeed) {
  const auto& f = PlantedFixture::get();
  std::vector<TokenSeq> head(f.docs.begin(), f.docs.begin() + 40);
  LdaConfig cfg = LdaConfig::with_topics(4);
  cfg.train_iters = 30;
  const auto a = fit_lda(head, f.vocab.size(), cfg);
  const auto b = fit_lda(head, f.vocab.size(), cfg);
  EXPECT_EQ(a.topic_word(), b.topic_word());
  EXPECT_EQ(a.doc_topic(), b.doc_topic());
}

TEST(Lda, RecoversPlantedTopics) {
  const auto& f = PlantedFixture::get();
  std::vector<std::set<std::size_t>> planted;
  for (const auto& words : f.corpus.topic_words) {
    std::set<std::size_t> ids;
    for (const auto& w : words) ids.insert(static_cast<std::size_t>(f.vocab.lookup(w)));
    planted.push_back(ids);
  }
  for (double m : oracle::planted_mass(f.lda.topic_word(), planted)) EXPECT_GE(m, 0.8);
}

TEST(Lda, NoWordsIsEmptyCorpus) {
  std::vector<TokenSeq> docs = {{"d", {special::kCls, special::kDoc, special::kUnk},
                                 TextKind::kDocument}};
  try {
    fit_lda(docs, special::kCount, LdaConfig::with_topics(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
}

TEST(Lda, ConfigInvariants) {
  EXPECT_THROW(LdaConfig::with_topics(1).validate(), Error);
  LdaConfig c = LdaConfig::with_topics(4);
  EXPECT_DOUBLE_EQ(c.alpha, 0.25);
  EXPECT_DOUBLE_EQ(c.eta, 0.25);
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Lda, FileRoundTripIsBitExact) {
  const auto& f = PlantedFixture::get();
  testing::TempDir dir;
  f.lda.save(dir / "m.tgld");
  const auto back = LdaModel::load(dir / "m.tgld", f.lda.config().infer_iters);
  EXPECT_EQ(back.topic_word(), f.lda.topic_word());
  EXPECT_EQ(back.doc_topic(), f.lda.doc_topic());
  EXPECT_EQ(back.config(), f.lda.config());
  EXPECT_EQ(back.serialize(), f.lda.serialize());
}

TEST(FoldIn, TrainingDocumentMatchesFittedRow) {
  const auto& f = PlantedFixture::get();
  for (std::size_t d = 0; d < 20; ++d) {
    const auto inf = infer_doc_topics(f.lda, f.docs[d]);
    EXPECT_FALSE(inf.degenerate);
    EXPECT_NEAR(row_sum(inf.proportions), 1.0, 1e-9);
    double tv = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
      tv += std::abs(inf.proportions[t] - f.lda.doc_topic()(d, t));
    }
    EXPECT_LE(tv / 2.0, 0.1) << "doc " << d;
  }
}

TEST(FoldIn, AllUnknownIsUniformDegenerate) {
  const auto& f = PlantedFixture::get();
  const TokenSeq text{"q", {special::kCls, special::kQuery, special::kUnk, special::kUnk},
                      TextKind::kQuery};
  const auto inf = infer_doc_topics(f.lda, text);
  EXPECT_TRUE(inf.degenerate);
  for (double p : inf.proportions) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(FoldIn, ReproducibleAndIdSeeded) {
  const auto& f = PlantedFixture::get();
  auto a = f.docs[3];
  const auto first = infer_doc_topics(f.lda, a);
  EXPECT_EQ(infer_doc_topics(f.lda, a).proportions, first.proportions);
}

TopicExtractionConfig thresholds(double t, double wf, double wr) {
  TopicExtractionConfig c;
  c.theta_t = t;
  c.theta_wf = wf;
  c.theta_wr = wr;
  return c;
}

TEST(Extract, ThresholdAboveOneGivesEmptyTable) {
  const auto& f = PlantedFixture::get();
  const auto dist = infer_doc_topics(f.lda, f.docs[0]).proportions;
  const auto table = extract_word_topics(f.lda, f.docs[0], dist, thresholds(1.1, 0.0, 1.0));
  EXPECT_EQ(table.total_assignments(), 0u);
  EXPECT_EQ(table.size(), f.docs[0].size());
}

TEST(Extract, VacuousThresholdsAssignEverything) {
  const auto& f = PlantedFixture::get();
  const auto& doc = f.docs[1];
  const auto dist = infer_doc_topics(f.lda, doc).proportions;
  const auto table = extract_word_topics(f.lda, doc, dist, thresholds(0.0, 1.0, 1.0));
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (is_special(doc.tokens[i])) {
      EXPECT_TRUE(table.positions[i].empty());
    } else {
      EXPECT_EQ(table.positions[i], (std::vector<std::int32_t>{0, 1, 2, 3}));
    }
  }
}

TEST(Extract, MatchesDirectScanOnMixedDocument) {
  const auto& f = PlantedFixture::get();
  // Half the words from planted topic 0, half from topic 2.
  std::string raw;
  for (int i = 0; i < 30; ++i) {
    raw += f.corpus.topic_words[i % 2 == 0 ? 0 : 2][(i * 7) % 50] + " ";
  }
  LengthLimits limits;
  const auto doc = tokenize(f.vocab, raw, TextKind::kDocument, limits, "mixed");
  const auto dist = infer_doc_topics(f.lda, doc).proportions;
  const auto table = extract_word_topics(f.lda, doc, dist, thresholds(0.2, 0.01, 0.3));
  EXPECT_EQ(table.positions,
            oracle::word_topics(f.lda.topic_word(), doc.tokens, dist, 0.2, 0.01, 0.3));
  EXPECT_EQ(table.topics().size(), 2u);
}

TEST(Extract, Properties) {
  const auto& f = PlantedFixture::get();
  Rng rng(99);
  for (std::size_t d = 0; d < 30; ++d) {
    const auto& doc = f.docs[d];
    std::vector<double> dist(4);
    double s = 0.0;
    for (auto& p : dist) s += (p = rng.uniform());
    for (auto& p : dist) p /= s;
    const auto base = thresholds(0.2, 0.01, 0.2);
    const auto table = extract_word_topics(f.lda, doc, dist, base);
    for (auto t : table.topics()) EXPECT_GE(dist[static_cast<std::size_t>(t)], 0.2);
    // Raising theta_t never adds an assignment.
    const auto higher = extract_word_topics(f.lda, doc, dist, thresholds(0.3, 0.01, 0.2));
    // Raising theta_wf with theta_wr = 0 never adds an assignment.
    const auto wf_lo = extract_word_topics(f.lda, doc, dist, thresholds(0.2, 0.01, 0.0));
    const auto wf_hi = extract_word_topics(f.lda, doc, dist, thresholds(0.2, 0.03, 0.0));
    for (std::size_t i = 0; i < doc.size(); ++i) {
      for (auto t : higher.positions[i]) {
        EXPECT_TRUE(std::count(table.positions[i].begin(), table.positions[i].end(), t));
      }
      for (auto t : wf_hi.positions[i]) {
        EXPECT_TRUE(std::count(wf_lo.positions[i].begin(), wf_lo.positions[i].end(), t));
      }
    }
  }
}

TEST(Extract, WrongDistributionLengthIsShapeError) {
  const auto& f = PlantedFixture::get();
  std::vector<double> dist(3, 1.0 / 3);
  EXPECT_THROW(extract_word_topics(f.lda, f.docs[0], dist, {}), Error);
}

}  // namespace
}  // namespace topicret

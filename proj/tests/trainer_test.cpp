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

#include "test_support.hpp"
#include "topicret/trainer.hpp"

namespace topicret {
namespace {

TEST(Loss, UniformScoresGiveLogOfCount) {
  const std::vector<double> s = {0.7, 0.7, 0.7, 0.7};
  EXPECT_NEAR(contrastive_loss(s), std::log(4.0), 1e-15);
}

TEST(Loss, LargeMarginVanishes) {
  const std::vector<double> s = {50.0, 0.0, -1.0};
  EXPECT_LT(contrastive_loss(s), 1e-20);
  EXPECT_GE(contrastive_loss(s), 0.0);
}

TEST(Loss, HandEvaluatedExample) {
  const std::vector<double> s = {2.0, 1.0, 0.5};
  const long double want = std::log1p(std::exp(-1.0L) + std::exp(-1.5L));
  EXPECT_NEAR(contrastive_loss(s), static_cast<double>(want), 1e-15);
  EXPECT_NEAR(contrastive_loss(s), 0.464369, 5e-7);
}

TEST(Loss, ShiftInvariant) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s(4), t(4);
    const double c = rng.uniform(-100, 100);
    for (std::size_t k = 0; k < 4; ++k) {
      s[k] = rng.uniform(-5, 5);
      t[k] = s[k] + c;
    }
    EXPECT_NEAR(contrastive_loss(s), contrastive_loss(t), 1e-9);
  }
}

TEST(MaxSimTrace, TiesPickLowestRow) {
  Matrix q(1, 2), d(3, 2);
  q(0, 0) = 1.0;
  d(0, 0) = 0.5;
  d(1, 0) = 0.9;
  d(2, 0) = 0.9;
  const auto tr = maxsim_trace(q, d);
  EXPECT_EQ(tr.best[0], 1u);
  EXPECT_DOUBLE_EQ(tr.score, 0.9);
}

TEST(GradientCheck, ThreeSeedsEachGranularity) {
  for (auto g : {Granularity::kTopic, Granularity::kWord, Granularity::kGlobal}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto r = check_gradients(seed, g);
      EXPECT_LE(r.max_relative_error, 1e-4)
          << granularity_name(g) << " seed " << seed << " worst " << r.worst_tensor << "["
          << r.worst_index << "]";
      EXPECT_GT(r.coordinates, 0u);
    }
  }
}

// A small prepared training problem on the planted corpus.
struct TrainFixture {
  EncoderParams initial;
  std::vector<PreparedText> texts;
  std::vector<TrainingExample> examples;

  explicit TrainFixture(std::size_t n_examples = 6) {
    const auto& f = testing::PlantedFixture::get();
    EncoderShape s;
    s.vocab = f.vocab.size();
    s.max_len = 64;
    s.context_dim = 6;
    s.attention_dim = 5;
    s.output_dim = 8;
    s.topics = 4;
    initial = EncoderParams::initialize(s, 21);
    EncodingContext ctx;
    ctx.vocab = &f.vocab;
    ctx.lda = &f.lda;
    ctx.limits.max_doc_len = 64;
    ctx.extraction.theta_t = 0.2;
    for (std::size_t e = 0; e < n_examples; ++e) {
      TrainingExample ex;
      const std::size_t topic = e % 4;
      std::string q;
      for (std::size_t i = 0; i < 5; ++i) q += f.corpus.topic_words[topic][e + i] + " ";
      ex.query = texts.size();
      texts.push_back(prepare_text(ctx, "q" + std::to_string(e), q, TextKind::kQuery));
      const auto& pos = f.corpus.docs[topic + 4 * e];
      ex.positive = texts.size();
      texts.push_back(prepare_text(ctx, pos.id, pos.text, TextKind::kDocument));
      for (std::size_t n = 1; n <= 2; ++n) {
        const auto& neg = f.corpus.docs[(topic + n) % 4 + 4 * e];
        ex.negatives.push_back(texts.size());
        texts.push_back(prepare_text(ctx, neg.id, neg.text, TextKind::kDocument));
      }
      examples.push_back(ex);
    }
  }
};

TrainConfig small_config() {
  TrainConfig c;
  c.negatives = 2;
  c.batch_size = 2;
  c.epochs = 3;
  c.learning_rate = 1e-2;
  return c;
}

TEST(Train, ZeroLearningRateKeepsParams) {
  TrainFixture fx;
  auto c = small_config();
  c.learning_rate = 0.0;
  const auto r = train(c, fx.texts, fx.examples, fx.initial, Fingerprint{});
  EXPECT_EQ(r.checkpoint.params, fx.initial);
}

TEST(Train, SameSeedSameCheckpoint) {
  TrainFixture fx;
  const auto a = train(small_config(), fx.texts, fx.examples, fx.initial, Fingerprint{});
  const auto b = train(small_config(), fx.texts, fx.examples, fx.initial, Fingerprint{});
  EXPECT_EQ(a.checkpoint.params, b.checkpoint.params);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_EQ(a.checkpoint.epoch, 3u);
  EXPECT_FALSE(a.diverged);
}

TEST(Train, DuplicatedBatchGivesSameMeanGradient) {
  TrainFixture fx(3);
  std::vector<TrainingExample> doubled;
  for (const auto& e : fx.examples) {
    doubled.push_back(e);
    doubled.push_back(e);
  }
  const auto a = compute_batch_gradient(fx.initial, fx.texts, fx.examples,
                                        Granularity::kTopic, true);
  const auto b = compute_batch_gradient(fx.initial, fx.texts, doubled, Granularity::kTopic,
                                        true);
  EXPECT_NEAR(a.mean_loss, b.mean_loss, 1e-12);
  std::vector<const Matrix*> ga;
  a.gradient.for_each([&](std::string_view, const Matrix& m) { ga.push_back(&m); });
  std::size_t t = 0;
  b.gradient.for_each([&](std::string_view name, const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_NEAR(m.values()[i], ga[t]->values()[i], 1e-12) << name;
    }
    ++t;
  });
}

TEST(Train, IdenticalDocumentsLeaveUnusedTopicQueriesAtZero) {
  TrainFixture fx(1);
  auto texts = fx.texts;
  for (std::size_t i = 2; i < texts.size(); ++i) {
    texts[i].tokens.tokens = texts[1].tokens.tokens;
    texts[i].table = texts[1].table;
  }
  const auto g = compute_batch_gradient(fx.initial, texts, fx.examples, Granularity::kTopic,
                                        true);
  std::set<std::int32_t> used;
  for (const auto& t : texts) {
    for (auto k : t.table.topics()) used.insert(k);
  }
  for (std::int32_t k = 0; k < 4; ++k) {
    if (used.count(k)) continue;
    for (double v : g.gradient.topic_queries.row(static_cast<std::size_t>(k))) {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Train, LossTrendsDown) {
  TrainFixture fx(8);
  auto c = small_config();
  c.epochs = 10;
  c.batch_size = 4;
  const auto r = train(c, fx.texts, fx.examples, fx.initial, Fingerprint{});
  ASSERT_EQ(r.epoch_losses.size(), 10u);
  EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
}

TEST(Train, NegativeCountMustMatchConfig) {
  TrainFixture fx(2);
  auto c = small_config();
  c.negatives = 3;
  EXPECT_THROW(train(c, fx.texts, fx.examples, fx.initial, Fingerprint{}), Error);
}

TEST(Checkpoint, FileRoundTripIsBitExact) {
  testing::TempDir dir;
  Checkpoint c;
  EncoderShape s;
  s.vocab = 12;
  s.max_len = 8;
  s.context_dim = 3;
  s.attention_dim = 2;
  s.output_dim = 4;
  s.topics = 2;
  c.params = EncoderParams::initialize(s, 4);
  c.epoch = 7;
  c.fingerprint = sha256("run");
  c.save(dir / "c.tgck");
  const auto back = Checkpoint::load(dir / "c.tgck");
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.epoch, 7u);
  EXPECT_EQ(back.fingerprint, c.fingerprint);
  EXPECT_EQ(back.serialize(), c.serialize());
}

TEST(Checkpoint, CorruptMagicIsFormatError) {
  std::vector<std::uint8_t> bytes = {'N', 'O', 'P', 'E', 1, 0, 0, 0};
  try {
    Checkpoint::deserialize(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
  }
}

}  // namespace
}  // namespace topicret

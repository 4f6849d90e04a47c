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

#include <algorithm>
#include <cmath>

#include "topicret/trainer.hpp"

namespace topicret {

namespace {

PreparedText random_text(Rng& rng, TextKind kind, std::size_t words,
                         const EncoderShape& shape, std::string id) {
  PreparedText t;
  t.tokens.text_id = std::move(id);
  t.tokens.kind = kind;
  t.tokens.tokens = {special::kCls,
                     kind == TextKind::kQuery ? special::kQuery : special::kDoc};
  for (std::size_t i = 0; i < words; ++i) {
    const auto span = shape.vocab - special::kCount;
    t.tokens.tokens.push_back(
        static_cast<TokenId>(special::kCount + rng.below(span)));
  }
  t.table.positions.resize(t.tokens.size());
  for (std::size_t i = 2; i < t.tokens.size(); ++i) {
    for (std::size_t k = 0; k < shape.topics; ++k) {
      if (rng.uniform() < 0.45) {
        t.table.positions[i].push_back(static_cast<std::int32_t>(k));
      }
    }
  }
  return t;
}

}  // namespace

GradientCheckReport check_gradients(std::uint64_t seed, Granularity granularity,
                                    double step) {
  EncoderShape shape;
  shape.vocab = 20;
  shape.max_len = 10;
  shape.context_dim = 4;
  shape.attention_dim = 4;
  shape.output_dim = 4;
  shape.topics = 3;

  Rng rng(splitmix64(seed));
  EncoderParams params = EncoderParams::initialize(shape, splitmix64(seed + 1));
  // Unit-scale embeddings keep the projected norms away from zero, where the
  // normalization is sharply curved. Biases start at zero; perturb them so
  // their gradients are generic.
  for (double& v : params.token_embeddings.values()) v = rng.uniform(-1.0, 1.0);
  for (double& v : params.position_embeddings.values()) v = rng.uniform(-1.0, 1.0);
  for (double& v : params.ffn_bias.values()) v = rng.uniform(-0.3, 0.3);
  for (double& v : params.pool_bias.values()) v = rng.uniform(-0.3, 0.3);
  // Larger topic queries give non-uniform attention weights.
  for (double& v : params.topic_queries.values()) v = rng.uniform(-1.0, 1.0);

  std::vector<PreparedText> texts;
  std::vector<TrainingExample> examples;
  constexpr std::size_t kExamples = 2;
  constexpr std::size_t kNegatives = 2;
  for (std::size_t e = 0; e < kExamples; ++e) {
    TrainingExample ex;
    ex.query = texts.size();
    texts.push_back(random_text(rng, TextKind::kQuery, 2 + rng.below(3), shape,
                                "q" + std::to_string(e)));
    ex.positive = texts.size();
    texts.push_back(random_text(rng, TextKind::kDocument, 4 + rng.below(5), shape,
                                "p" + std::to_string(e)));
    for (std::size_t n = 0; n < kNegatives; ++n) {
      ex.negatives.push_back(texts.size());
      texts.push_back(random_text(rng, TextKind::kDocument, 4 + rng.below(5), shape,
                                  "n" + std::to_string(e) + "_" + std::to_string(n)));
    }
    examples.push_back(std::move(ex));
  }

  const auto analytic =
      compute_batch_gradient(params, texts, examples, granularity, true);

  std::vector<const Matrix*> grads;
  analytic.gradient.for_each(
      [&](std::string_view, const Matrix& m) { grads.push_back(&m); });

  GradientCheckReport report;
  std::size_t t = 0;
  EncoderParams probe = params;
  probe.for_each([&](std::string_view name, Matrix& m) {
    auto values = m.values();
    const auto g = grads[t]->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = batch_loss(probe, texts, examples, granularity, true);
      values[i] = saved - step;
      const double down = batch_loss(probe, texts, examples, granularity, true);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double scale = std::max({std::abs(g[i]), std::abs(numeric), 1e-6});
      const double rel = std::abs(g[i] - numeric) / scale;
      ++report.coordinates;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = std::string(name);
        report.worst_index = i;
        report.worst_analytic = g[i];
        report.worst_numeric = numeric;
      }
    }
    ++t;
  });
  return report;
}

}  // namespace topicret

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

// Reference computations written independently of the library code paths.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "topicret/corpus.hpp"
#include "topicret/encoder.hpp"
#include "topicret/tensor.hpp"

namespace topicret::oracle {

// Direct scan of the word predicate: a word's rank is one plus the number of
// distinct words that beat it (higher probability, or equal probability and
// a smaller id).
inline std::vector<std::vector<std::int32_t>> word_topics(
    const Matrix& topic_word, const std::vector<TokenId>& tokens,
    const std::vector<double>& dist, double theta_t, double theta_wf, double theta_wr) {
  std::set<TokenId> words;
  for (TokenId id : tokens) {
    if (id >= static_cast<TokenId>(special::kCount)) words.insert(id);
  }
  std::vector<std::vector<std::int32_t>> out(tokens.size());
  const double l = static_cast<double>(words.size());
  for (std::size_t t = 0; t < dist.size(); ++t) {
    if (dist[t] < theta_t) continue;
    for (TokenId w : words) {
      const double p = topic_word(t, static_cast<std::size_t>(w));
      std::size_t rank = 1;
      for (TokenId other : words) {
        const double q = topic_word(t, static_cast<std::size_t>(other));
        if (q > p || (q == p && other < w)) ++rank;
      }
      if (!(p >= theta_wf || static_cast<double>(rank) / l <= theta_wr)) continue;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == w) out[i].push_back(static_cast<std::int32_t>(t));
      }
    }
  }
  return out;
}

inline double maxsim(const Representation& q, const Representation& d) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q.dim; ++c) {
        s += static_cast<double>(q.values[i * q.dim + c]) *
             static_cast<double>(d.values[j * d.dim + c]);
      }
      best = std::max(best, s);
    }
    total += best;
  }
  return total;
}

// Every document scored, then fully sorted.
inline std::vector<std::pair<std::string, double>> rank_all(
    const Representation& q, const std::vector<Representation>& docs) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& d : docs) out.emplace_back(d.text_id, maxsim(q, d));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

inline double average_precision(const std::vector<std::string>& ranking,
                                const std::set<std::string>& relevant) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (relevant.count(ranking[i])) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return relevant.empty() ? 0.0 : sum / static_cast<double>(relevant.size());
}

// Greedy one-to-one matching of learned topics to planted vocabularies by
// captured mass; returns the captured mass of each learned topic.
inline std::vector<double> planted_mass(const Matrix& topic_word,
                                        const std::vector<std::set<std::size_t>>& planted) {
  const std::size_t k = topic_word.rows();
  std::vector<std::vector<double>> mass(k, std::vector<double>(planted.size(), 0.0));
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t p = 0; p < planted.size(); ++p) {
      for (std::size_t w : planted[p]) mass[t][p] += topic_word(t, w);
    }
  }
  std::vector<double> out(k, 0.0);
  std::vector<bool> used_t(k, false), used_p(planted.size(), false);
  for (std::size_t round = 0; round < std::min(k, planted.size()); ++round) {
    double best = -1.0;
    std::size_t bt = 0, bp = 0;
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t p = 0; p < planted.size(); ++p) {
        if (!used_t[t] && !used_p[p] && mass[t][p] > best) {
          best = mass[t][p];
          bt = t;
          bp = p;
        }
      }
    }
    used_t[bt] = used_p[bp] = true;
    out[bt] = best;
  }
  return out;
}

}  // namespace topicret::oracle

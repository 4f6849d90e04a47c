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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicret/corpus.hpp"
#include "topicret/encoder.hpp"
#include "topicret/kernels.hpp"

namespace topicret {

double maxsim(const Representation& query, const Representation& doc);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  bool operator==(const ScoredDoc&) const = default;
};

// Descending score, ties by ascending doc_id.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> hits;
  bool operator==(const RankedList&) const = default;
};

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b);

RankedList top_k(std::string query_id, const DocumentMatrix& docs,
                 std::span<const double> scores, std::size_t k);

RankedList search(const DocumentMatrix& docs, const Representation& query,
                  std::size_t k);
RankedList search(const RepresentationIndex& index, const Representation& query,
                  std::size_t k);

// Queries run in parallel; output keeps input order.
std::vector<RankedList> search_all(const DocumentMatrix& docs,
                                   std::span<const Representation> queries,
                                   std::size_t k);

// `qid Q0 docid rank score tag`, rank from 1.
void write_run(std::ostream& out, std::span<const RankedList> run, std::string_view tag);
void write_run(const std::filesystem::path& path, std::span<const RankedList> run,
               std::string_view tag);
std::vector<RankedList> parse_run(std::istream& in);
std::vector<RankedList> read_run(const std::filesystem::path& path);

struct QueryMetrics {
  std::string query_id;
  double reciprocal_rank = 0.0;
  double recall = 0.0;
  double average_precision = 0.0;
};

struct Metrics {
  std::size_t mrr_cutoff = 10;
  std::size_t recall_cutoff = 1000;
  double mrr_at_k = 0.0;
  double recall_at_k = 0.0;
  double map = 0.0;
  std::vector<QueryMetrics> per_query;
  std::vector<std::string> skipped;  // run queries without judgments
};

Metrics evaluate(std::span<const RankedList> run, const Judgments& judgments,
                 std::size_t mrr_cutoff = 10, std::size_t recall_cutoff = 1000);

// `metric\tvalue` lines.
std::string render_metrics(const Metrics& m);

// mrr / space_gib. Callers report it ×1e3.
double tradeoff(double mrr, double space_gib);

// Tau-b between two paired score lists.
double kendall_tau(std::span<const double> a, std::span<const double> b);

}  // namespace topicret

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

#include "topicret/retrieval.hpp"

#include "topicret/binary_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace topicret {

double maxsim(const Representation& query, const Representation& doc) {
  if (query.dim != doc.dim) throw Error(ErrorCode::kShapeError, "dimension mismatch");
  if (query.size() == 0 || doc.size() == 0) {
    throw Error(ErrorCode::kShapeError, "empty representation");
  }
  return maxsim_kernel(query.values.data(), query.size(), doc.values.data(), doc.size(),
                       query.dim);
}

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

RankedList top_k(std::string query_id, const DocumentMatrix& docs,
                 std::span<const double> scores, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be at least 1");
  std::vector<ScoredDoc> all(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) all[d] = {docs.doc_ids[d], scores[d]};
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), ranks_before);
  all.resize(keep);
  return {std::move(query_id), std::move(all)};
}

RankedList search(const DocumentMatrix& docs, const Representation& query,
                  std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be at least 1");
  std::vector<double> scores(docs.size());
  parallel::score_documents(docs, query, scores);
  return top_k(query.text_id, docs, scores, k);
}

RankedList search(const RepresentationIndex& index, const Representation& query,
                  std::size_t k) {
  return search(DocumentMatrix::from_index(index), query, k);
}

std::vector<RankedList> search_all(const DocumentMatrix& docs,
                                   std::span<const Representation> queries,
                                   std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be at least 1");
  std::vector<RankedList> out(queries.size());
  std::vector<std::exception_ptr> errors(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      std::vector<double> scores(docs.size());
      serial::score_documents(docs, queries[u], scores);
      out[u] = top_k(queries[u].text_id, docs, scores, k);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_run(std::ostream& out, std::span<const RankedList> run, std::string_view tag) {
  char score[64];
  for (const auto& list : run) {
    for (std::size_t r = 0; r < list.hits.size(); ++r) {
      std::snprintf(score, sizeof(score), "%.17g", list.hits[r].score);
      out << list.query_id << " Q0 " << list.hits[r].doc_id << ' ' << r + 1 << ' '
          << score << ' ' << tag << '\n';
    }
  }
}

void write_run(const std::filesystem::path& path, std::span<const RankedList> run,
               std::string_view tag) {
  std::ostringstream out;
  write_run(out, run, tag);
  io::write_text_file(path, out.str());
}

std::vector<RankedList> parse_run(std::istream& in) {
  struct Row {
    std::size_t rank;
    ScoredDoc doc;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string qid, q0, docid, rank_s, score_s, tag, extra;
    if (!(fields >> qid >> q0 >> docid >> rank_s >> score_s >> tag) || (fields >> extra)) {
      throw Error(ErrorCode::kParseError, "run line needs 6 fields", line_no);
    }
    std::size_t rank = 0;
    const auto [p, ec] = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), rank);
    if (ec != std::errc() || p != rank_s.data() + rank_s.size() || rank == 0) {
      throw Error(ErrorCode::kParseError, "bad rank '" + rank_s + "'", line_no);
    }
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(score_s, &used);
      if (used != score_s.size()) throw std::invalid_argument(score_s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, "bad score '" + score_s + "'", line_no);
    }
    auto [it, inserted] = rows.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back({rank, {docid, score}});
  }
  std::vector<RankedList> run;
  for (const auto& qid : order) {
    auto& r = rows[qid];
    std::stable_sort(r.begin(), r.end(),
                     [](const Row& a, const Row& b) { return a.rank < b.rank; });
    RankedList list{qid, {}};
    for (auto& row : r) list.hits.push_back(std::move(row.doc));
    run.push_back(std::move(list));
  }
  return run;
}

std::vector<RankedList> read_run(const std::filesystem::path& path) {
  std::istringstream in(io::read_text_file(path));
  return parse_run(in);
}

Metrics evaluate(std::span<const RankedList> run, const Judgments& judgments,
                 std::size_t mrr_cutoff, std::size_t recall_cutoff) {
  if (run.empty()) throw Error(ErrorCode::kEmptyRun, "run has no queries");
  if (mrr_cutoff < 1 || recall_cutoff < 1) {
    throw Error(ErrorCode::kInvalidK, "metric cutoffs must be at least 1");
  }
  Metrics m;
  m.mrr_cutoff = mrr_cutoff;
  m.recall_cutoff = recall_cutoff;
  for (const auto& list : run) {
    const std::size_t relevant = judgments.relevant_count(list.query_id);
    if (relevant == 0) {
      m.skipped.push_back(list.query_id);
      continue;
    }
    QueryMetrics q;
    q.query_id = list.query_id;
    std::size_t found = 0;
    double precision_sum = 0.0;
    for (std::size_t r = 0; r < list.hits.size(); ++r) {
      if (!judgments.is_relevant(list.query_id, list.hits[r].doc_id)) continue;
      ++found;
      const double rank = static_cast<double>(r + 1);
      if (found == 1 && r < mrr_cutoff) q.reciprocal_rank = 1.0 / rank;
      if (r < recall_cutoff) q.recall += 1.0;
      precision_sum += static_cast<double>(found) / rank;
    }
    q.recall /= static_cast<double>(relevant);
    q.average_precision = precision_sum / static_cast<double>(relevant);
    m.per_query.push_back(std::move(q));
  }
  if (m.per_query.empty()) {
    throw Error(ErrorCode::kEmptyRun, "no run query has relevance judgments");
  }
  for (const auto& q : m.per_query) {
    m.mrr_at_k += q.reciprocal_rank;
    m.recall_at_k += q.recall;
    m.map += q.average_precision;
  }
  const double n = static_cast<double>(m.per_query.size());
  m.mrr_at_k /= n;
  m.recall_at_k /= n;
  m.map /= n;
  return m;
}

std::string render_metrics(const Metrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "mrr_at_%zu\t%.6f\nrecall_at_%zu\t%.6f\nmap\t%.6f\nqueries\t%zu\n"
                "skipped\t%zu\n",
                m.mrr_cutoff, m.mrr_at_k, m.recall_cutoff, m.recall_at_k, m.map,
                m.per_query.size(), m.skipped.size());
  return buf;
}

double tradeoff(double mrr, double space_gib) {
  if (!(space_gib > 0.0)) throw Error(ErrorCode::kInvalidSpace, "space must be positive");
  return mrr / space_gib;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeError, "length mismatch");
  double concordant = 0.0, discordant = 0.0, ties_a = 0.0, ties_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ties_a += 1.0;
      } else if (db == 0.0) {
        ties_b += 1.0;
      } else if ((da > 0.0) == (db > 0.0)) {
        concordant += 1.0;
      } else {
        discordant += 1.0;
      }
    }
  }
  const double denom =
      std::sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b));
  return denom == 0.0 ? 1.0 : (concordant - discordant) / denom;
}

}  // namespace topicret

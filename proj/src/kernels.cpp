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

#include "topicret/kernels.hpp"

#include <limits>

namespace topicret {

namespace {

void check_query(const DocumentMatrix& docs, const Representation& query,
                 std::span<double> out) {
  if (query.dim != docs.dim) {
    throw Error(ErrorCode::kShapeError, "query and index dimensions differ");
  }
  if (query.size() == 0) throw Error(ErrorCode::kShapeError, "empty query");
  if (out.size() != docs.size()) {
    throw Error(ErrorCode::kShapeError, "score buffer size mismatch");
  }
}

}  // namespace

DocumentMatrix DocumentMatrix::from_representations(std::span<const Representation> docs,
                                                    std::size_t dim) {
  DocumentMatrix m;
  m.dim = dim;
  m.offsets.push_back(0);
  for (const auto& rep : docs) {
    if (rep.dim != dim) throw Error(ErrorCode::kShapeError, "dimension mismatch");
    if (rep.size() == 0) throw Error(ErrorCode::kShapeError, "empty document");
    m.doc_ids.push_back(rep.text_id);
    m.values.insert(m.values.end(), rep.values.begin(), rep.values.end());
    m.offsets.push_back(m.offsets.back() + rep.size());
  }
  return m;
}

DocumentMatrix DocumentMatrix::from_index(const RepresentationIndex& index) {
  DocumentMatrix m;
  m.dim = index.dim();
  m.offsets.push_back(0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto rep = index.dequantized(i);
    m.doc_ids.push_back(rep.text_id);
    m.values.insert(m.values.end(), rep.values.begin(), rep.values.end());
    m.offsets.push_back(m.offsets.back() + rep.size());
  }
  return m;
}

double maxsim_kernel(const float* query, std::size_t query_rows, const float* doc,
                     std::size_t doc_rows, std::size_t dim) {
  double total = 0.0;
  for (std::size_t i = 0; i < query_rows; ++i) {
    const float* q = query + i * dim;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc_rows; ++j) {
      const float* d = doc + j * dim;
      double s = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        s += static_cast<double>(q[c]) * static_cast<double>(d[c]);
      }
      if (s > best) best = s;
    }
    total += best;
  }
  return total;
}

namespace serial {

void score_documents(const DocumentMatrix& docs, const Representation& query,
                     std::span<double> out) {
  check_query(docs, query, out);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    out[d] = maxsim_kernel(query.values.data(), query.size(), docs.entry_data(d),
                           docs.entries(d), docs.dim);
  }
}

}  // namespace serial

namespace parallel {

void score_documents(const DocumentMatrix& docs, const Representation& query,
                     std::span<double> out) {
  check_query(docs, query, out);
  const auto n = static_cast<std::ptrdiff_t>(docs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t d = 0; d < n; ++d) {
    const auto u = static_cast<std::size_t>(d);
    out[u] = maxsim_kernel(query.values.data(), query.size(), docs.entry_data(u),
                           docs.entries(u), docs.dim);
  }
}

}  // namespace parallel

}  // namespace topicret

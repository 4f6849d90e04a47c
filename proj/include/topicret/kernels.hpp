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
#include <span>
#include <string>
#include <vector>

#include "topicret/encoder.hpp"
#include "topicret/index.hpp"

namespace topicret {

// Documents flattened into one contiguous float block for scoring.
struct DocumentMatrix {
  std::size_t dim = 0;
  std::vector<std::string> doc_ids;
  std::vector<std::size_t> offsets;  // entry offsets, size() + 1
  std::vector<float> values;         // entries × dim

  std::size_t size() const { return doc_ids.size(); }
  std::size_t entries(std::size_t d) const { return offsets[d + 1] - offsets[d]; }
  const float* entry_data(std::size_t d) const { return values.data() + offsets[d] * dim; }

  static DocumentMatrix from_representations(std::span<const Representation> docs,
                                             std::size_t dim);
  static DocumentMatrix from_index(const RepresentationIndex& index);
};

// Σ_i max_j q_i · d_j. Dot products accumulate in double, coordinate order.
double maxsim_kernel(const float* query, std::size_t query_rows, const float* doc,
                     std::size_t doc_rows, std::size_t dim);

namespace serial {
void score_documents(const DocumentMatrix& docs, const Representation& query,
                     std::span<double> out);
}  // namespace serial

namespace parallel {
// Documents split across OpenMP threads; each score is computed by the same
// kernel as the serial path, so results are bitwise identical.
void score_documents(const DocumentMatrix& docs, const Representation& query,
                     std::span<double> out);
}  // namespace parallel

}  // namespace topicret

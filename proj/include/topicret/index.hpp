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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicret/common.hpp"
#include "topicret/encoder.hpp"

namespace topicret {

enum class QuantKind : std::uint8_t { kF32 = 0, kF16 = 1, kU8 = 2 };

std::size_t bytes_per_dim(QuantKind kind);
std::string_view quant_name(QuantKind kind);
QuantKind parse_quant(std::string_view name);

// IEEE-754 binary16 with round-to-nearest-even; overflow saturates to inf.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

struct QuantizedVector {
  std::vector<std::uint8_t> codes;
  float scale = 1.0f;   // U8 only
  float offset = 0.0f;  // U8 only
};

// F32/F16 store each coordinate little-endian. U8 is per-vector affine:
// offset = min, scale = (max - min) / 255 (1 when flat), codes rounded half
// away from zero.
QuantizedVector quantize(std::span<const float> v, QuantKind kind);
void dequantize_into(std::span<const std::uint8_t> codes, float scale, float offset,
                     QuantKind kind, std::span<float> out);
std::vector<float> dequantize(const QuantizedVector& q, QuantKind kind,
                              std::size_t dim);

struct SpaceStats {
  std::uint64_t payload_bytes = 0;
  std::uint64_t metadata_bytes = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t embeddings_stored = 0;
  std::uint64_t docs = 0;
  double mean_entries = 0.0;

  static constexpr double kBytesPerGiB = 1024.0 * 1024.0 * 1024.0;
  double total_gib() const { return static_cast<double>(total_bytes) / kBytesPerGiB; }
  double payload_gib() const {
    return static_cast<double>(payload_bytes) / kBytesPerGiB;
  }
  bool operator==(const SpaceStats&) const = default;
};

std::string render_space_stats(const SpaceStats& stats);

struct IndexRecord {
  std::string doc_id;
  std::vector<std::int32_t> topic_ids;
  std::vector<float> scales;   // U8 only, one per entry
  std::vector<float> offsets;  // U8 only, one per entry
  std::vector<std::uint8_t> payload;

  std::size_t entries() const { return topic_ids.size(); }
};

// Immutable store of quantized document representations.
//
// File layout (little-endian): "TGIX", u32 version, u16 dim, u8 scheme,
// u8 granularity, u64 doc count, 32-byte fingerprint; then per record:
// u16 id length + UTF-8 id, u16 N, N × u16 topic id (0xFFFF = none),
// U8 only: N × (f32 scale, f32 offset), then N × dim × bytes_per_dim payload.
class RepresentationIndex {
 public:
  static constexpr std::size_t kHeaderBytes = 4 + 4 + 2 + 1 + 1 + 8 + 32;

  static RepresentationIndex build(std::span<const Representation> docs,
                                   std::size_t dim, QuantKind scheme,
                                   Granularity granularity,
                                   const Fingerprint& fingerprint);

  std::size_t dim() const { return dim_; }
  QuantKind scheme() const { return scheme_; }
  Granularity granularity() const { return granularity_; }
  const Fingerprint& fingerprint() const { return fingerprint_; }
  std::size_t size() const { return records_.size(); }
  const IndexRecord& record(std::size_t i) const { return records_[i]; }

  Representation dequantized(std::size_t i) const;

  // Derived from the header and each record's entry count.
  SpaceStats space() const;

  std::vector<std::uint8_t> serialize() const;
  static RepresentationIndex deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static RepresentationIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  QuantKind scheme_ = QuantKind::kF32;
  Granularity granularity_ = Granularity::kTopic;
  Fingerprint fingerprint_{};
  std::vector<IndexRecord> records_;
};

// Walks a serialized index and attributes every byte to payload or
// metadata by where it actually sits in the file.
SpaceStats scan_space(std::span<const std::uint8_t> bytes);

}  // namespace topicret

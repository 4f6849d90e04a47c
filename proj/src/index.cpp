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

#include "topicret/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "topicret/binary_io.hpp"

namespace topicret {

namespace {

constexpr char kIndexMagic[4] = {'T', 'G', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint16_t kNoTopicCode = 0xffff;

QuantKind quant_from_byte(std::uint8_t b) {
  if (b > 2) throw Error(ErrorCode::kFormatError, "unknown quantization scheme");
  return static_cast<QuantKind>(b);
}

Granularity granularity_from_byte(std::uint8_t b) {
  if (b > 2) throw Error(ErrorCode::kFormatError, "unknown granularity");
  return static_cast<Granularity>(b);
}

struct HeaderFields {
  std::size_t dim = 0;
  QuantKind scheme = QuantKind::kF32;
  Granularity granularity = Granularity::kTopic;
  std::uint64_t count = 0;
  Fingerprint fingerprint{};
};

HeaderFields read_header(io::ByteReader& r) {
  if (r.get_string(4) != std::string_view(kIndexMagic, 4)) {
    throw Error(ErrorCode::kFormatError, "not a TGIX file");
  }
  if (r.get<std::uint32_t>() != kIndexVersion) {
    throw Error(ErrorCode::kFormatError, "unsupported TGIX version");
  }
  HeaderFields h;
  h.dim = r.get<std::uint16_t>();
  h.scheme = quant_from_byte(r.get<std::uint8_t>());
  h.granularity = granularity_from_byte(r.get<std::uint8_t>());
  h.count = r.get<std::uint64_t>();
  const auto fp = r.get_bytes(h.fingerprint.size());
  std::copy(fp.begin(), fp.end(), h.fingerprint.begin());
  if (h.dim == 0) throw Error(ErrorCode::kFormatError, "zero dimension");
  return h;
}

}  // namespace

std::size_t bytes_per_dim(QuantKind kind) {
  switch (kind) {
    case QuantKind::kF32: return 4;
    case QuantKind::kF16: return 2;
    case QuantKind::kU8: return 1;
  }
  return 0;
}

std::string_view quant_name(QuantKind kind) {
  switch (kind) {
    case QuantKind::kF32: return "f32";
    case QuantKind::kF16: return "f16";
    case QuantKind::kU8: return "u8";
  }
  return "unknown";
}

QuantKind parse_quant(std::string_view name) {
  if (name == "f32") return QuantKind::kF32;
  if (name == "f16") return QuantKind::kF16;
  if (name == "u8") return QuantKind::kU8;
  throw Error(ErrorCode::kInvalidConfig, "unknown scheme " + std::string(name));
}

std::uint16_t float_to_half(float value) {
  const auto x = std::bit_cast<std::uint32_t>(value);
  const auto sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
  const std::uint32_t magnitude = x & 0x7fffffffu;

  if (magnitude >= 0x7f800000u) {
    // inf stays inf; NaN keeps a quiet payload bit.
    return sign | 0x7c00u | (magnitude > 0x7f800000u ? 0x0200u : 0u);
  }
  if (magnitude >= 0x477ff000u) return sign | 0x7c00u;  // rounds past 65504
  if (magnitude < 0x38800000u) {
    // Half subnormal: count units of 2^-24. The scaling is exact and
    // nearbyint rounds ties to even under the default rounding mode.
    const float scaled = std::bit_cast<float>(magnitude) * 16777216.0f;
    return sign | static_cast<std::uint16_t>(std::nearbyint(scaled));
  }
  const std::uint32_t rounded = magnitude + 0x0fffu + ((magnitude >> 13) & 1u);
  return sign | static_cast<std::uint16_t>((rounded - 0x38000000u) >> 13);
}

float half_to_float(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  const std::uint32_t exponent = (bits >> 10) & 0x1fu;
  const std::uint32_t mantissa = bits & 0x03ffu;
  if (exponent == 0) {
    const float v = static_cast<float>(mantissa) * 0x1.0p-24f;
    return sign ? -v : v;
  }
  if (exponent == 31) {
    return std::bit_cast<float>(sign | 0x7f800000u | (mantissa << 13));
  }
  return std::bit_cast<float>(sign | ((exponent + 112) << 23) | (mantissa << 13));
}

QuantizedVector quantize(std::span<const float> v, QuantKind kind) {
  for (float x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNumericalError, "cannot quantize non-finite value");
    }
  }
  QuantizedVector q;
  switch (kind) {
    case QuantKind::kF32: {
      q.codes.resize(v.size() * 4);
      std::memcpy(q.codes.data(), v.data(), q.codes.size());
      break;
    }
    case QuantKind::kF16: {
      q.codes.resize(v.size() * 2);
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::uint16_t h = float_to_half(v[i]);
        std::memcpy(q.codes.data() + 2 * i, &h, 2);
      }
      break;
    }
    case QuantKind::kU8: {
      q.codes.resize(v.size());
      if (v.empty()) break;
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double min = *lo;
      const double range = static_cast<double>(*hi) - min;
      q.offset = *lo;
      q.scale = range > 0.0 ? static_cast<float>(range / 255.0) : 1.0f;
      for (std::size_t i = 0; i < v.size(); ++i) {
        // (x - offset) / scale, evaluated as (x - offset) * 255 / range.
        const double code = range > 0.0 ? (v[i] - min) * 255.0 / range : 0.0;
        q.codes[i] = static_cast<std::uint8_t>(std::clamp(std::round(code), 0.0, 255.0));
      }
      break;
    }
  }
  return q;
}

void dequantize_into(std::span<const std::uint8_t> codes, float scale, float offset,
                     QuantKind kind, std::span<float> out) {
  switch (kind) {
    case QuantKind::kF32:
      std::memcpy(out.data(), codes.data(), out.size() * 4);
      break;
    case QuantKind::kF16:
      for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint16_t h;
        std::memcpy(&h, codes.data() + 2 * i, 2);
        out[i] = half_to_float(h);
      }
      break;
    case QuantKind::kU8:
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = offset + static_cast<float>(codes[i]) * scale;
      }
      break;
  }
}

std::vector<float> dequantize(const QuantizedVector& q, QuantKind kind,
                              std::size_t dim) {
  if (q.codes.size() != dim * bytes_per_dim(kind)) {
    throw Error(ErrorCode::kShapeError, "code length does not match dimension");
  }
  std::vector<float> out(dim);
  dequantize_into(q.codes, q.scale, q.offset, kind, out);
  return out;
}

std::string render_space_stats(const SpaceStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "docs\t%llu\nembeddings_stored\t%llu\nmean_entries\t%.4f\n"
                "payload_bytes\t%llu\nmetadata_bytes\t%llu\ntotal_bytes\t%llu\n"
                "total_gib\t%.9f\n",
                static_cast<unsigned long long>(s.docs),
                static_cast<unsigned long long>(s.embeddings_stored), s.mean_entries,
                static_cast<unsigned long long>(s.payload_bytes),
                static_cast<unsigned long long>(s.metadata_bytes),
                static_cast<unsigned long long>(s.total_bytes), s.total_gib());
  return buf;
}

RepresentationIndex RepresentationIndex::build(std::span<const Representation> docs,
                                               std::size_t dim, QuantKind scheme,
                                               Granularity granularity,
                                               const Fingerprint& fingerprint) {
  if (dim == 0 || dim > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kShapeError, "index dimension out of range");
  }
  RepresentationIndex index;
  index.dim_ = dim;
  index.scheme_ = scheme;
  index.granularity_ = granularity;
  index.fingerprint_ = fingerprint;
  index.records_.reserve(docs.size());
  const std::size_t bpd = bytes_per_dim(scheme);
  for (const auto& rep : docs) {
    if (rep.dim != dim) throw Error(ErrorCode::kShapeError, "dimension mismatch");
    if (rep.size() == 0 || rep.size() >= kNoTopicCode ||
        rep.text_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::kShapeError, "record does not fit the index format");
    }
    IndexRecord rec;
    rec.doc_id = rep.text_id;
    rec.topic_ids = rep.topic_ids;
    rec.payload.reserve(rep.size() * dim * bpd);
    for (std::size_t e = 0; e < rep.size(); ++e) {
      auto q = quantize(rep.embedding(e), scheme);
      rec.payload.insert(rec.payload.end(), q.codes.begin(), q.codes.end());
      if (scheme == QuantKind::kU8) {
        rec.scales.push_back(q.scale);
        rec.offsets.push_back(q.offset);
      }
    }
    index.records_.push_back(std::move(rec));
  }
  return index;
}

Representation RepresentationIndex::dequantized(std::size_t i) const {
  const auto& rec = records_.at(i);
  Representation rep;
  rep.text_id = rec.doc_id;
  rep.granularity = granularity_;
  rep.dim = dim_;
  rep.topic_ids = rec.topic_ids;
  rep.values.resize(rec.entries() * dim_);
  rep.degenerate.assign(rec.entries(), 0);
  const std::size_t stride = dim_ * bytes_per_dim(scheme_);
  for (std::size_t e = 0; e < rec.entries(); ++e) {
    const float scale = scheme_ == QuantKind::kU8 ? rec.scales[e] : 1.0f;
    const float offset = scheme_ == QuantKind::kU8 ? rec.offsets[e] : 0.0f;
    dequantize_into(std::span(rec.payload).subspan(e * stride, stride), scale, offset,
                    scheme_, std::span(rep.values).subspan(e * dim_, dim_));
  }
  return rep;
}

SpaceStats RepresentationIndex::space() const {
  SpaceStats s;
  s.docs = records_.size();
  s.metadata_bytes = kHeaderBytes;
  const std::uint64_t per_entry =
      dim_ * bytes_per_dim(scheme_) + (scheme_ == QuantKind::kU8 ? 8 : 0);
  for (const auto& rec : records_) {
    const std::uint64_t n = rec.entries();
    s.embeddings_stored += n;
    s.payload_bytes += n * per_entry;
    s.metadata_bytes += 2 + rec.doc_id.size() + 2 + 2 * n;
  }
  s.total_bytes = s.payload_bytes + s.metadata_bytes;
  s.mean_entries = s.docs == 0 ? 0.0
                               : static_cast<double>(s.embeddings_stored) /
                                     static_cast<double>(s.docs);
  return s;
}

std::vector<std::uint8_t> RepresentationIndex::serialize() const {
  io::ByteWriter w;
  w.put_string(std::string_view(kIndexMagic, 4));
  w.put<std::uint32_t>(kIndexVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(dim_));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(scheme_));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(granularity_));
  w.put<std::uint64_t>(records_.size());
  w.put_bytes(fingerprint_);
  for (const auto& rec : records_) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.doc_id.size()));
    w.put_string(rec.doc_id);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.entries()));
    for (auto t : rec.topic_ids) {
      w.put<std::uint16_t>(t == kNoTopic ? kNoTopicCode : static_cast<std::uint16_t>(t));
    }
    if (scheme_ == QuantKind::kU8) {
      for (std::size_t e = 0; e < rec.entries(); ++e) {
        w.put<float>(rec.scales[e]);
        w.put<float>(rec.offsets[e]);
      }
    }
    w.put_bytes(rec.payload);
  }
  return std::move(w.bytes());
}

RepresentationIndex RepresentationIndex::deserialize(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const auto h = read_header(r);
  RepresentationIndex index;
  index.dim_ = h.dim;
  index.scheme_ = h.scheme;
  index.granularity_ = h.granularity;
  index.fingerprint_ = h.fingerprint;
  const std::size_t stride = h.dim * bytes_per_dim(h.scheme);
  for (std::uint64_t d = 0; d < h.count; ++d) {
    IndexRecord rec;
    rec.doc_id = r.get_string(r.get<std::uint16_t>());
    const std::size_t n = r.get<std::uint16_t>();
    if (n == 0) throw Error(ErrorCode::kFormatError, "record without entries");
    for (std::size_t e = 0; e < n; ++e) {
      const auto code = r.get<std::uint16_t>();
      rec.topic_ids.push_back(code == kNoTopicCode ? kNoTopic : code);
    }
    if (h.scheme == QuantKind::kU8) {
      for (std::size_t e = 0; e < n; ++e) {
        rec.scales.push_back(r.get<float>());
        rec.offsets.push_back(r.get<float>());
      }
    }
    const auto payload = r.get_bytes(n * stride);
    rec.payload.assign(payload.begin(), payload.end());
    index.records_.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after last record");
  }
  return index;
}

void RepresentationIndex::save(const std::filesystem::path& path) const {
  io::write_file(path, serialize());
}

RepresentationIndex RepresentationIndex::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path));
}

SpaceStats scan_space(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const auto h = read_header(r);
  SpaceStats s;
  s.docs = h.count;
  const std::size_t stride = h.dim * bytes_per_dim(h.scheme);
  for (std::uint64_t d = 0; d < h.count; ++d) {
    r.get_bytes(r.get<std::uint16_t>());
    const std::size_t n = r.get<std::uint16_t>();
    r.get_bytes(2 * n);
    const std::size_t meta_end = r.position();
    if (h.scheme == QuantKind::kU8) r.get_bytes(8 * n);
    r.get_bytes(n * stride);
    s.payload_bytes += r.position() - meta_end;
    s.embeddings_stored += n;
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after last record");
  }
  s.total_bytes = bytes.size();
  s.metadata_bytes = s.total_bytes - s.payload_bytes;
  s.mean_entries = s.docs == 0 ? 0.0
                               : static_cast<double>(s.embeddings_stored) /
                                     static_cast<double>(s.docs);
  return s;
}

}  // namespace topicret

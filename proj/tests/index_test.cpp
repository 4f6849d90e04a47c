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

#include <Eigen/Core>
#include <bit>
#include <cmath>
#include <limits>

#include "test_support.hpp"
#include "topicret/binary_io.hpp"
#include "topicret/index.hpp"

namespace topicret {
namespace {

// Eigen's half conversion is an independent round-to-nearest-even reference.
std::uint16_t eigen_half_bits(float x) {
  return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(x));
}

TEST(Half, MatchesReferenceOnEdgeCases) {
  const float cases[] = {0.0f,        -0.0f,       1.0f,        -1.0f,
                         65504.0f,    65519.99f,   65520.0f,    1e9f,
                         6.1035156e-05f, 5.9604645e-08f, 2.9802322e-08f, 2.9802326e-08f,
                         1.0009766f,  1.00048828125f, 1.00146484375f, 3.0517578e-05f,
                         std::numeric_limits<float>::infinity(),
                         -std::numeric_limits<float>::infinity()};
  for (float x : cases) EXPECT_EQ(float_to_half(x), eigen_half_bits(x)) << x;
}

TEST(Half, MatchesReferenceOnRandomBitPatterns) {
  Rng rng(1);
  for (int i = 0; i < 200000; ++i) {
    const auto bits = static_cast<std::uint32_t>(rng.next());
    const float x = std::bit_cast<float>(bits);
    if (std::isnan(x)) continue;
    ASSERT_EQ(float_to_half(x), eigen_half_bits(x)) << std::hexfloat << x;
  }
}

TEST(Half, DecodesEveryPattern) {
  for (std::uint32_t h = 0; h < 0x10000; ++h) {
    const auto bits = static_cast<std::uint16_t>(h);
    const float ours = half_to_float(bits);
    const float ref = static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
    if (std::isnan(ref)) {
      EXPECT_TRUE(std::isnan(ours));
    } else {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(ours), std::bit_cast<std::uint32_t>(ref)) << h;
    }
  }
}

TEST(Quantize, F32RoundTripIsBitwise) {
  Rng rng(2);
  std::vector<float> v(64);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-100, 100));
  const auto q = quantize(v, QuantKind::kF32);
  EXPECT_EQ(q.codes.size(), 256u);
  EXPECT_EQ(dequantize(q, QuantKind::kF32, 64), v);
}

TEST(Quantize, F16ErrorBound) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> v(32);
    double inf_norm = 0.0;
    for (auto& x : v) {
      x = static_cast<float>(rng.uniform(-8, 8));
      inf_norm = std::max(inf_norm, std::abs(static_cast<double>(x)));
    }
    const auto back = dequantize(quantize(v, QuantKind::kF16), QuantKind::kF16, 32);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_LE(std::abs(static_cast<double>(back[i]) - v[i]), std::ldexp(inf_norm, -11));
    }
  }
}

TEST(Quantize, U8HandExample) {
  const std::vector<float> v = {0.0f, 0.5f, 1.0f};
  const auto q = quantize(v, QuantKind::kU8);
  EXPECT_EQ(q.codes, (std::vector<std::uint8_t>{0, 128, 255}));
  const auto back = dequantize(q, QuantKind::kU8, 3);
  EXPECT_NEAR(back[0], 0.0, 1e-5);
  EXPECT_NEAR(back[1], 0.50196, 1e-5);
  EXPECT_NEAR(back[2], 1.0, 1e-5);
}

TEST(Quantize, U8FlatVectorUsesUnitScale) {
  const std::vector<float> v = {2.5f, 2.5f};
  const auto q = quantize(v, QuantKind::kU8);
  EXPECT_EQ(q.scale, 1.0f);
  EXPECT_EQ(q.offset, 2.5f);
  EXPECT_EQ(dequantize(q, QuantKind::kU8, 2), v);
}

TEST(Quantize, NonFiniteRejected) {
  const std::vector<float> v = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  for (auto k : {QuantKind::kF32, QuantKind::kF16, QuantKind::kU8}) {
    try {
      quantize(v, k);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNumericalError);
    }
  }
}

std::vector<Representation> random_docs(Rng& rng, std::size_t n, std::size_t dim,
                                        std::size_t max_entries) {
  std::vector<Representation> docs;
  for (std::size_t d = 0; d < n; ++d) {
    auto r = testing::random_representation(rng, "doc" + std::to_string(d),
                                            1 + rng.below(max_entries), dim, true);
    for (std::size_t e = 0; e < r.size(); ++e) {
      r.topic_ids[e] = rng.uniform() < 0.2 ? kNoTopic : static_cast<std::int32_t>(e);
    }
    docs.push_back(std::move(r));
  }
  return docs;
}

TEST(Index, GlobalF16PayloadArithmetic) {
  Rng rng(4);
  const auto docs = random_docs(rng, 1000, 256, 1);
  const auto index = RepresentationIndex::build(docs, 256, QuantKind::kF16,
                                                Granularity::kGlobal, Fingerprint{});
  EXPECT_EQ(index.space().payload_bytes, 512000u);
  EXPECT_EQ(index.space().embeddings_stored, 1000u);
}

TEST(Index, EmptyCollection) {
  const auto index = RepresentationIndex::build({}, 8, QuantKind::kF32, Granularity::kTopic,
                                                Fingerprint{});
  const auto s = index.space();
  EXPECT_EQ(s.payload_bytes, 0u);
  EXPECT_EQ(s.docs, 0u);
  EXPECT_EQ(s.total_bytes, RepresentationIndex::kHeaderBytes);
  EXPECT_EQ(scan_space(index.serialize()), s);
}

TEST(Index, RecordFormulaAndRescanAgreeOnFuzz) {
  Rng rng(5);
  for (auto scheme : {QuantKind::kF32, QuantKind::kF16, QuantKind::kU8}) {
    const auto docs = random_docs(rng, 1000, 12, 9);
    const auto index =
        RepresentationIndex::build(docs, 12, scheme, Granularity::kTopic, sha256("x"));
    std::uint64_t payload = 0;
    for (std::size_t i = 0; i < index.size(); ++i) {
      const auto& rec = index.record(i);
      EXPECT_EQ(rec.payload.size(), rec.entries() * 12 * bytes_per_dim(scheme));
      payload += rec.payload.size() + (scheme == QuantKind::kU8 ? 8 * rec.entries() : 0);
    }
    const auto bytes = index.serialize();
    const auto s = index.space();
    EXPECT_EQ(s.payload_bytes, payload);
    EXPECT_EQ(s.total_bytes, bytes.size());
    EXPECT_EQ(s.total_bytes, s.payload_bytes + s.metadata_bytes);
    EXPECT_EQ(scan_space(bytes), s);
  }
}

TEST(Index, FileRoundTrip) {
  Rng rng(6);
  const auto docs = random_docs(rng, 50, 16, 5);
  testing::TempDir dir;
  for (auto scheme : {QuantKind::kF32, QuantKind::kF16, QuantKind::kU8}) {
    const auto index =
        RepresentationIndex::build(docs, 16, scheme, Granularity::kTopic, sha256("fp"));
    index.save(dir / "i.tgix");
    const auto bytes = io::read_file(dir / "i.tgix");
    const auto back = RepresentationIndex::load(dir / "i.tgix");
    EXPECT_EQ(back.serialize(), bytes);
    EXPECT_EQ(back.fingerprint(), sha256("fp"));
    ASSERT_EQ(back.size(), docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto rep = back.dequantized(i);
      EXPECT_EQ(rep.text_id, docs[i].text_id);
      EXPECT_EQ(rep.topic_ids, docs[i].topic_ids);
      if (scheme == QuantKind::kF32) EXPECT_EQ(rep.values, docs[i].values);
      for (std::size_t k = 0; k < rep.values.size(); ++k) {
        const double tol = scheme == QuantKind::kF16 ? std::ldexp(1.0, -11) : 2.0 / 255.0;
        EXPECT_NEAR(rep.values[k], docs[i].values[k], tol);
      }
    }
  }
}

TEST(Index, Determinism) {
  Rng a(7), b(7);
  const auto i1 = RepresentationIndex::build(random_docs(a, 30, 8, 4), 8, QuantKind::kU8,
                                             Granularity::kTopic, Fingerprint{});
  const auto i2 = RepresentationIndex::build(random_docs(b, 30, 8, 4), 8, QuantKind::kU8,
                                             Granularity::kTopic, Fingerprint{});
  EXPECT_EQ(i1.serialize(), i2.serialize());
}

TEST(Index, CorruptInputIsFormatError) {
  Rng rng(8);
  const auto bytes =
      RepresentationIndex::build(random_docs(rng, 3, 4, 2), 4, QuantKind::kF32,
                                 Granularity::kWord, Fingerprint{})
          .serialize();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  auto truncated = bytes;
  truncated.pop_back();
  auto bad_scheme = bytes;
  bad_scheme[10] = 9;
  for (const auto& b : {bad_magic, truncated, bad_scheme}) {
    try {
      RepresentationIndex::deserialize(b);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFormatError);
    }
    EXPECT_THROW(scan_space(b), Error);
  }
}

TEST(Index, HeaderLayout) {
  const auto bytes = RepresentationIndex::build({}, 300, QuantKind::kU8, Granularity::kGlobal,
                                                Fingerprint{})
                         .serialize();
  ASSERT_EQ(bytes.size(), 52u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "TGIX");
  EXPECT_EQ(bytes[8] | (bytes[9] << 8), 300);
  EXPECT_EQ(bytes[10], 2);
  EXPECT_EQ(bytes[11], 2);
}

}  // namespace
}  // namespace topicret

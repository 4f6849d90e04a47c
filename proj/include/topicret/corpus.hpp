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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace topicret {

using TokenId = std::int32_t;

// Reserved vocabulary slots. Indices 0..3 are the sequence markers, 4 is the
// out-of-vocabulary token.
namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kCls = 1;
inline constexpr TokenId kQuery = 2;
inline constexpr TokenId kDoc = 3;
inline constexpr TokenId kUnk = 4;
inline constexpr std::size_t kCount = 5;
}  // namespace special

// Marker tokens ([PAD], [CLS], [Q], [D]) only provide context; [UNK] is a
// word position that carries no topic.
inline bool is_marker(TokenId id) { return id >= 0 && id < special::kUnk; }
inline bool is_special(TokenId id) {
  return id >= 0 && id < static_cast<TokenId>(special::kCount);
}

enum class TextKind { kQuery, kDocument };

struct TokenSeq {
  std::string text_id;
  std::vector<TokenId> tokens;
  TextKind kind = TextKind::kDocument;

  std::size_t size() const { return tokens.size(); }
};

struct LengthLimits {
  std::size_t max_query_len = 32;
  std::size_t max_doc_len = 180;

  std::size_t limit(TextKind kind) const {
    return kind == TextKind::kQuery ? max_query_len : max_doc_len;
  }
  std::size_t max_len() const { return std::max(max_query_len, max_doc_len); }
};

// Lowercases ASCII and splits on whitespace and punctuation (ASCII plus the
// common Unicode space and punctuation blocks).
std::vector<std::string> split_words(std::string_view raw);

class Vocab {
 public:
  Vocab();

  static Vocab build(std::span<const std::string> texts, std::uint64_t min_count);

  TokenId lookup(std::string_view word) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::uint64_t doc_freq(TokenId id) const { return doc_freq_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  // One `token\tdoc_freq` line per index.
  std::string serialize() const;
  static Vocab parse(std::string_view text);

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && doc_freq_ == other.doc_freq_;
  }

 private:
  void add(std::string token, std::uint64_t df);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> doc_freq_;
  std::unordered_map<std::string, TokenId> index_;
};

// Prefixes [CLS] plus [Q]/[D] and truncates to the kind's limit, keeping the
// head of the text. Throws EmptyText when no word survives normalization.
TokenSeq tokenize(const Vocab& vocab, std::string_view raw, TextKind kind,
                  const LengthLimits& limits, std::string text_id = {});

// Joins the word tokens (markers dropped) with single spaces.
std::string detokenize(const Vocab& vocab, const TokenSeq& seq);

// id -> raw text, in file order.
class TextCollection {
 public:
  struct Record {
    std::string id;
    std::string text;
  };

  void add(std::string id, std::string text);
  const Record* find(std::string_view id) const;
  const std::string& text(std::string_view id) const;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  bool operator==(const TextCollection& o) const;

 private:
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct Judgments {
  // Only pairs with grade >= 1 land here.
  std::map<std::string, std::set<std::string>> relevant;

  bool is_relevant(const std::string& qid, const std::string& docid) const;
  std::size_t relevant_count(const std::string& qid) const;
  bool operator==(const Judgments&) const = default;
};

struct TrainingTriple {
  std::string query_id;
  std::string positive_id;
  std::vector<std::string> negative_ids;
  bool operator==(const TrainingTriple&) const = default;
};

struct TrainingSet {
  std::size_t negatives = 0;
  std::vector<TrainingTriple> triples;
  bool operator==(const TrainingSet&) const = default;
};

TextCollection parse_collection(std::istream& in);
Judgments parse_qrels(std::istream& in);
TrainingSet parse_triples(std::istream& in);

TextCollection read_collection(const std::filesystem::path& path);
Judgments read_qrels(const std::filesystem::path& path);
TrainingSet read_triples(const std::filesystem::path& path);

void write_collection(std::ostream& out, const TextCollection& c);
void write_qrels(std::ostream& out, const Judgments& j);
void write_triples(std::ostream& out, const TrainingSet& t);

void write_collection(const std::filesystem::path& path, const TextCollection& c);
void write_qrels(const std::filesystem::path& path, const Judgments& j);
void write_triples(const std::filesystem::path& path, const TrainingSet& t);

}  // namespace topicret

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

#include "topicret/corpus.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "topicret/common.hpp"

namespace topicret {

namespace {

constexpr std::string_view kSpecialNames[special::kCount] = {
    "[PAD]", "[CLS]", "[Q]", "[D]", "[UNK]"};

// Decodes one UTF-8 sequence starting at `i`; returns the code point and
// advances `i`. Malformed bytes decode as U+FFFD-like separators.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  if (i + len > s.size()) {
    i = s.size();
    return 0xfffd;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xc0) != 0x80) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (b & 0x3f);
  }
  i += len;
  return cp;
}

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    return !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
             (c >= 'A' && c <= 'Z'));
  }
  return cp == 0x85 || (cp >= 0xa0 && cp <= 0xbf) || cp == 0xd7 ||
         cp == 0xf7 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x206f) ||
         (cp >= 0x3000 && cp <= 0x303f) || cp == 0xfeff || cp == 0xfffd;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto view = strip_cr(line);
    if (view.empty()) continue;
    fn(view, number);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path.string());
  return out;
}

}  // namespace

std::vector<std::string> split_words(std::string_view raw) {
  std::vector<std::string> words;
  std::string current;
  std::size_t i = 0;
  while (i < raw.size()) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(raw, i);
    if (is_separator(cp)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (cp < 0x80) {
      current.push_back(static_cast<char>(
          cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
    } else {
      current.append(raw.substr(start, i - start));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

Vocab::Vocab() {
  for (auto name : kSpecialNames) add(std::string(name), 0);
}

void Vocab::add(std::string token, std::uint64_t df) {
  const auto id = static_cast<TokenId>(tokens_.size());
  if (!index_.emplace(token, id).second) {
    throw Error(ErrorCode::kDuplicateId, "duplicate vocabulary token " + token);
  }
  tokens_.push_back(std::move(token));
  doc_freq_.push_back(df);
}

Vocab Vocab::build(std::span<const std::string> texts, std::uint64_t min_count) {
  if (min_count < 1) {
    throw Error(ErrorCode::kInvalidConfig, "min_count must be >= 1");
  }
  if (texts.empty()) throw Error(ErrorCode::kEmptyCorpus, "no texts");

  struct Counts {
    std::uint64_t total = 0;
    std::uint64_t docs = 0;
    std::size_t last_doc = SIZE_MAX;
  };
  std::unordered_map<std::string, Counts> counts;
  for (std::size_t d = 0; d < texts.size(); ++d) {
    for (auto& w : split_words(texts[d])) {
      auto& c = counts[std::move(w)];
      ++c.total;
      if (c.last_doc != d) {
        ++c.docs;
        c.last_doc = d;
      }
    }
  }

  std::vector<std::pair<const std::string*, const Counts*>> kept;
  for (const auto& [word, c] : counts) {
    if (c.total >= min_count) kept.emplace_back(&word, &c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second->total != b.second->total) {
      return a.second->total > b.second->total;
    }
    return *a.first < *b.first;
  });

  Vocab vocab;
  for (const auto& [word, c] : kept) vocab.add(*word, c->docs);
  return vocab;
}

TokenId Vocab::lookup(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? special::kUnk : it->second;
}

std::string Vocab::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(doc_freq_[i]);
    out += '\n';
  }
  return out;
}

Vocab Vocab::parse(std::string_view text) {
  Vocab vocab;
  std::istringstream in{std::string(text)};
  std::size_t row = 0;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    const auto fields = split_on(line, '\t');
    std::uint64_t df = 0;
    if (fields.size() != 2 || fields[0].empty() ||
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(),
                        df)
                .ec != std::errc{}) {
      throw Error(ErrorCode::kParseError, "malformed vocabulary line", number);
    }
    if (row < special::kCount) {
      if (fields[0] != kSpecialNames[row]) {
        throw Error(ErrorCode::kParseError, "special token out of place", number);
      }
    } else {
      vocab.add(std::string(fields[0]), df);
    }
    ++row;
  });
  if (row < special::kCount) {
    throw Error(ErrorCode::kParseError, "vocabulary missing special tokens");
  }
  return vocab;
}

TokenSeq tokenize(const Vocab& vocab, std::string_view raw, TextKind kind,
                  const LengthLimits& limits, std::string text_id) {
  const std::size_t limit = limits.limit(kind);
  if (limit < 3) {
    throw Error(ErrorCode::kInvalidConfig, "max length must be at least 3");
  }
  const auto words = split_words(raw);
  if (words.empty()) {
    throw Error(ErrorCode::kEmptyText,
                "no words after normalization" +
                    (text_id.empty() ? std::string() : " in " + text_id));
  }
  TokenSeq seq;
  seq.text_id = std::move(text_id);
  seq.kind = kind;
  seq.tokens.reserve(std::min(limit, words.size() + 2));
  seq.tokens.push_back(special::kCls);
  seq.tokens.push_back(kind == TextKind::kQuery ? special::kQuery
                                                : special::kDoc);
  for (const auto& w : words) {
    if (seq.tokens.size() == limit) break;
    seq.tokens.push_back(vocab.lookup(w));
  }
  return seq;
}

std::string detokenize(const Vocab& vocab, const TokenSeq& seq) {
  std::string out;
  for (auto id : seq.tokens) {
    if (is_marker(id)) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

void TextCollection::add(std::string id, std::string text) {
  if (position_.contains(id)) {
    throw Error(ErrorCode::kDuplicateId, "duplicate text id " + id);
  }
  position_.emplace(id, records_.size());
  records_.push_back({std::move(id), std::move(text)});
}

const TextCollection::Record* TextCollection::find(std::string_view id) const {
  const auto it = position_.find(std::string(id));
  return it == position_.end() ? nullptr : &records_[it->second];
}

const std::string& TextCollection::text(std::string_view id) const {
  const auto* r = find(id);
  if (r == nullptr) {
    throw Error(ErrorCode::kIncompatibleArtifacts,
                "unknown text id " + std::string(id));
  }
  return r->text;
}

bool TextCollection::operator==(const TextCollection& o) const {
  if (records_.size() != o.records_.size()) return false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].id != o.records_[i].id ||
        records_[i].text != o.records_[i].text) {
      return false;
    }
  }
  return true;
}

bool Judgments::is_relevant(const std::string& qid,
                            const std::string& docid) const {
  const auto it = relevant.find(qid);
  return it != relevant.end() && it->second.contains(docid);
}

std::size_t Judgments::relevant_count(const std::string& qid) const {
  const auto it = relevant.find(qid);
  return it == relevant.end() ? 0 : it->second.size();
}

TextCollection parse_collection(std::istream& in) {
  TextCollection c;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw Error(ErrorCode::kParseError, "expected <id>\\t<text>", number);
    }
    std::string id(line.substr(0, tab));
    if (c.find(id) != nullptr) {
      throw Error(ErrorCode::kDuplicateId, "duplicate text id " + id, number);
    }
    c.add(std::move(id), std::string(line.substr(tab + 1)));
  });
  return c;
}

Judgments parse_qrels(std::istream& in) {
  Judgments j;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    const auto fields = split_whitespace(line);
    int grade = 0;
    if (fields.size() != 4 ||
        std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(),
                        grade)
                .ec != std::errc{}) {
      throw Error(ErrorCode::kParseError, "expected <qid> 0 <docid> <rel>",
                  number);
    }
    std::string qid(fields[0]);
    std::string docid(fields[2]);
    if (!seen.emplace(qid, docid).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate judgment " + qid + " " + docid, number);
    }
    if (grade >= 1) j.relevant[qid].insert(docid);
  });
  return j;
}

TrainingSet parse_triples(std::istream& in) {
  TrainingSet t;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    const auto fields = split_on(line, '\t');
    if (fields.size() < 3) {
      throw Error(ErrorCode::kParseError,
                  "expected <qid>\\t<pos>\\t<neg_1>...<neg_m>", number);
    }
    for (auto f : fields) {
      if (f.empty()) throw Error(ErrorCode::kParseError, "empty field", number);
    }
    const std::size_t m = fields.size() - 2;
    if (t.triples.empty()) {
      t.negatives = m;
    } else if (m != t.negatives) {
      throw Error(ErrorCode::kParseError,
                  "negative count changed from " + std::to_string(t.negatives) +
                      " to " + std::to_string(m),
                  number);
    }
    TrainingTriple triple{std::string(fields[0]), std::string(fields[1]), {}};
    for (std::size_t i = 2; i < fields.size(); ++i) {
      if (fields[i] == fields[1]) {
        throw Error(ErrorCode::kParseError, "positive listed as negative",
                    number);
      }
      triple.negative_ids.emplace_back(fields[i]);
    }
    t.triples.push_back(std::move(triple));
  });
  return t;
}

TextCollection read_collection(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_collection(in);
}

Judgments read_qrels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_qrels(in);
}

TrainingSet read_triples(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_triples(in);
}

void write_collection(std::ostream& out, const TextCollection& c) {
  for (const auto& r : c) out << r.id << '\t' << r.text << '\n';
}

void write_qrels(std::ostream& out, const Judgments& j) {
  for (const auto& [qid, docs] : j.relevant) {
    for (const auto& d : docs) out << qid << " 0 " << d << " 1\n";
  }
}

void write_triples(std::ostream& out, const TrainingSet& t) {
  for (const auto& tr : t.triples) {
    out << tr.query_id << '\t' << tr.positive_id;
    for (const auto& n : tr.negative_ids) out << '\t' << n;
    out << '\n';
  }
}

void write_collection(const std::filesystem::path& path,
                      const TextCollection& c) {
  auto out = open_output(path);
  write_collection(out, c);
}

void write_qrels(const std::filesystem::path& path, const Judgments& j) {
  auto out = open_output(path);
  write_qrels(out, j);
}

void write_triples(const std::filesystem::path& path, const TrainingSet& t) {
  auto out = open_output(path);
  write_triples(out, t);
}

}  // namespace topicret

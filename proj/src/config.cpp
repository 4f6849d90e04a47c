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

#include "topicret/config.hpp"

#include <charconv>
#include <functional>
#include <limits>
#include <sstream>

#include "topicret/binary_io.hpp"

namespace topicret {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::size_t line) {
  throw Error(ErrorCode::kParseError,
              "bad value '" + std::string(value) + "' for " + std::string(key), line);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::size_t line) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || p != end || value.empty()) bad_value(key, value, line);
  return out;
}

bool parse_switch(std::string_view key, std::string_view value, std::size_t line) {
  if (value == "on") return true;
  if (value == "off") return false;
  bad_value(key, value, line);
}

template <typename F>
auto parse_enum(std::string_view key, std::string_view value, std::size_t line, F f) {
  try {
    return f(value);
  } catch (const Error&) {
    bad_value(key, value, line);
  }
}

struct Field {
  std::string_view key;
  bool fingerprinted;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view, std::size_t)> set;
};

#define TR_STRING(name, member)                                              \
  Field {                                                                    \
    name, false, [](const RunConfig& c) { return c.member; },                \
        [](RunConfig& c, std::string_view v, std::size_t) { c.member = v; }  \
  }
#define TR_NUMBER(name, member, fp)                                             \
  Field {                                                                       \
    name, fp, [](const RunConfig& c) { return std::to_string(c.member); },      \
        [](RunConfig& c, std::string_view v, std::size_t line) {                \
          c.member = parse_number<decltype(c.member)>(name, v, line);           \
        }                                                                       \
  }
#define TR_REAL(name, member)                                                   \
  Field {                                                                       \
    name, true, [](const RunConfig& c) { return fmt_double(c.member); },        \
        [](RunConfig& c, std::string_view v, std::size_t line) {                \
          c.member = parse_number<double>(name, v, line);                       \
        }                                                                       \
  }
#define TR_PRIOR(name, member)                                                  \
  Field {                                                                       \
    name, true,                                                                 \
        [](const RunConfig& c) {                                                \
          return c.member ? fmt_double(*c.member) : std::string("auto");        \
        },                                                                      \
        [](RunConfig& c, std::string_view v, std::size_t line) {                \
          if (v == "auto") {                                                    \
            c.member.reset();                                                   \
          } else {                                                              \
            c.member = parse_number<double>(name, v, line);                     \
          }                                                                     \
        }                                                                       \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      TR_STRING("collection", collection),
      TR_STRING("queries", queries),
      TR_STRING("qrels", qrels),
      TR_STRING("triples", triples),
      TR_STRING("train-queries", train_queries),
      TR_STRING("artifacts", artifacts),
      TR_NUMBER("seed", seed, true),
      TR_NUMBER("threads", threads, false),
      TR_NUMBER("min-count", min_count, true),
      TR_NUMBER("topics", topics, true),
      TR_PRIOR("alpha", alpha),
      TR_PRIOR("eta", eta),
      TR_NUMBER("lda-train-iters", lda_train_iters, true),
      TR_NUMBER("lda-infer-iters", lda_infer_iters, true),
      TR_REAL("theta-t", theta_t),
      TR_REAL("theta-wf", theta_wf),
      TR_REAL("theta-wr", theta_wr),
      TR_NUMBER("negatives", negatives, true),
      TR_NUMBER("batch-size", batch_size, true),
      TR_NUMBER("epochs", epochs, true),
      TR_REAL("learning-rate", learning_rate),
      Field{"optimizer", true,
            [](const RunConfig& c) { return std::string(optimizer_name(c.optimizer)); },
            [](RunConfig& c, std::string_view v, std::size_t line) {
              c.optimizer = parse_enum("optimizer", v, line, parse_optimizer);
            }},
      TR_REAL("beta1", beta1),
      TR_REAL("beta2", beta2),
      TR_REAL("epsilon", epsilon),
      Field{"normalize", true,
            [](const RunConfig& c) { return std::string(c.normalize ? "on" : "off"); },
            [](RunConfig& c, std::string_view v, std::size_t line) {
              c.normalize = parse_switch("normalize", v, line);
            }},
      Field{"granularity", true,
            [](const RunConfig& c) { return std::string(granularity_name(c.granularity)); },
            [](RunConfig& c, std::string_view v, std::size_t line) {
              c.granularity = parse_enum("granularity", v, line, parse_granularity);
            }},
      TR_NUMBER("dim", dim, true),
      TR_NUMBER("context-dim", context_dim, true),
      TR_NUMBER("attention-dim", attention_dim, true),
      TR_NUMBER("max-query-len", max_query_len, true),
      TR_NUMBER("max-doc-len", max_doc_len, true),
      Field{"scheme", false,
            [](const RunConfig& c) { return std::string(quant_name(c.scheme)); },
            [](RunConfig& c, std::string_view v, std::size_t line) {
              c.scheme = parse_enum("scheme", v, line, parse_quant);
            }},
      TR_NUMBER("k", k, false),
  };
  return table;
}

#undef TR_STRING
#undef TR_NUMBER
#undef TR_REAL
#undef TR_PRIOR

const Field& field(std::string_view key, std::size_t line) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw Error(ErrorCode::kParseError, "unknown config key '" + std::string(key) + "'",
              line);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value, std::size_t line) {
  field(key, line).set(*this, value, line);
}

std::string RunConfig::get(std::string_view key) const { return field(key, 0).get(*this); }

const std::vector<std::string_view>& RunConfig::keys() {
  static const std::vector<std::string_view> out = [] {
    std::vector<std::string_view> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return out;
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParseError, "expected key=value", line_no);
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return parse(io::read_text_file(path));
}

std::string RunConfig::render() const {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

void RunConfig::validate() const {
  if (threads < 1) throw Error(ErrorCode::kInvalidConfig, "threads must be >= 1");
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be at least 1");
  if (min_count < 1) throw Error(ErrorCode::kInvalidConfig, "min-count must be >= 1");
  if (dim < 1 || dim > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::kInvalidConfig, "dim must be in [1, 65535]");
  }
  if (max_query_len < 3 || max_doc_len < 3) {
    throw Error(ErrorCode::kInvalidConfig, "max lengths must be >= 3");
  }
  if (topics >= 0xffff) throw Error(ErrorCode::kInvalidConfig, "too many topics");
  lda().validate();
  extraction().validate();
  train().validate();
  EncoderShape shape = encoder_shape(special::kCount + 1);
  shape.validate();
}

LdaConfig RunConfig::lda() const {
  LdaConfig c = LdaConfig::with_topics(topics);
  if (alpha) c.alpha = *alpha;
  if (eta) c.eta = *eta;
  c.train_iters = lda_train_iters;
  c.infer_iters = lda_infer_iters;
  c.seed = seed;
  return c;
}

TopicExtractionConfig RunConfig::extraction() const {
  TopicExtractionConfig c;
  c.theta_t = theta_t;
  c.theta_wf = theta_wf;
  c.theta_wr = theta_wr;
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c;
  c.negatives = negatives;
  c.batch_size = batch_size;
  c.epochs = epochs;
  c.learning_rate = learning_rate;
  c.optimizer = optimizer;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.epsilon = epsilon;
  c.seed = seed;
  c.normalize = normalize;
  c.granularity = granularity;
  return c;
}

LengthLimits RunConfig::limits() const {
  LengthLimits l;
  l.max_query_len = max_query_len;
  l.max_doc_len = max_doc_len;
  return l;
}

EncoderShape RunConfig::encoder_shape(std::size_t vocab_size) const {
  EncoderShape s;
  s.vocab = vocab_size;
  s.max_len = std::max(max_query_len, max_doc_len);
  s.context_dim = context_dim;
  s.attention_dim = attention_dim;
  s.output_dim = dim;
  s.topics = topics;
  return s;
}

std::uint64_t RunConfig::init_seed() const { return splitmix64(seed ^ 0x696e6974ULL); }

std::string RunConfig::fingerprint_text() const {
  std::string out;
  for (const auto& f : fields()) {
    if (!f.fingerprinted) continue;
    out += f.key;
    out += '=';
    out += f.get(*this);
    out += '\n';
  }
  return out;
}

Fingerprint RunConfig::fingerprint(const Vocab& vocab) const {
  return sha256(fingerprint_text() + "\n" + vocab.serialize());
}

std::filesystem::path RunConfig::artifact(std::string_view name) const {
  return std::filesystem::path(artifacts) / std::string(name);
}

}  // namespace topicret

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

#include "topicret/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>

#include "topicret/binary_io.hpp"

namespace topicret {

namespace {

constexpr char kCheckpointMagic[4] = {'T', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct ExampleResult {
  double loss = 0.0;
  EncoderParams gradient;
};

void add_into(EncoderParams& total, const EncoderParams& part, double scale) {
  std::vector<Matrix*> dst;
  total.for_each([&](std::string_view, Matrix& m) { dst.push_back(&m); });
  std::size_t i = 0;
  part.for_each([&](std::string_view, const Matrix& m) {
    axpy(scale, m.values(), dst[i++]->values());
  });
}

// Forward pass over one example; fills the gradient when `grad` is non-null.
double run_example(const EncoderParams& params, std::span<const PreparedText> texts,
                   const TrainingExample& ex, Granularity granularity,
                   bool normalize, EncoderParams* grad) {
  const auto& query_text = texts[ex.query];
  const auto query = forward_text(params, query_text, granularity, normalize);

  std::vector<std::size_t> doc_ids{ex.positive};
  doc_ids.insert(doc_ids.end(), ex.negatives.begin(), ex.negatives.end());
  std::vector<EncodedText> docs;
  std::vector<MaxSimTrace> traces;
  std::vector<double> scores;
  for (auto id : doc_ids) {
    docs.push_back(forward_text(params, texts[id], granularity, normalize));
    traces.push_back(maxsim_trace(query.embeddings, docs.back().embeddings));
    scores.push_back(traces.back().score);
  }
  const double loss = contrastive_loss(scores);
  if (grad == nullptr) return loss;

  // d loss / d score_k = softmax_k - [k == 0]
  std::vector<double> d_scores(scores);
  const double mx = *std::max_element(d_scores.begin(), d_scores.end());
  double sum = 0.0;
  for (double& s : d_scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  for (double& s : d_scores) s /= sum;
  d_scores[0] -= 1.0;

  Matrix d_query(query.embeddings.rows(), query.embeddings.cols());
  for (std::size_t k = 0; k < docs.size(); ++k) {
    const auto& doc = docs[k];
    Matrix d_doc(doc.embeddings.rows(), doc.embeddings.cols());
    for (std::size_t i = 0; i < query.embeddings.rows(); ++i) {
      const std::size_t j = traces[k].best[i];
      axpy(d_scores[k], doc.embeddings.row(j), d_query.row(i));
      axpy(d_scores[k], query.embeddings.row(i), d_doc.row(j));
    }
    backward_text(params, texts[doc_ids[k]], doc, d_doc, normalize, *grad);
  }
  backward_text(params, query_text, query, d_query, normalize, *grad);
  return loss;
}

void check_finite(const EncoderParams& gradient) {
  gradient.for_each([](std::string_view name, const Matrix& m) {
    for (double v : m.values()) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNumericalError,
                    "non-finite gradient in " + std::string(name));
      }
    }
  });
}

}  // namespace

std::string_view optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorCode::kInvalidConfig, "unknown optimizer " + std::string(name));
}

void TrainConfig::validate() const {
  if (negatives < 1) throw Error(ErrorCode::kInvalidConfig, "m must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning rate must be finite and >= 0");
  }
}

double contrastive_loss(std::span<const double> scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return std::max(0.0, mx + std::log(sum) - scores[0]);
}

MaxSimTrace maxsim_trace(const Matrix& query, const Matrix& doc) {
  MaxSimTrace t;
  t.best.resize(query.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc.rows(); ++j) {
      const double s = dot(query.row(i), doc.row(j));
      if (s > best) {
        best = s;
        t.best[i] = j;
      }
    }
    t.score += best;
  }
  return t;
}

BatchGradient compute_batch_gradient(const EncoderParams& params,
                                     std::span<const PreparedText> texts,
                                     std::span<const TrainingExample> examples,
                                     Granularity granularity, bool normalize) {
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  std::vector<ExampleResult> results(examples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t e = 0; e < n; ++e) {
    try {
      auto& r = results[static_cast<std::size_t>(e)];
      r.gradient = EncoderParams::zeros(params.shape);
      r.loss = run_example(params, texts, examples[static_cast<std::size_t>(e)],
                           granularity, normalize, &r.gradient);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  BatchGradient out;
  out.gradient = EncoderParams::zeros(params.shape);
  const double scale = 1.0 / static_cast<double>(examples.size());
  for (const auto& r : results) {
    out.mean_loss += r.loss;
    add_into(out.gradient, r.gradient, scale);
  }
  out.mean_loss *= scale;
  if (std::isfinite(out.mean_loss)) check_finite(out.gradient);
  return out;
}

double batch_loss(const EncoderParams& params, std::span<const PreparedText> texts,
                  std::span<const TrainingExample> examples, Granularity granularity,
                  bool normalize) {
  double total = 0.0;
  for (const auto& ex : examples) {
    total += run_example(params, texts, ex, granularity, normalize, nullptr);
  }
  return total / static_cast<double>(examples.size());
}

void Optimizer::step(EncoderParams& params, const EncoderParams& gradient) {
  const double lr = config_.learning_rate;
  std::vector<Matrix*> grads;
  const_cast<EncoderParams&>(gradient).for_each(
      [&](std::string_view, Matrix& m) { grads.push_back(&m); });

  if (config_.optimizer == OptimizerKind::kSgd) {
    std::size_t i = 0;
    params.for_each([&](std::string_view, Matrix& p) {
      axpy(-lr, grads[i++]->values(), p.values());
    });
    return;
  }

  if (steps_ == 0) {
    first_moment_ = EncoderParams::zeros(params.shape);
    second_moment_ = EncoderParams::zeros(params.shape);
  }
  ++steps_;
  std::vector<Matrix*> m1, m2;
  first_moment_.for_each([&](std::string_view, Matrix& m) { m1.push_back(&m); });
  second_moment_.for_each([&](std::string_view, Matrix& m) { m2.push_back(&m); });
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  std::size_t t = 0;
  params.for_each([&](std::string_view, Matrix& p) {
    auto pv = p.values();
    const auto g = grads[t]->values();
    auto m = m1[t]->values();
    auto v = m2[t]->values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      pv[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
    ++t;
  });
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  io::ByteWriter w;
  w.put_string(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_bytes(fingerprint);
  w.put<std::uint64_t>(epoch);
  params.serialize_into(w);
  return std::move(w.bytes());
}

Checkpoint Checkpoint::deserialize(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.get_string(4) != std::string_view(kCheckpointMagic, 4)) {
    throw Error(ErrorCode::kFormatError, "not a TGCK file");
  }
  if (r.get<std::uint32_t>() != kCheckpointVersion) {
    throw Error(ErrorCode::kFormatError, "unsupported TGCK version");
  }
  Checkpoint c;
  const auto fp = r.get_bytes(c.fingerprint.size());
  std::copy(fp.begin(), fp.end(), c.fingerprint.begin());
  c.epoch = r.get<std::uint64_t>();
  c.params = EncoderParams::deserialize_from(r);
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after TGCK payload");
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  io::write_file(path, serialize());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path));
}

TrainResult train(const TrainConfig& config, std::span<const PreparedText> texts,
                  std::span<const TrainingExample> examples, EncoderParams initial,
                  const Fingerprint& fingerprint, const EpochCallback& on_epoch) {
  config.validate();
  if (examples.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training examples");
  for (const auto& ex : examples) {
    if (ex.negatives.size() != config.negatives) {
      throw Error(ErrorCode::kInvalidConfig,
                  "example negative count differs from configured m");
    }
  }

  TrainResult result;
  result.checkpoint.fingerprint = fingerprint;
  EncoderParams params = std::move(initial);
  Optimizer optimizer(config);
  Rng rng(splitmix64(config.seed ^ 0x747261696eULL));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<TrainingExample> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      auto step = compute_batch_gradient(params, texts, batch, config.granularity,
                                         config.normalize);
      if (!std::isfinite(step.mean_loss)) {
        result.diverged = true;
        result.checkpoint.params = std::move(params);
        return result;
      }
      loss_sum += step.mean_loss * static_cast<double>(batch.size());
      optimizer.step(params, step.gradient);
    }
    const double mean = loss_sum / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    result.checkpoint.epoch = epoch;
    result.checkpoint.running_loss = mean;
    if (on_epoch) on_epoch(epoch, mean);
  }
  params.round_to_float();
  result.checkpoint.params = std::move(params);
  return result;
}

std::string render_training_log(std::span<const double> epoch_losses) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", i + 1, epoch_losses[i]);
    out += buf;
  }
  return out;
}

}  // namespace topicret

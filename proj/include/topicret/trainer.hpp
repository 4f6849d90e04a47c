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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topicret/common.hpp"
#include "topicret/encoder.hpp"

namespace topicret {

enum class OptimizerKind { kSgd, kAdam };

std::string_view optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t negatives = 3;  // m
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  bool normalize = true;
  Granularity granularity = Granularity::kTopic;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// -log softmax(scores)[0]; scores[0] is the positive document.
double contrastive_loss(std::span<const double> scores);

// Indices into a table of prepared texts.
struct TrainingExample {
  std::size_t query = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

// Sum over query rows of the best dot product against document rows.
// `best[i]` is the winning document row for query row i (lowest on ties).
struct MaxSimTrace {
  double score = 0.0;
  std::vector<std::size_t> best;
};
MaxSimTrace maxsim_trace(const Matrix& query, const Matrix& doc);

struct BatchGradient {
  double mean_loss = 0.0;
  EncoderParams gradient;
};

// Mean loss over the examples and its exact gradient. MaxSim contributes a
// subgradient through the winning document row only. Examples are processed
// in parallel and reduced in index order.
BatchGradient compute_batch_gradient(const EncoderParams& params,
                                     std::span<const PreparedText> texts,
                                     std::span<const TrainingExample> examples,
                                     Granularity granularity, bool normalize);

double batch_loss(const EncoderParams& params, std::span<const PreparedText> texts,
                  std::span<const TrainingExample> examples, Granularity granularity,
                  bool normalize);

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& config) : config_(config) {}
  void step(EncoderParams& params, const EncoderParams& gradient);

 private:
  TrainConfig config_;
  std::uint64_t steps_ = 0;
  EncoderParams first_moment_;
  EncoderParams second_moment_;
};

struct Checkpoint {
  EncoderParams params;
  std::uint64_t epoch = 0;
  double running_loss = 0.0;  // not persisted
  Fingerprint fingerprint{};

  // TGCK: magic, u32 version, 32-byte fingerprint, u64 epoch, TGEN block.
  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;
  bool diverged = false;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Shuffles examples once per epoch from the seed, then steps the optimizer per
// batch. On a non-finite loss the last good parameters are returned with
// `diverged` set.
TrainResult train(const TrainConfig& config, std::span<const PreparedText> texts,
                  std::span<const TrainingExample> examples, EncoderParams initial,
                  const Fingerprint& fingerprint, const EpochCallback& on_epoch = {});

// `epoch\tmean_loss` lines.
std::string render_training_log(std::span<const double> epoch_losses);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

// Central finite differences (step h) against the analytic gradient on a tiny
// random model: V=20, d_c=d_a=dim=4, K=3.
GradientCheckReport check_gradients(std::uint64_t seed,
                                    Granularity granularity = Granularity::kTopic,
                                    double step = 1e-4);

}  // namespace topicret

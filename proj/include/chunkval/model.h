// Copyright 2026 The chunkval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A two-hidden-layer perceptron trained with plain SGD. This is the learner
// every valuation method scores data against.

#ifndef CHUNKVAL_MODEL_H_
#define CHUNKVAL_MODEL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "chunkval/common.h"
#include "chunkval/dataset.h"

namespace chunkval {

struct Architecture {
  int input_dim = 0;
  std::array<int, 2> hidden{64, 32};
  int output_dim = 0;  // K for classification, 1 for regression
  Task task = Task::kClassification;

  bool operator==(const Architecture&) const = default;
};

Architecture make_architecture(const Dataset& ds, std::array<int, 2> hidden = {64, 32});

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_in x fan_out
  Eigen::VectorXd bias;    // fan_out
};

// Trainable parameters; also the shape of a gradient.
struct Parameters {
  std::array<DenseLayer, 3> layers;

  Parameters& operator+=(const Parameters& other);
  Parameters& operator*=(double s);
  std::size_t size() const;
  bool all_finite() const;
  // Flattened in layer order, weights (column-major) before biases.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

using Gradient = Parameters;

struct Checkpoint {
  Architecture arch;
  Parameters params;
  std::int64_t step_count = 0;
  std::uint64_t seed = 0;
};

// Rows and targets materialised for repeated use.
struct Batch {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

Batch make_batch(const Dataset& ds);
Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows);

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
Checkpoint init_params(const Architecture& arch, std::uint64_t seed);

// Softmax probabilities (classification) or predictions (regression), one row
// per input row.
Eigen::MatrixXd predict(const Checkpoint& w, const Eigen::MatrixXd& x);

// Mean loss: cross-entropy (probability floor 1e-12) or half squared error.
double loss(const Checkpoint& w, const Batch& batch);

// Gradient of the mean batch loss.
Gradient loss_gradient(const Checkpoint& w, const Batch& batch);
// Gradient of the summed batch loss; what an SGD step consumes.
Gradient loss_gradient_sum(const Checkpoint& w, const Batch& batch);

// w - eta * grad_sum, with step_count incremented.
Checkpoint apply_update(const Checkpoint& w, const Gradient& grad_sum, double eta);

// One step with the gradient summed over the batch, evaluated at w.
Checkpoint sgd_step(const Checkpoint& w, const Batch& batch, double eta);

struct TrainConfig {
  int epochs = 20;
  double eta = 0.001;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

Checkpoint train(const Dataset& ds_train, const Architecture& arch, const TrainConfig& cfg);

enum class MetricKind { kAccuracy, kRmse };

struct MetricSpec {
  MetricKind kind = MetricKind::kAccuracy;

  bool higher_is_better() const { return kind == MetricKind::kAccuracy; }
  // Oriented score back to the raw metric (rmse is stored negated).
  double raw(double oriented) const { return higher_is_better() ? oriented : -oriented; }
};

std::string to_string(MetricKind kind);
MetricSpec default_metric(Task task);

// Higher is better: accuracy as is, rmse negated.
double evaluate_metric(const Checkpoint& w, const Batch& eval, const MetricSpec& m);
double evaluate_metric(const Checkpoint& w, const Dataset& ds_eval, const MetricSpec& m);

}  // namespace chunkval

#endif  // CHUNKVAL_MODEL_H_

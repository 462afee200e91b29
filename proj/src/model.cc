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

#include "chunkval/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace chunkval {

Architecture make_architecture(const Dataset& ds, std::array<int, 2> hidden) {
  Architecture arch;
  arch.input_dim = static_cast<int>(ds.cols());
  arch.hidden = hidden;
  arch.task = ds.task;
  arch.output_dim = ds.task == Task::kClassification ? ds.num_classes : 1;
  return arch;
}

Parameters& Parameters::operator+=(const Parameters& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  return *this;
}

Parameters& Parameters::operator*=(double s) {
  for (auto& layer : layers) {
    layer.weight *= s;
    layer.bias *= s;
  }
  return *this;
}

std::size_t Parameters::size() const {
  std::size_t total = 0;
  for (const auto& layer : layers)
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return total;
}

bool Parameters::all_finite() const {
  return std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
    return l.weight.allFinite() && l.bias.allFinite();
  });
}

Eigen::VectorXd Parameters::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for (const auto& layer : layers) {
    flat.segment(at, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    at += layer.weight.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return flat;
}

void Parameters::unflatten(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != size())
    throw UsageError("parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (auto& layer : layers) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        flat.segment(at, layer.weight.size());
    at += layer.weight.size();
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
}

Batch make_batch(const Dataset& ds) { return Batch{ds.features, ds.targets}; }

Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  b.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.x.row(static_cast<Eigen::Index>(i)) = ds.features.row(r);
    b.y(static_cast<Eigen::Index>(i)) = ds.targets(r);
  }
  return b;
}

namespace {

std::array<int, 4> layer_dims(const Architecture& arch) {
  return {arch.input_dim, arch.hidden[0], arch.hidden[1], arch.output_dim};
}

void check_architecture(const Architecture& arch) {
  for (int d : layer_dims(arch)) {
    if (d <= 0) throw UsageError("architecture has a zero-sized layer");
  }
  if (arch.task == Task::kRegression && arch.output_dim != 1)
    throw UsageError("regression head must have one output");
  if (arch.task == Task::kClassification && arch.output_dim < 2)
    throw UsageError("classification head needs at least two outputs");
}

void check_batch(const Checkpoint& w, const Batch& batch) {
  if (batch.size() == 0) throw UsageError("empty batch");
  if (batch.x.cols() != w.arch.input_dim)
    throw UsageError("batch has " + std::to_string(batch.x.cols()) +
                     " features, model expects " + std::to_string(w.arch.input_dim));
  if (batch.y.size() != batch.x.rows()) throw UsageError("batch target length mismatch");
}

struct Activations {
  Eigen::MatrixXd z1, a1, z2, a2, out;  // out: logits or predictions
};

Activations forward(const Checkpoint& w, const Eigen::MatrixXd& x) {
  const auto& L = w.params.layers;
  Activations act;
  act.z1 = x * L[0].weight;
  act.z1.rowwise() += L[0].bias.transpose();
  act.a1 = act.z1.cwiseMax(0.0);
  act.z2 = act.a1 * L[1].weight;
  act.z2.rowwise() += L[1].bias.transpose();
  act.a2 = act.z2.cwiseMax(0.0);
  act.out = act.a2 * L[2].weight;
  act.out.rowwise() += L[2].bias.transpose();
  if (!act.out.allFinite()) throw RuntimeError("non-finite activations in forward pass");
  return act;
}

// Row-wise softmax via a stabilised log-sum-exp.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

constexpr double kProbabilityFloor = 1e-12;

// d(summed loss)/d(output).
Eigen::MatrixXd output_delta(const Checkpoint& w, const Activations& act, const Batch& batch) {
  if (w.arch.task == Task::kClassification) {
    Eigen::MatrixXd delta = softmax(act.out);
    for (Eigen::Index r = 0; r < delta.rows(); ++r)
      delta(r, static_cast<Eigen::Index>(batch.y(r))) -= 1.0;
    return delta;
  }
  return act.out.col(0) - batch.y;
}

}  // namespace

Checkpoint init_params(const Architecture& arch, std::uint64_t seed) {
  check_architecture(arch);
  Checkpoint w;
  w.arch = arch;
  w.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, {0x1417}));
  const auto dims = layer_dims(arch);
  for (std::size_t l = 0; l < 3; ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-scale, scale);
    auto& layer = w.params.layers[l];
    layer.weight.resize(fan_in, fan_out);
    for (Eigen::Index c = 0; c < fan_out; ++c)
      for (Eigen::Index r = 0; r < fan_in; ++r) layer.weight(r, c) = dist(rng);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
  }
  return w;
}

Eigen::MatrixXd predict(const Checkpoint& w, const Eigen::MatrixXd& x) {
  if (x.cols() != w.arch.input_dim) throw UsageError("input width does not match model");
  Activations act = forward(w, x);
  if (w.arch.task == Task::kClassification) return softmax(act.out);
  return act.out;
}

double loss(const Checkpoint& w, const Batch& batch) {
  check_batch(w, batch);
  const Activations act = forward(w, batch.x);
  double total = 0.0;
  if (w.arch.task == Task::kClassification) {
    for (Eigen::Index r = 0; r < act.out.rows(); ++r) {
      const double m = act.out.row(r).maxCoeff();
      const double lse = m + std::log((act.out.row(r).array() - m).exp().sum());
      const double log_p = act.out(r, static_cast<Eigen::Index>(batch.y(r))) - lse;
      total -= std::log(std::max(std::exp(log_p), kProbabilityFloor));
    }
  } else {
    total = 0.5 * (act.out.col(0) - batch.y).squaredNorm();
  }
  return total / static_cast<double>(batch.size());
}

Gradient loss_gradient_sum(const Checkpoint& w, const Batch& batch) {
  check_batch(w, batch);
  const auto& L = w.params.layers;
  const Activations act = forward(w, batch.x);
  Gradient g;
  Eigen::MatrixXd delta = output_delta(w, act, batch);
  g.layers[2].weight = act.a2.transpose() * delta;
  g.layers[2].bias = delta.colwise().sum().transpose();
  Eigen::MatrixXd d2 = (delta * L[2].weight.transpose()).cwiseProduct(
      (act.z2.array() > 0.0).cast<double>().matrix());
  g.layers[1].weight = act.a1.transpose() * d2;
  g.layers[1].bias = d2.colwise().sum().transpose();
  Eigen::MatrixXd d1 = (d2 * L[1].weight.transpose()).cwiseProduct(
      (act.z1.array() > 0.0).cast<double>().matrix());
  g.layers[0].weight = batch.x.transpose() * d1;
  g.layers[0].bias = d1.colwise().sum().transpose();
  if (!g.all_finite()) throw RuntimeError("non-finite gradient");
  return g;
}

Gradient loss_gradient(const Checkpoint& w, const Batch& batch) {
  Gradient g = loss_gradient_sum(w, batch);
  g *= 1.0 / static_cast<double>(batch.size());
  return g;
}

Checkpoint apply_update(const Checkpoint& w, const Gradient& grad_sum, double eta) {
  if (eta < 0.0) throw UsageError("learning rate must be non-negative");
  Checkpoint next = w;
  for (std::size_t l = 0; l < 3; ++l) {
    next.params.layers[l].weight -= eta * grad_sum.layers[l].weight;
    next.params.layers[l].bias -= eta * grad_sum.layers[l].bias;
  }
  ++next.step_count;
  return next;
}

Checkpoint sgd_step(const Checkpoint& w, const Batch& batch, double eta) {
  if (eta < 0.0) throw UsageError("learning rate must be non-negative");
  return apply_update(w, loss_gradient_sum(w, batch), eta);
}

Checkpoint train(const Dataset& ds_train, const Architecture& arch, const TrainConfig& cfg) {
  if (ds_train.rows() == 0) throw UsageError("empty training set");
  if (cfg.epochs < 1) throw UsageError("epochs must be at least 1");
  Checkpoint w = init_params(arch, derive_seed(cfg.seed, {0x7a1}));
  const std::size_t n = ds_train.rows();
  const std::size_t bs = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::mt19937_64 rng(derive_seed(cfg.seed, {0x5bf}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      const Batch batch = make_batch(ds_train, std::span(order).subspan(start, len));
      w = sgd_step(w, batch, cfg.eta);
    }
  }
  return w;
}

std::string to_string(MetricKind kind) {
  return kind == MetricKind::kAccuracy ? "accuracy" : "rmse";
}

MetricSpec default_metric(Task task) {
  return MetricSpec{task == Task::kClassification ? MetricKind::kAccuracy : MetricKind::kRmse};
}

double evaluate_metric(const Checkpoint& w, const Batch& eval, const MetricSpec& m) {
  if (eval.size() == 0) throw UsageError("empty evaluation set");
  const bool classification = w.arch.task == Task::kClassification;
  if (classification != (m.kind == MetricKind::kAccuracy))
    throw UsageError("metric " + to_string(m.kind) + " does not match the model task");
  if (eval.x.cols() != w.arch.input_dim) throw UsageError("evaluation set width mismatch");
  const Activations act = forward(w, eval.x);
  if (classification) {
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < act.out.rows(); ++r) {
      Eigen::Index best = 0;
      act.out.row(r).maxCoeff(&best);
      if (static_cast<double>(best) == eval.y(r)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(eval.size());
  }
  const double mse = (act.out.col(0) - eval.y).squaredNorm() / static_cast<double>(eval.size());
  return -std::sqrt(mse);
}

double evaluate_metric(const Checkpoint& w, const Dataset& ds_eval, const MetricSpec& m) {
  return evaluate_metric(w, make_batch(ds_eval), m);
}

}  // namespace chunkval

// Copyright 2026 The CATA Authors.
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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cata::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Batches are row-major in the mathematical sense: one sample per row.

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Affine map x W + b. Weights are in_dim x out_dim, bias is 1 x out_dim.
struct DenseLayer {
  Parameter weight;
  Parameter bias;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.value.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.value.cols()); }

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero bias.
  static DenseLayer glorot(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng,
                           const std::string& name);
};

enum class Mode { kTraining, kEvaluation };

struct BatchNormLayer {
  Parameter gamma;
  Parameter beta;
  RowVector running_mean;
  RowVector running_var;
  double epsilon = 1e-5;
  double momentum = 0.99;  // weight kept on the old running statistics

  std::size_t dim() const { return static_cast<std::size_t>(gamma.value.cols()); }

  static BatchNormLayer identity(std::size_t dim, const std::string& name);
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);
Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);
RowVector softmax(const Eigen::Ref<const RowVector>& z);
// Per row: softmax(e) (elementwise *) e.
Matrix attention_bottleneck(const Matrix& e);

inline constexpr double kBceClamp = 1e-7;
// -sum(y log p + (1 - y) log(1 - p)) over elements, averaged over rows, with
// p clamped to [kBceClamp, 1 - kBceClamp].
double bce_loss(const Matrix& p, const Matrix& y);

// Training mode normalizes with batch statistics (biased variance) and folds
// them into the running statistics (unbiased variance); evaluation mode uses
// the running statistics. Training mode requires at least two rows.
Matrix batchnorm_forward(BatchNormLayer& layer, const Matrix& x, Mode mode);

/// Records a forward pass over the operations above so that backward() can
/// accumulate parameter gradients of the terminal scalar loss. Layers are
/// held by reference and must outlive the tape.
class Tape {
 public:
  using Var = std::size_t;

  Var input(Matrix x);
  // Like input(), but backward() never computes its gradient.
  Var constant(Matrix x);
  Var dense(DenseLayer& layer, Var x);
  Var batchnorm(BatchNormLayer& layer, Var x, Mode mode);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var attention(Var x);

  // Terminal losses; exactly one may be recorded per pass.
  double bce(Var p, const Matrix& target);
  double weighted_sum(Var x, const Matrix& weights);

  const Matrix& value(Var v) const { return nodes_.at(v).value; }
  // Gradient of the loss w.r.t. a recorded value; valid after backward().
  const Matrix& grad(Var v) const { return nodes_.at(v).grad; }

  // Adds d(loss)/d(param) into every Parameter::grad reached by the pass.
  void backward();
  void clear();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backprop;
    bool constant = false;
  };

  Var push(Matrix value, std::function<void()> backprop);
  double set_loss(Var output, double loss, std::function<void()> seed);

  std::vector<Node> nodes_;
  std::optional<Var> loss_input_;
  std::function<void()> seed_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment optimizer with bias correction. The parameter list must
/// keep the same order and shapes across steps.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws NumericalError if any gradient is not finite; nothing is updated then.
  void step(std::span<Parameter* const> params);
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace cata::nn

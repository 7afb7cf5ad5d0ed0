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

#include "cata/nn.hpp"

#include <cmath>

#include "cata/error.hpp"

namespace cata::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

struct BatchStats {
  RowVector mean;
  RowVector var;  // biased
};

BatchStats batch_stats(const Matrix& x) {
  BatchStats s;
  s.mean = x.colwise().mean();
  s.var = (x.rowwise() - s.mean).array().square().colwise().mean();
  return s;
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

DenseLayer DenseLayer::glorot(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng,
                              const std::string& name) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseLayer layer;
  layer.weight.name = name + ".W";
  layer.weight.value.resize(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(out_dim));
  for (Eigen::Index r = 0; r < layer.weight.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.value.cols(); ++c) {
      layer.weight.value(r, c) = dist(rng);
    }
  }
  layer.bias.name = name + ".b";
  layer.bias.value = Matrix::Zero(1, static_cast<Eigen::Index>(out_dim));
  layer.weight.zero_grad();
  layer.bias.zero_grad();
  return layer;
}

BatchNormLayer BatchNormLayer::identity(std::size_t dim, const std::string& name) {
  const auto n = static_cast<Eigen::Index>(dim);
  BatchNormLayer layer;
  layer.gamma = {name + ".gamma", Matrix::Ones(1, n), Matrix::Zero(1, n)};
  layer.beta = {name + ".beta", Matrix::Zero(1, n), Matrix::Zero(1, n)};
  layer.running_mean = RowVector::Zero(n);
  layer.running_var = RowVector::Ones(n);
  return layer;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  require(static_cast<std::size_t>(x.cols()) == layer.in_dim(), "dense_forward: input width mismatch");
  Matrix out = x * layer.weight.value;
  out.rowwise() += layer.bias.value.row(0);
  return out;
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix sigmoid(const Matrix& x) { return x.unaryExpr(&sigmoid_scalar); }

RowVector softmax(const Eigen::Ref<const RowVector>& z) {
  RowVector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Matrix attention_bottleneck(const Matrix& e) {
  Matrix out(e.rows(), e.cols());
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    out.row(r) = softmax(e.row(r)).cwiseProduct(e.row(r));
  }
  return out;
}

double bce_loss(const Matrix& p, const Matrix& y) {
  require(p.rows() == y.rows() && p.cols() == y.cols(), "bce_loss: shape mismatch");
  require(p.rows() > 0, "bce_loss: empty batch");
  const auto q = p.array().max(kBceClamp).min(1.0 - kBceClamp);
  const double total = -(y.array() * q.log() + (1.0 - y.array()) * (1.0 - q).log()).sum();
  return total / static_cast<double>(p.rows());
}

Matrix batchnorm_forward(BatchNormLayer& layer, const Matrix& x, Mode mode) {
  require(static_cast<std::size_t>(x.cols()) == layer.dim(), "batchnorm_forward: width mismatch");
  RowVector mean;
  RowVector var;
  if (mode == Mode::kTraining) {
    if (x.rows() < 2) {
      throw ContractError("batchnorm_forward: training mode needs a batch of at least 2 rows");
    }
    auto stats = batch_stats(x);
    const double n = static_cast<double>(x.rows());
    layer.running_mean = layer.momentum * layer.running_mean + (1.0 - layer.momentum) * stats.mean;
    layer.running_var =
        layer.momentum * layer.running_var + (1.0 - layer.momentum) * (stats.var * (n / (n - 1.0)));
    mean = std::move(stats.mean);
    var = std::move(stats.var);
  } else {
    mean = layer.running_mean;
    var = layer.running_var;
  }
  const RowVector inv_std = (var.array() + layer.epsilon).rsqrt();
  Matrix out = (x.rowwise() - mean).array().rowwise() * (inv_std.array() * layer.gamma.value.row(0).array());
  out.rowwise() += layer.beta.value.row(0);
  return out;
}

// ---------------------------------------------------------------------------
// Tape

Tape::Var Tape::push(Matrix value, std::function<void()> backprop) {
  require(!loss_input_, "tape: cannot record after the loss");
  nodes_.push_back({std::move(value), Matrix(), std::move(backprop)});
  return nodes_.size() - 1;
}

Tape::Var Tape::input(Matrix x) { return push(std::move(x), nullptr); }

Tape::Var Tape::constant(Matrix x) {
  const Var v = push(std::move(x), nullptr);
  nodes_[v].constant = true;
  return v;
}

Tape::Var Tape::dense(DenseLayer& layer, Var x) {
  Matrix out = dense_forward(layer, value(x));
  const Var self = nodes_.size();
  return push(std::move(out), [this, &layer, x, self] {
    const Matrix& g = nodes_[self].grad;
    layer.weight.grad.noalias() += nodes_[x].value.transpose() * g;
    layer.bias.grad += g.colwise().sum();
    if (!nodes_[x].constant) nodes_[x].grad.noalias() += g * layer.weight.value.transpose();
  });
}

Tape::Var Tape::batchnorm(BatchNormLayer& layer, Var x, Mode mode) {
  const Matrix& in = value(x);
  RowVector mean;
  RowVector var;
  if (mode == Mode::kTraining) {
    auto stats = batch_stats(in);
    mean = stats.mean;
    var = stats.var;
  } else {
    mean = layer.running_mean;
    var = layer.running_var;
  }
  Matrix out = batchnorm_forward(layer, in, mode);
  const RowVector inv_std = (var.array() + layer.epsilon).rsqrt();
  Matrix xhat = (in.rowwise() - mean).array().rowwise() * inv_std.array();
  const Var self = nodes_.size();
  return push(std::move(out), [this, &layer, x, self, mode, inv_std, xhat = std::move(xhat)] {
    const Matrix& g = nodes_[self].grad;
    layer.gamma.grad += g.cwiseProduct(xhat).colwise().sum();
    layer.beta.grad += g.colwise().sum();
    const Matrix dxhat = g.array().rowwise() * layer.gamma.value.row(0).array();
    if (mode == Mode::kEvaluation) {
      nodes_[x].grad += (dxhat.array().rowwise() * inv_std.array()).matrix();
      return;
    }
    const double n = static_cast<double>(g.rows());
    const RowVector sum_dxhat = dxhat.colwise().sum();
    const RowVector sum_dxhat_xhat = dxhat.cwiseProduct(xhat).colwise().sum();
    Matrix dx = (n * dxhat).rowwise() - sum_dxhat;
    dx -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    dx = (dx.array().rowwise() * (inv_std.array() / n)).matrix();
    nodes_[x].grad += dx;
  });
}

Tape::Var Tape::relu(Var x) {
  const Var self = nodes_.size();
  return push(nn::relu(value(x)), [this, x, self] {
    nodes_[x].grad += (nodes_[x].value.array() > 0.0).cast<double>().matrix().cwiseProduct(nodes_[self].grad);
  });
}

Tape::Var Tape::sigmoid(Var x) {
  const Var self = nodes_.size();
  return push(nn::sigmoid(value(x)), [this, x, self] {
    const auto& s = nodes_[self].value.array();
    nodes_[x].grad += (nodes_[self].grad.array() * s * (1.0 - s)).matrix();
  });
}

Tape::Var Tape::attention(Var x) {
  const Matrix& e = value(x);
  Matrix weights(e.rows(), e.cols());
  for (Eigen::Index r = 0; r < e.rows(); ++r) weights.row(r) = softmax(e.row(r));
  Matrix out = weights.cwiseProduct(e);
  const Var self = nodes_.size();
  return push(std::move(out), [this, x, self, weights = std::move(weights)] {
    // z_k = s_k e_k with s = softmax(e):
    //   dL/de_c = g_c s_c + s_c (w_c - sum_k w_k s_k),  w = g * e.
    const Matrix& g = nodes_[self].grad;
    const Matrix& e = nodes_[x].value;
    const Matrix w = g.cwiseProduct(e);
    const Eigen::VectorXd ws = w.cwiseProduct(weights).rowwise().sum();
    Matrix de = g.cwiseProduct(weights) + weights.cwiseProduct(w.colwise() - ws);
    nodes_[x].grad += de;
  });
}

double Tape::set_loss(Var output, double loss, std::function<void()> seed) {
  require(!loss_input_, "tape: loss already recorded");
  loss_input_ = output;
  seed_ = std::move(seed);
  return loss;
}

double Tape::bce(Var p, const Matrix& target) {
  const double loss = bce_loss(value(p), target);
  return set_loss(p, loss, [this, p, target] {
    const auto& pv = nodes_[p].value.array();
    const double batch = static_cast<double>(pv.rows());
    const auto inside = ((pv >= kBceClamp) && (pv <= 1.0 - kBceClamp)).cast<double>();
    const auto q = pv.max(kBceClamp).min(1.0 - kBceClamp);
    const auto y = target.array();
    nodes_[p].grad += ((-(y / q) + (1.0 - y) / (1.0 - q)) * inside / batch).matrix();
  });
}

double Tape::weighted_sum(Var x, const Matrix& weights) {
  const Matrix& v = value(x);
  require(v.rows() == weights.rows() && v.cols() == weights.cols(),
          "weighted_sum: shape mismatch");
  const double loss = v.cwiseProduct(weights).sum();
  return set_loss(x, loss, [this, x, weights] { nodes_[x].grad += weights; });
}

void Tape::backward() {
  if (!loss_input_) throw ContractError("tape: backward() called before a loss was recorded");
  for (auto& node : nodes_) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  seed_();
  for (auto i = nodes_.size(); i-- > 0;) {
    if (nodes_[i].backprop) nodes_[i].backprop();
  }
}

void Tape::clear() {
  nodes_.clear();
  loss_input_.reset();
  seed_ = nullptr;
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  require(m_.size() == params.size(), "adam: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    require(p.grad.rows() == m_[i].rows() && p.grad.cols() == m_[i].cols() &&
                p.value.rows() == m_[i].rows() && p.value.cols() == m_[i].cols(),
            "adam: parameter shape changed between steps");
    if (!p.grad.allFinite()) {
      throw NumericalError("non-finite gradient for parameter '" + p.name + "' at step " +
                           std::to_string(t_ + 1));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= config_.learning_rate * (m_[i].array() / c1) /
                       ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace cata::nn

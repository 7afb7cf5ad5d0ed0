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

// Reference implementations used only by the tests. Everything here is a
// direct loop over the definitions, deliberately slow and independent of the
// library code paths it is compared against.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cata/cf.hpp"
#include "cata/corpus.hpp"
#include "cata/nn.hpp"

namespace cata::testing {

using corpus::Index;

// ---------------------------------------------------------------------------
// Ranking metrics

inline double recall_oracle(const std::vector<Index>& ranked, const std::vector<Index>& test,
                            std::size_t K) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked.size() && i < K; ++i) {
    for (Index t : test) {
      if (t == ranked[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

inline double ndcg_oracle(const std::vector<Index>& ranked, const std::vector<Index>& test,
                          std::size_t K) {
  double dcg = 0.0;
  for (std::size_t i = 1; i <= ranked.size() && i <= K; ++i) {
    bool rel = false;
    for (Index t : test) rel = rel || t == ranked[i - 1];
    if (rel) dcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 1; i <= std::min(test.size(), K); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
  }
  return dcg / idcg;
}

// Full sort by (score desc, id asc) over the non-excluded articles.
inline std::vector<Index> top_k_oracle(const std::vector<double>& scores,
                                       const std::vector<Index>& exclude, std::size_t K) {
  std::vector<Index> ids;
  for (Index j = 0; j < scores.size(); ++j) {
    if (std::find(exclude.begin(), exclude.end(), j) == exclude.end()) ids.push_back(j);
  }
  std::sort(ids.begin(), ids.end(), [&](Index x, Index y) {
    if (scores[x] != scores[y]) return scores[x] > scores[y];
    return x < y;
  });
  if (ids.size() > K) ids.resize(K);
  return ids;
}

// ---------------------------------------------------------------------------
// Weighted factorization

inline double confidence(const cf::Hyperparameters& h, bool observed) {
  return observed ? h.a : h.b;
}

// Cell-by-cell evaluation of the weighted loss with the prior-centred item penalty.
inline double objective_oracle(const corpus::InteractionMatrix& R, const Eigen::MatrixXd& U,
                               const Eigen::MatrixXd& V, const Eigen::MatrixXd& prior,
                               const cf::Hyperparameters& h) {
  double total = 0.0;
  for (std::size_t i = 0; i < R.n_users(); ++i) {
    for (std::size_t j = 0; j < R.n_articles(); ++j) {
      const bool obs = R.contains(i, static_cast<Index>(j));
      double dot = 0.0;
      for (Eigen::Index k = 0; k < U.cols(); ++k) dot += U(i, k) * V(j, k);
      const double err = (obs ? 1.0 : 0.0) - dot;
      total += confidence(h, obs) / 2.0 * err * err;
    }
  }
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    for (Eigen::Index k = 0; k < U.cols(); ++k) total += h.lambda_u / 2.0 * U(i, k) * U(i, k);
  }
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
      const double dv = V(j, k) - prior(j, k);
      total += h.lambda_v / 2.0 * dv * dv;
    }
  }
  return total;
}

// Gradient of the loss with respect to one user row.
inline Eigen::VectorXd user_gradient(const corpus::InteractionMatrix& R, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, const cf::Hyperparameters& h,
                                     std::size_t i) {
  Eigen::VectorXd g = h.lambda_u * U.row(i).transpose();
  for (std::size_t j = 0; j < R.n_articles(); ++j) {
    const bool obs = R.contains(i, static_cast<Index>(j));
    const double err = (obs ? 1.0 : 0.0) - U.row(i).dot(V.row(j));
    g -= confidence(h, obs) * err * V.row(j).transpose();
  }
  return g;
}

inline Eigen::VectorXd item_gradient(const corpus::InteractionMatrix& R, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, const Eigen::MatrixXd& prior,
                                     const cf::Hyperparameters& h, std::size_t j) {
  Eigen::VectorXd g = h.lambda_v * (V.row(j) - prior.row(j)).transpose();
  for (std::size_t i = 0; i < R.n_users(); ++i) {
    const bool obs = R.contains(i, static_cast<Index>(j));
    const double err = (obs ? 1.0 : 0.0) - U.row(i).dot(V.row(j));
    g -= confidence(h, obs) * err * U.row(i).transpose();
  }
  return g;
}

// Plain gradient descent on a single row. `grad` evaluates the row gradient at
// a candidate; the step is 1 / trace(H), which never exceeds 1 / lambda_max.
inline Eigen::VectorXd descend_row(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                   Eigen::VectorXd x, double trace_h,
                                   std::size_t max_steps = 2'000'000) {
  const double step = 1.0 / trace_h;
  for (std::size_t s = 0; s < max_steps; ++s) {
    const Eigen::VectorXd g = grad(x);
    if (g.lpNorm<Eigen::Infinity>() < 1e-13) break;
    x -= step * g;
  }
  return x;
}

inline corpus::InteractionMatrix random_interactions(std::size_t n, std::size_t m, double density,
                                                     std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::vector<corpus::IndexPair> pairs;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (keep(rng)) pairs.emplace_back(i, j);
    }
  }
  return corpus::InteractionMatrix(n, m, std::move(pairs));
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = u(rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Finite differences

inline double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric) {
  const double scale = analytic.norm() + numeric.norm();
  if (scale < 1e-10) return 0.0;
  return (analytic - numeric).norm() / scale;
}

// Forward pass recorded on a fresh tape. `near_kink` marks a sample that sits
// too close to a ReLU kink for central differences; such samples are redrawn.
struct ForwardResult {
  double loss = 0.0;
  bool near_kink = false;
};
using Forward = std::function<ForwardResult(nn::Tape&, nn::Tape::Var input)>;

struct GradCheckResult {
  double worst = 0.0;
  std::string worst_tensor;
};

// Central differences with step h for every parameter entry and every input
// entry, compared with one reverse pass.
inline std::optional<GradCheckResult> check_gradients(const Forward& forward,
                                                      const std::vector<nn::Parameter*>& params,
                                                      Eigen::MatrixXd x, double h = 1e-5) {
  for (auto* p : params) p->zero_grad();
  nn::Tape tape;
  const auto in = tape.input(x);
  if (forward(tape, in).near_kink) return std::nullopt;
  tape.backward();
  const Eigen::MatrixXd input_grad = tape.grad(in);

  auto eval = [&](const Eigen::MatrixXd& input) {
    nn::Tape t;
    auto v = t.input(input);
    return forward(t, v).loss;
  };

  GradCheckResult out;
  auto record = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& n, const std::string& name) {
    const double e = relative_error(a, n);
    if (!(e <= out.worst)) {
      out.worst = e;
      out.worst_tensor = name;
    }
  };
  for (auto* p : params) {
    Eigen::MatrixXd numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + h;
        const double up = eval(x);
        p->value(r, c) = saved - h;
        const double down = eval(x);
        p->value(r, c) = saved;
        numeric(r, c) = (up - down) / (2.0 * h);
      }
    }
    record(p->grad, numeric, p->name);
  }
  Eigen::MatrixXd numeric(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = x(r, c);
      x(r, c) = saved + h;
      const double up = eval(x);
      x(r, c) = saved - h;
      const double down = eval(x);
      x(r, c) = saved;
      numeric(r, c) = (up - down) / (2.0 * h);
    }
  }
  record(input_grad, numeric, "input");
  return out;
}

inline bool away_from_kink(const Eigen::MatrixXd& pre_activation, double margin = 1e-3) {
  return (pre_activation.array().abs() > margin).all();
}

}  // namespace cata::testing

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

#include "cata/cf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"
#include "cata/parallel.hpp"

namespace cata::cf {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kWrmf: return "wrmf";
    case Variant::kCata: return "cata";
    case Variant::kCataTags: return "cata-tags";
    case Variant::kCataPlusPlus: return "cata++";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kWrmf, Variant::kCata, Variant::kCataTags, Variant::kCataPlusPlus}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown factor-model variant '" + std::string(name) + "'");
}

bool uses_text(Variant v) { return v == Variant::kCata || v == Variant::kCataPlusPlus; }
bool uses_tags(Variant v) { return v == Variant::kCataTags || v == Variant::kCataPlusPlus; }

void Hyperparameters::validate() const {
  if (!(a > b && b > 0)) throw ConfigError(fmt::format("confidences need a > b > 0, got a={} b={}", a, b));
  if (!(lambda_u >= 0 && lambda_v >= 0)) throw ConfigError("regularization weights must be >= 0");
  if (dim == 0) throw ConfigError("latent dimension must be at least 1");
}

PriorMatrix::PriorMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw NumericalError("prior matrix has non-finite entries");
}

PriorMatrix PriorMatrix::zero(std::size_t n_articles, std::size_t dim) {
  return PriorMatrix(Matrix::Zero(static_cast<Eigen::Index>(n_articles), static_cast<Eigen::Index>(dim)));
}

PriorMatrix PriorMatrix::from_codes(Matrix codes) { return PriorMatrix(std::move(codes)); }

PriorMatrix PriorMatrix::sum(const Matrix& text_codes, const Matrix& tag_codes) {
  if (text_codes.rows() != tag_codes.rows() || text_codes.cols() != tag_codes.cols()) {
    throw ContractError("prior codes have mismatched shapes");
  }
  return PriorMatrix(text_codes + tag_codes);
}

FactorModel FactorModel::initialize(std::size_t n_users, std::size_t n_articles,
                                    const Hyperparameters& hyper, Variant variant,
                                    std::uint64_t seed) {
  hyper.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(hyper.dim)));
  auto fill = [&](Matrix& m, std::size_t rows) {
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hyper.dim));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
  };
  FactorModel model;
  model.hyper = hyper;
  model.variant = variant;
  fill(model.U, n_users);
  fill(model.V, n_articles);
  return model;
}

void FactorModel::save(const std::filesystem::path& path) const {
  io::TensorFile file;
  file.set_attribute("kind", "factor_model");
  file.set_attribute("variant", std::string(to_string(variant)));
  file.set_attribute("lambda_u", fmt::format("{:.17g}", hyper.lambda_u));
  file.set_attribute("lambda_v", fmt::format("{:.17g}", hyper.lambda_v));
  file.set_attribute("a", fmt::format("{:.17g}", hyper.a));
  file.set_attribute("b", fmt::format("{:.17g}", hyper.b));
  file.set_attribute("dim", std::to_string(hyper.dim));
  file.set_attribute("sweeps", std::to_string(sweeps));
  file.add("U", U);
  file.add("V", V);
  file.save(path);
}

FactorModel FactorModel::load(const std::filesystem::path& path) {
  const auto file = io::TensorFile::load(path);
  if (file.attribute("kind") != "factor_model") {
    throw DataError(path.string() + " is not a factor-model checkpoint");
  }
  FactorModel model;
  model.variant = parse_variant(file.attribute("variant"));
  model.hyper.lambda_u = std::stod(file.attribute("lambda_u"));
  model.hyper.lambda_v = std::stod(file.attribute("lambda_v"));
  model.hyper.a = std::stod(file.attribute("a"));
  model.hyper.b = std::stod(file.attribute("b"));
  model.hyper.dim = std::stoul(file.attribute("dim"));
  model.sweeps = std::stoul(file.attribute("sweeps"));
  model.U = file.tensor("U");
  model.V = file.tensor("V");
  if (static_cast<std::size_t>(model.U.cols()) != model.hyper.dim ||
      static_cast<std::size_t>(model.V.cols()) != model.hyper.dim) {
    throw DataError("factor checkpoint width does not match its dim attribute");
  }
  return model;
}

namespace {

void check_shapes(const InteractionMatrix& R, const FactorModel& model) {
  if (R.n_users() != model.n_users() || R.n_articles() != model.n_articles()) {
    throw ContractError(fmt::format("interaction matrix is {}x{} but the model is {}x{}",
                                    R.n_users(), R.n_articles(), model.n_users(),
                                    model.n_articles()));
  }
}

void check_prior(const PriorMatrix& prior, const FactorModel& model) {
  if (prior.n_articles() != model.n_articles() || prior.dim() != model.hyper.dim) {
    throw ContractError("prior matrix shape does not match the factor model");
  }
}

Matrix gram(const Matrix& factors) {
  Matrix g = Matrix::Zero(factors.cols(), factors.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(factors.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

// Minimizes sum_k c_k/2 (p_k - x.f_k)^2 + lambda/2 |x - prior|^2 over x, where
// c = a, p = 1 on `observed` rows of `factors` and c = b, p = 0 elsewhere.
// With M = b G + (a - b) sum_obs f f^T the normal equations are
// (M + lambda I) x = a sum_obs f + lambda prior; solving for x - prior keeps
// prior-free and fully cold rows exact.
Vector solve_row(const Matrix& gram_all, const Matrix& factors, std::span<const Index> observed,
                 double a, double b, double lambda, const Eigen::Ref<const Vector>& prior) {
  const auto d = gram_all.rows();
  Matrix m = b * gram_all;
  Vector rhs = Vector::Zero(d);
  for (Index k : observed) {
    const auto f = factors.row(k).transpose();
    m.selfadjointView<Eigen::Lower>().rankUpdate(f, a - b);
    rhs.noalias() += a * f;
  }
  m = m.selfadjointView<Eigen::Lower>();
  rhs.noalias() -= m * prior;
  m.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13)) {
    throw NumericalError("ALS row system is singular; use a positive regularization weight");
  }
  return prior + llt.solve(rhs);
}

}  // namespace

double objective(const InteractionMatrix& R, const FactorModel& model, const PriorMatrix& prior) {
  check_shapes(R, model);
  check_prior(prior, model);
  const auto& h = model.hyper;
  // b/2 sum over all cells of s_ij^2 via the two Gram matrices, then swap in
  // the observed cells' true terms.
  double loss = 0.5 * h.b * gram(model.U).cwiseProduct(gram(model.V)).sum();
  for (std::size_t i = 0; i < R.n_users(); ++i) {
    const auto u = model.U.row(static_cast<Eigen::Index>(i));
    for (Index j : R.user_items(i)) {
      const double s = u.dot(model.V.row(j));
      loss += 0.5 * h.a * (1.0 - s) * (1.0 - s) - 0.5 * h.b * s * s;
    }
  }
  loss += 0.5 * h.lambda_u * model.U.squaredNorm();
  loss += 0.5 * h.lambda_v * (model.V - prior.values()).squaredNorm();
  // The Gram shortcut can leave a few ulps of negative rounding at an exact fit.
  return std::max(loss, 0.0);
}

Vector update_user(std::size_t user, const FactorModel& model, const InteractionMatrix& R) {
  check_shapes(R, model);
  const auto& h = model.hyper;
  return solve_row(gram(model.V), model.V, R.user_items(user), h.a, h.b, h.lambda_u,
                   Vector::Zero(static_cast<Eigen::Index>(h.dim)));
}

Vector update_item(std::size_t article, const FactorModel& model, const InteractionMatrix& R,
                   const PriorMatrix& prior) {
  check_shapes(R, model);
  check_prior(prior, model);
  const auto& h = model.hyper;
  const auto by_article = R.by_article();
  return solve_row(gram(model.U), model.U, by_article.row(article), h.a, h.b, h.lambda_v,
                   prior.row(article).transpose());
}

void sweep_users(const InteractionMatrix& R, FactorModel& model, unsigned threads) {
  check_shapes(R, model);
  const auto& h = model.hyper;
  const Matrix g = gram(model.V);
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(h.dim));
  parallel_for(R.n_users(), threads, [&](std::size_t begin, std::size_t end) {
    for (auto i = begin; i < end; ++i) {
      model.U.row(static_cast<Eigen::Index>(i)) =
          solve_row(g, model.V, R.user_items(i), h.a, h.b, h.lambda_u, zero).transpose();
    }
  });
}

void sweep_items(const corpus::BinaryRows& by_article, FactorModel& model,
                 const PriorMatrix& prior, unsigned threads) {
  if (by_article.rows() != model.n_articles() || by_article.cols() != model.n_users()) {
    throw ContractError("article-major interaction view does not match the model");
  }
  check_prior(prior, model);
  const auto& h = model.hyper;
  const Matrix g = gram(model.U);
  parallel_for(model.n_articles(), threads, [&](std::size_t begin, std::size_t end) {
    for (auto j = begin; j < end; ++j) {
      model.V.row(static_cast<Eigen::Index>(j)) =
          solve_row(g, model.U, by_article.row(j), h.a, h.b, h.lambda_v, prior.row(j).transpose())
              .transpose();
    }
  });
}

AlsResult train_als(const InteractionMatrix& R, FactorModel& model, const PriorMatrix& prior,
                    const AlsConfig& config) {
  check_shapes(R, model);
  check_prior(prior, model);
  model.hyper.validate();
  const auto by_article = R.by_article();
  AlsResult result;
  result.objective.push_back(objective(R, model, prior));
  while (result.sweeps < config.max_sweeps) {
    sweep_users(R, model, config.threads);
    sweep_items(by_article, model, prior, config.threads);
    ++result.sweeps;
    ++model.sweeps;
    const double prev = result.objective.back();
    const double cur = objective(R, model, prior);
    result.objective.push_back(cur);
    if (!std::isfinite(cur)) throw NumericalError("ALS objective became non-finite");
    if (cur > prev + 1e-9 * std::abs(prev)) {
      throw NumericalError(fmt::format("ALS objective increased from {} to {} at sweep {}", prev,
                                       cur, result.sweeps));
    }
    const double rel = prev > 0 ? (prev - cur) / prev : 0.0;
    if (rel < config.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Vector predict_scores(const FactorModel& model, std::size_t user) {
  if (user >= model.n_users()) {
    throw BoundsError(fmt::format("user {} out of range ({} users)", user, model.n_users()));
  }
  return model.V * model.U.row(static_cast<Eigen::Index>(user)).transpose();
}

std::vector<Index> pop_baseline(const InteractionMatrix& R_train) {
  const auto counts = R_train.article_counts();
  std::vector<Index> ranking(counts.size());
  std::iota(ranking.begin(), ranking.end(), Index{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](Index x, Index y) { return counts[x] > counts[y]; });
  return ranking;
}

}  // namespace cata::cf

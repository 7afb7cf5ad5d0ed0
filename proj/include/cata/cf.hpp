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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cata/corpus.hpp"

namespace cata::cf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using corpus::Index;
using corpus::InteractionMatrix;

// Which content prior the item factors are pulled towards.
enum class Variant {
  kWrmf,         // no prior
  kCata,         // text autoencoder code
  kCataTags,     // tag/citation autoencoder code only
  kCataPlusPlus  // sum of both codes
};

std::string_view to_string(Variant v);
// Accepts "wrmf", "cata", "cata-tags", "cata++"; throws ConfigError otherwise.
Variant parse_variant(std::string_view name);
bool uses_text(Variant v);
bool uses_tags(Variant v);

struct Hyperparameters {
  double lambda_u = 10.0;
  double lambda_v = 0.1;
  double a = 1.0;   // confidence of observed cells
  double b = 0.01;  // confidence of unobserved cells
  std::size_t dim = 50;

  // a > b > 0, lambdas >= 0, dim >= 1; throws ConfigError.
  void validate() const;
};

/// Per-article prior means for the item factors (m x d).
class PriorMatrix {
 public:
  static PriorMatrix zero(std::size_t n_articles, std::size_t dim);
  // Throws NumericalError if any entry is non-finite.
  static PriorMatrix from_codes(Matrix codes);
  static PriorMatrix sum(const Matrix& text_codes, const Matrix& tag_codes);

  const Matrix& values() const { return values_; }
  std::size_t n_articles() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }
  auto row(std::size_t j) const { return values_.row(static_cast<Eigen::Index>(j)); }

 private:
  explicit PriorMatrix(Matrix values);
  Matrix values_;
};

struct FactorModel {
  Matrix U;  // n_users x d
  Matrix V;  // n_articles x d
  Hyperparameters hyper;
  Variant variant = Variant::kWrmf;
  std::size_t sweeps = 0;

  std::size_t n_users() const { return static_cast<std::size_t>(U.rows()); }
  std::size_t n_articles() const { return static_cast<std::size_t>(V.rows()); }

  // U and V uniform in [0, 1/sqrt(d)] from a fixed seed.
  static FactorModel initialize(std::size_t n_users, std::size_t n_articles,
                                const Hyperparameters& hyper, Variant variant,
                                std::uint64_t seed);

  void save(const std::filesystem::path& path) const;
  static FactorModel load(const std::filesystem::path& path);
};

/// sum_ij c_ij/2 (p_ij - u_i.v_j)^2 + lambda_u/2 sum_i |u_i|^2
///   + lambda_v/2 sum_j |v_j - prior_j|^2, over every cell with c = a on
/// observed and c = b on unobserved cells.
double objective(const InteractionMatrix& R, const FactorModel& model, const PriorMatrix& prior);

// Exact minimizer of the objective over u_i with V fixed.
Vector update_user(std::size_t user, const FactorModel& model, const InteractionMatrix& R);
// Exact minimizer over v_j with U fixed; the prior enters the normal equations
// as lambda_v * prior_j on the right-hand side.
Vector update_item(std::size_t article, const FactorModel& model, const InteractionMatrix& R,
                   const PriorMatrix& prior);

// Whole half-sweeps; each row solve only writes its own row.
void sweep_users(const InteractionMatrix& R, FactorModel& model, unsigned threads = 1);
void sweep_items(const corpus::BinaryRows& by_article, FactorModel& model,
                 const PriorMatrix& prior, unsigned threads = 1);

struct AlsConfig {
  std::size_t max_sweeps = 50;
  double tol = 1e-4;  // stop once the relative objective decrease falls below this
  unsigned threads = 1;
};

struct AlsResult {
  std::vector<double> objective;  // initial value, then one entry per sweep
  std::size_t sweeps = 0;
  bool converged = false;
};

// Alternates user and item half-sweeps. Throws NumericalError if the
// objective rises by more than 1e-9 relative.
AlsResult train_als(const InteractionMatrix& R, FactorModel& model, const PriorMatrix& prior,
                    const AlsConfig& config = {});

Vector predict_scores(const FactorModel& model, std::size_t user);

// Articles by descending training popularity, ties by ascending id.
std::vector<Index> pop_baseline(const InteractionMatrix& R_train);

}  // namespace cata::cf

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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cata/cf.hpp"
#include "cata/corpus.hpp"

namespace cata::eval {

using corpus::Index;
using corpus::InteractionMatrix;

struct SplitSpec {
  std::size_t P = 1;  // articles per user kept for training: 1 sparse, 10 dense
  std::uint64_t seed = 0;
  std::size_t n_repeats = 4;  // split 0 is the validation split
};

struct Split {
  InteractionMatrix train;
  InteractionMatrix test;
};

// Per user: P uniformly chosen library articles go to train, the rest to test.
// Users with at most P articles keep everything in train.
Split make_split(const InteractionMatrix& R, std::size_t P, std::uint64_t seed);
// Split k is drawn with seed spec.seed + k.
std::vector<Split> make_splits(const InteractionMatrix& R, const SplitSpec& spec);

// The K best-scoring articles outside `exclude` (sorted ascending), by
// descending score then ascending id. Returns fewer when fewer remain.
std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude,
                         std::size_t K);

// Both take the test set sorted ascending; an empty test set is a
// ContractError (such users are skipped by evaluate()).
// `test_set` must be sorted ascending and non-empty (ContractError otherwise).
double recall_at_k(std::span<const Index> recommended, std::span<const Index> test_set,
                   std::size_t K);
double ndcg_at_k(std::span<const Index> recommended, std::span<const Index> test_set,
                 std::size_t K);

struct MetricRow {
  std::size_t K = 0;
  double recall = 0.0;
  double ndcg = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct MetricReport {
  std::vector<MetricRow> rows;  // one per requested K, in request order
  std::size_t users_evaluated = 0;

  bool operator==(const MetricReport&) const = default;
};

using ScoreFn = std::function<Eigen::VectorXd(std::size_t user)>;

// Mean over users with a non-empty test set; training articles are excluded
// from each user's ranking.
MetricReport evaluate(const ScoreFn& scores, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads = 1);
MetricReport evaluate(const cf::FactorModel& model, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads = 1);
// Static ranking shared by every user (e.g. the popularity baseline).
MetricReport evaluate(std::span<const Index> ranking, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads = 1);

// Elementwise mean of reports over the same K list.
MetricReport average(std::span<const MetricReport> reports);

/// All splits of one variant under one setting. `mean` averages the
/// reporting splits (every split but the validation one, or the lone split
/// when there is only one).
struct ReportSet {
  std::string variant;
  std::size_t P = 1;
  std::vector<MetricReport> splits;
  std::size_t validation_split = 0;
  MetricReport mean;

  std::string setting() const;  // "sparse" (P=1), "dense" (P=10), else "P=<n>"
  void finalize_mean();
};

// CSV header: variant,setting,split,K,recall,ndcg. The split column is the
// split index or "mean".
std::string to_csv(std::span<const ReportSet> sets);
nlohmann::json to_json(const ReportSet& set);

struct ImprovementRow {
  std::size_t K = 0;
  std::string metric;  // "recall" or "ndcg"
  double ours = 0.0;
  std::string best_baseline;
  double baseline = 0.0;
  double improvement_pct = 0.0;  // (ours - baseline) / baseline * 100
};

double improvement_percent(double ours, double baseline);
// Compares `ours` against the best of `baselines` per K and metric.
std::vector<ImprovementRow> improvement_table(const ReportSet& ours,
                                              std::span<const ReportSet> baselines);
std::string to_csv(std::span<const ImprovementRow> rows);

}  // namespace cata::eval

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

#include "cata/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "cata/error.hpp"
#include "cata/parallel.hpp"

namespace cata::eval {

Split make_split(const InteractionMatrix& R, std::size_t P, std::uint64_t seed) {
  if (P == 0) throw ConfigError("split size P must be at least 1");
  if (R.nnz() == 0) throw DataError("cannot split an empty interaction matrix");
  std::mt19937_64 rng(seed);
  std::vector<corpus::IndexPair> train;
  std::vector<corpus::IndexPair> test;
  std::vector<Index> lib;
  for (std::size_t u = 0; u < R.n_users(); ++u) {
    const auto items = R.user_items(u);
    lib.assign(items.begin(), items.end());
    const auto keep = std::min(P, lib.size());
    // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
    for (std::size_t k = 0; k < keep && lib.size() > P; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, lib.size() - 1);
      std::swap(lib[k], lib[pick(rng)]);
    }
    const auto user = static_cast<Index>(u);
    for (std::size_t k = 0; k < lib.size(); ++k) {
      (k < keep ? train : test).emplace_back(user, lib[k]);
    }
  }
  return {InteractionMatrix(R.n_users(), R.n_articles(), std::move(train)),
          InteractionMatrix(R.n_users(), R.n_articles(), std::move(test))};
}

std::vector<Split> make_splits(const InteractionMatrix& R, const SplitSpec& spec) {
  if (spec.n_repeats == 0) throw ConfigError("need at least one split");
  std::vector<Split> out;
  for (std::size_t k = 0; k < spec.n_repeats; ++k) out.push_back(make_split(R, spec.P, spec.seed + k));
  return out;
}

std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude,
                         std::size_t K) {
  if (K == 0) throw ContractError("top_k: K must be at least 1");
  std::vector<char> skip(scores.size(), 0);
  for (Index j : exclude) {
    if (j < skip.size()) skip[j] = 1;
  }
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!skip[j]) candidates.push_back(static_cast<Index>(j));
  }
  const auto keep = std::min(K, candidates.size());
  auto better = [&](Index x, Index y) {
    // NaN sorts last.
    const double sx = std::isnan(scores[x]) ? -std::numeric_limits<double>::infinity() : scores[x];
    const double sy = std::isnan(scores[y]) ? -std::numeric_limits<double>::infinity() : scores[y];
    if (sx != sy) return sx > sy;
    return x < y;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);
  candidates.resize(keep);
  return candidates;
}

namespace {

void require_test(std::span<const Index> test_set) {
  if (test_set.empty()) throw ContractError("ranking metric needs a non-empty test set");
}

bool relevant(std::span<const Index> test_set, Index j) {
  return std::binary_search(test_set.begin(), test_set.end(), j);
}

}  // namespace

double recall_at_k(std::span<const Index> recommended, std::span<const Index> test_set,
                   std::size_t K) {
  require_test(test_set);
  const auto n = std::min(K, recommended.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant(test_set, recommended[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test_set.size());
}

double ndcg_at_k(std::span<const Index> recommended, std::span<const Index> test_set,
                 std::size_t K) {
  require_test(test_set);
  const auto n = std::min(K, recommended.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant(test_set, recommended[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const auto ideal = std::min(K, test_set.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

MetricReport evaluate(const ScoreFn& scores, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads) {
  if (train.n_users() != test.n_users() || train.n_articles() != test.n_articles()) {
    throw ContractError("train and test matrices have different shapes");
  }
  if (K_list.empty()) throw ConfigError("need at least one K");
  const auto k_max = *std::max_element(K_list.begin(), K_list.end());
  if (k_max == 0) throw ConfigError("K must be at least 1");

  const auto n_users = test.n_users();
  const auto n_k = K_list.size();
  // Per-user metrics land in fixed slots so the reduction order is fixed.
  std::vector<double> recall(n_users * n_k, 0.0);
  std::vector<double> ndcg(n_users * n_k, 0.0);
  std::vector<char> counted(n_users, 0);
  parallel_for(n_users, threads, [&](std::size_t begin, std::size_t end) {
    for (auto u = begin; u < end; ++u) {
      const auto held_out = test.user_items(u);
      if (held_out.empty()) continue;
      const Eigen::VectorXd s = scores(u);
      if (static_cast<std::size_t>(s.size()) != test.n_articles()) {
        throw ContractError("score vector length does not match the article count");
      }
      const auto ranked = top_k({s.data(), static_cast<std::size_t>(s.size())},
                                train.user_items(u), k_max);
      for (std::size_t k = 0; k < n_k; ++k) {
        recall[u * n_k + k] = recall_at_k(ranked, held_out, K_list[k]);
        ndcg[u * n_k + k] = ndcg_at_k(ranked, held_out, K_list[k]);
      }
      counted[u] = 1;
    }
  });

  MetricReport report;
  report.users_evaluated = static_cast<std::size_t>(std::count(counted.begin(), counted.end(), 1));
  for (std::size_t k = 0; k < n_k; ++k) {
    MetricRow row{K_list[k], 0.0, 0.0};
    for (std::size_t u = 0; u < n_users; ++u) {
      if (!counted[u]) continue;
      row.recall += recall[u * n_k + k];
      row.ndcg += ndcg[u * n_k + k];
    }
    if (report.users_evaluated > 0) {
      row.recall /= static_cast<double>(report.users_evaluated);
      row.ndcg /= static_cast<double>(report.users_evaluated);
    }
    report.rows.push_back(row);
  }
  return report;
}

MetricReport evaluate(const cf::FactorModel& model, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads) {
  return evaluate([&](std::size_t u) { return cf::predict_scores(model, u); }, train, test, K_list,
                  threads);
}

MetricReport evaluate(std::span<const Index> ranking, const InteractionMatrix& train,
                      const InteractionMatrix& test, std::span<const std::size_t> K_list,
                      unsigned threads) {
  if (ranking.size() != train.n_articles()) {
    throw ContractError("static ranking must list every article exactly once");
  }
  Eigen::VectorXd shared = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(ranking.size()),
                                                     std::numeric_limits<double>::quiet_NaN());
  for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
    if (ranking[pos] >= ranking.size() || !std::isnan(shared(ranking[pos]))) {
      throw ContractError("static ranking must list every article exactly once");
    }
    shared(ranking[pos]) = -static_cast<double>(pos);
  }
  return evaluate([&](std::size_t) { return shared; }, train, test, K_list, threads);
}

MetricReport average(std::span<const MetricReport> reports) {
  if (reports.empty()) throw ContractError("average: no reports");
  MetricReport out = reports.front();
  for (std::size_t r = 1; r < reports.size(); ++r) {
    if (reports[r].rows.size() != out.rows.size()) {
      throw ContractError("average: reports have different K lists");
    }
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
      out.rows[k].recall += reports[r].rows[k].recall;
      out.rows[k].ndcg += reports[r].rows[k].ndcg;
    }
    out.users_evaluated += reports[r].users_evaluated;
  }
  const auto n = static_cast<double>(reports.size());
  for (auto& row : out.rows) {
    row.recall /= n;
    row.ndcg /= n;
  }
  out.users_evaluated = static_cast<std::size_t>(std::llround(static_cast<double>(out.users_evaluated) / n));
  return out;
}

std::string ReportSet::setting() const {
  if (P == 1) return "sparse";
  if (P == 10) return "dense";
  return "P=" + std::to_string(P);
}

void ReportSet::finalize_mean() {
  if (splits.empty()) throw ContractError("report set has no splits");
  if (splits.size() == 1) {
    mean = splits.front();
    return;
  }
  std::vector<MetricReport> reporting;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    if (s != validation_split) reporting.push_back(splits[s]);
  }
  mean = average(reporting);
}

std::string to_csv(std::span<const ReportSet> sets) {
  std::string out = "variant,setting,split,K,recall,ndcg\n";
  auto emit = [&](const ReportSet& set, const std::string& split, const MetricReport& report) {
    for (const auto& row : report.rows) {
      out += fmt::format("{},{},{},{},{:.10f},{:.10f}\n", set.variant, set.setting(), split, row.K,
                         row.recall, row.ndcg);
    }
  };
  for (const auto& set : sets) {
    for (std::size_t s = 0; s < set.splits.size(); ++s) emit(set, std::to_string(s), set.splits[s]);
    emit(set, "mean", set.mean);
  }
  return out;
}

namespace {

nlohmann::json report_json(const MetricReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"K", row.K}, {"recall", row.recall}, {"ndcg", row.ndcg}});
  }
  return {{"users_evaluated", report.users_evaluated}, {"metrics", rows}};
}

}  // namespace

nlohmann::json to_json(const ReportSet& set) {
  nlohmann::json splits = nlohmann::json::array();
  for (std::size_t s = 0; s < set.splits.size(); ++s) {
    auto j = report_json(set.splits[s]);
    j["split"] = s;
    j["role"] = (set.splits.size() > 1 && s == set.validation_split) ? "validation" : "reporting";
    splits.push_back(std::move(j));
  }
  return {{"variant", set.variant},
          {"setting", set.setting()},
          {"P", set.P},
          {"splits", splits},
          {"mean", report_json(set.mean)}};
}

double improvement_percent(double ours, double baseline) {
  if (baseline == 0.0) {
    return ours == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return (ours - baseline) / baseline * 100.0;
}

std::vector<ImprovementRow> improvement_table(const ReportSet& ours,
                                              std::span<const ReportSet> baselines) {
  if (baselines.empty()) throw ConfigError("improvement table needs at least one baseline");
  std::vector<ImprovementRow> out;
  for (std::size_t k = 0; k < ours.mean.rows.size(); ++k) {
    for (const char* metric : {"recall", "ndcg"}) {
      auto value = [&](const MetricReport& r) {
        if (k >= r.rows.size() || r.rows[k].K != ours.mean.rows[k].K) {
          throw ContractError("improvement table: reports have different K lists");
        }
        return std::string_view(metric) == "recall" ? r.rows[k].recall : r.rows[k].ndcg;
      };
      ImprovementRow row;
      row.K = ours.mean.rows[k].K;
      row.metric = metric;
      row.ours = value(ours.mean);
      row.baseline = -1.0;
      for (const auto& b : baselines) {
        if (const double v = value(b.mean); v > row.baseline) {
          row.baseline = v;
          row.best_baseline = b.variant;
        }
      }
      row.improvement_pct = improvement_percent(row.ours, row.baseline);
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::string to_csv(std::span<const ImprovementRow> rows) {
  std::string out = "K,metric,ours,best_baseline,baseline,improvement_pct\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.10f},{},{:.10f},{:.6f}\n", r.K, r.metric, r.ours, r.best_baseline,
                       r.baseline, r.improvement_pct);
  }
  return out;
}

}  // namespace cata::eval

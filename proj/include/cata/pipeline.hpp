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
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cata/autoencoder.hpp"
#include "cata/cf.hpp"
#include "cata/config.hpp"
#include "cata/corpus.hpp"
#include "cata/eval.hpp"
#include "cata/synth.hpp"

namespace cata::pipeline {

struct Dataset {
  corpus::InteractionMatrix interactions;
  std::optional<corpus::ContentMatrix> content;
  std::optional<corpus::TagMatrix> tags;
};

Dataset dataset_from_synthetic(const synth::SyntheticDataset& data, std::size_t vocab_size,
                               std::size_t min_articles_per_tag);

// Independent seed streams derived from the run seed.
std::uint64_t text_autoencoder_seed(std::uint64_t seed);
std::uint64_t tag_autoencoder_seed(std::uint64_t seed);
std::uint64_t factor_init_seed(std::uint64_t seed, std::size_t split);

ae::PretrainConfig pretrain_config(const ExperimentConfig& c, std::uint64_t seed);

// Builds and pretrains one autoencoder over `data`.
ae::AttentiveAutoencoder train_autoencoder(const ae::SparseRows& data, const ExperimentConfig& c,
                                           std::uint64_t seed, std::vector<double>* loss = nullptr);

// Zero for wrmf, the text codes for cata, the tag codes for cata-tags and
// their sum for cata++. Codes the variant does not use may be null.
cf::PriorMatrix build_prior(cf::Variant variant, const cf::Matrix* text_codes,
                            const cf::Matrix* tag_codes, std::size_t n_articles, std::size_t dim);

struct FitResult {
  cf::FactorModel model;
  cf::AlsResult als;
};

// Random init from factor_init_seed(c.seed, split), then ALS.
FitResult fit_factors(const corpus::InteractionMatrix& train, const cf::PriorMatrix& prior,
                      cf::Variant variant, const ExperimentConfig& c, std::size_t split);

// ---------------------------------------------------------------------------
// File-based commands. Layout under the run directory:
//   manifest.json, cache/{R,X,T}.bin, cache/vocab.tsv
//   models/ae_text.{ckpt,json}, models/ae_tags.{ckpt,json}
//   p<P>/splits/split<k>.{train,test}.bin
//   p<P>/models/<variant>/split<k>.{factors,trace.csv}   (pop: split<k>.ranking)
//   p<P>/reports/<variant>.{csv,json}, p<P>/reports/improvement.csv

// Returns the provenance manifest that was written.
nlohmann::json cmd_preprocess(const ExperimentConfig& c);
void cmd_train(const ExperimentConfig& c);
// Reports for c.variant followed by every variant in c.compare.
std::vector<eval::ReportSet> cmd_evaluate(const ExperimentConfig& c);
// Top-K (article, score) for one user of split `split`, training articles excluded.
std::vector<std::pair<corpus::Index, double>> cmd_recommend(const ExperimentConfig& c,
                                                            std::size_t user, std::size_t K,
                                                            std::size_t split = 0);

}  // namespace cata::pipeline

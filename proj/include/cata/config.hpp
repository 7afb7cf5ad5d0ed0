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
#include <string>
#include <vector>

#include <json.hpp>

#include "cata/cf.hpp"

namespace cata::pipeline {

/// Everything a run needs. JSON keys match the member names; see
/// docs/config.schema.json.
struct ExperimentConfig {
  // Raw inputs. `content` (term:count rows) takes precedence over `docs`.
  std::filesystem::path users;
  std::filesystem::path docs;
  std::string docs_format = "text";  // text | csv
  std::filesystem::path content;
  std::filesystem::path tags;
  std::filesystem::path citations;
  std::string citations_format = "pairs";  // pairs | lists
  std::filesystem::path stop_words;        // empty: bundled English list
  std::optional<std::size_t> n_articles;   // empty: inferred from the inputs

  // Preprocessing.
  std::size_t vocab_size = 8000;
  std::size_t min_articles_per_tag = 5;

  // Model.
  std::string variant = "cata++";  // pop | wrmf | cata | cata-tags | cata++
  cf::Hyperparameters hyper{};
  std::vector<std::size_t> widths{400, 200, 100, 50};
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  std::size_t max_sweeps = 50;
  double tol = 1e-4;

  // Protocol.
  std::size_t P = 1;
  std::size_t n_repeats = 4;
  std::uint64_t seed = 1;
  std::vector<std::size_t> k_list{50, 100, 150, 200, 250, 300};
  std::vector<std::string> compare;  // baselines for the improvement table

  std::filesystem::path output_dir;
  unsigned threads = 1;

  bool is_pop() const { return variant == "pop"; }
  // Factor-model variant; throws ConfigError for "pop".
  cf::Variant factor_variant() const;
  bool needs_text() const;
  bool needs_tags() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Unknown keys and wrong types are ConfigErrors.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);

// Checks hyperparameters and architecture against the module preconditions.
void validate_model(const ExperimentConfig& c);

// Name of the run directory used when output_dir is empty: a hash of the
// dataset and preprocessing settings, so repeated runs land in one place.
std::string run_stamp(const ExperimentConfig& c);
// output_dir, else $CATA_DATA_DIR/runs/run-<stamp>; ConfigError if neither.
std::filesystem::path resolve_output_dir(const ExperimentConfig& c);

}  // namespace cata::pipeline

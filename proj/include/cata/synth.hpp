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
#include <vector>

#include "cata/corpus.hpp"

namespace cata::synth {

using corpus::Index;

/// Planted-cluster generator: every user and article belongs to one of
/// n_clusters topics. Libraries, text and tags are all drawn mostly from the
/// owner's topic, and article popularity is Zipf-skewed within each topic.
struct SynthConfig {
  std::size_t n_users = 500;
  std::size_t n_articles = 800;
  std::size_t n_clusters = 10;
  std::size_t vocab_size = 600;
  std::size_t words_per_topic = 40;
  std::size_t doc_length = 60;
  double topic_word_share = 0.6;  // fraction of tokens from the topic's words
  std::size_t n_tags = 150;
  std::size_t tags_per_topic = 12;
  std::size_t min_library = 5;
  std::size_t max_library = 20;
  double in_cluster_share = 0.85;  // library / tag / citation topic fidelity
  double popularity_skew = 0.8;    // Zipf exponent of article popularity
  double mean_citations = 1.5;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticDataset {
  corpus::InteractionMatrix interactions;
  std::vector<corpus::TermCounts> content;  // per-article term counts
  std::vector<corpus::TagAssignment> tags;
  std::vector<corpus::Citation> citations;
  std::vector<Index> user_cluster;
  std::vector<Index> article_cluster;
};

SyntheticDataset generate(const SynthConfig& config);

// Writes users.dat, mult.dat, tags.dat and citations.dat (pairs) into `dir`.
void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace cata::synth

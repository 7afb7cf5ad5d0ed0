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

#include "cata/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"

namespace cata::synth {

void SynthConfig::validate() const {
  if (n_users == 0 || n_articles == 0 || n_clusters == 0) {
    throw ConfigError("synthetic generator needs users, articles and clusters");
  }
  if (n_articles < n_clusters) throw ConfigError("need at least one article per cluster");
  if (words_per_topic == 0 || words_per_topic > vocab_size) {
    throw ConfigError("words_per_topic must be in [1, vocab_size]");
  }
  if (tags_per_topic == 0 || tags_per_topic > n_tags) {
    throw ConfigError("tags_per_topic must be in [1, n_tags]");
  }
  if (min_library == 0 || min_library > max_library) {
    throw ConfigError("library sizes need 1 <= min_library <= max_library");
  }
  if (max_library > n_articles / n_clusters) {
    throw ConfigError("max_library exceeds the articles available per cluster");
  }
  for (double share : {topic_word_share, in_cluster_share}) {
    if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("shares must lie in [0, 1]");
  }
}

SyntheticDataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  SyntheticDataset out;

  // Articles are assigned round-robin so every cluster has members.
  std::vector<std::vector<Index>> members(config.n_clusters);
  out.article_cluster.resize(config.n_articles);
  for (std::size_t j = 0; j < config.n_articles; ++j) {
    out.article_cluster[j] = static_cast<Index>(j % config.n_clusters);
    members[j % config.n_clusters].push_back(static_cast<Index>(j));
  }
  std::vector<std::discrete_distribution<std::size_t>> popularity;
  for (const auto& m : members) {
    std::vector<double> w(m.size());
    for (std::size_t r = 0; r < m.size(); ++r) {
      w[r] = 1.0 / std::pow(static_cast<double>(r + 1), config.popularity_skew);
    }
    popularity.emplace_back(w.begin(), w.end());
  }

  // Disjoint topic words / tags where the vocabulary allows it.
  auto topic_slice = [&](std::size_t cluster, std::size_t per_topic, std::size_t universe) {
    std::vector<Index> ids(per_topic);
    for (std::size_t k = 0; k < per_topic; ++k) {
      ids[k] = static_cast<Index>((cluster * per_topic + k) % universe);
    }
    return ids;
  };

  std::uniform_int_distribution<std::size_t> pick_cluster(0, config.n_clusters - 1);
  std::uniform_int_distribution<std::size_t> pick_size(config.min_library, config.max_library);
  std::vector<corpus::IndexPair> pairs;
  out.user_cluster.resize(config.n_users);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    const auto home = pick_cluster(rng);
    out.user_cluster[u] = static_cast<Index>(home);
    const auto size = pick_size(rng);
    std::set<Index> lib;
    while (lib.size() < size) {
      const auto c = coin(rng) < config.in_cluster_share ? home : pick_cluster(rng);
      lib.insert(members[c][popularity[c](rng)]);
    }
    for (Index j : lib) pairs.emplace_back(static_cast<Index>(u), j);
  }
  out.interactions = corpus::InteractionMatrix(config.n_users, config.n_articles, std::move(pairs));

  std::vector<double> background(config.vocab_size);
  for (std::size_t w = 0; w < config.vocab_size; ++w) background[w] = 1.0 / static_cast<double>(w + 1);
  std::discrete_distribution<std::size_t> background_word(background.begin(), background.end());
  std::uniform_int_distribution<std::size_t> pick_topic_word(0, config.words_per_topic - 1);
  std::uniform_int_distribution<std::size_t> pick_topic_tag(0, config.tags_per_topic - 1);
  std::uniform_int_distribution<std::size_t> pick_any_tag(0, config.n_tags - 1);
  std::uniform_int_distribution<std::size_t> n_article_tags(2, 6);
  std::poisson_distribution<std::size_t> n_cites(config.mean_citations);

  out.content.resize(config.n_articles);
  for (std::size_t j = 0; j < config.n_articles; ++j) {
    const auto c = out.article_cluster[j];
    const auto words = topic_slice(c, config.words_per_topic, config.vocab_size);
    std::map<Index, std::uint32_t> counts;
    for (std::size_t t = 0; t < config.doc_length; ++t) {
      const auto w = coin(rng) < config.topic_word_share ? words[pick_topic_word(rng)]
                                                         : static_cast<Index>(background_word(rng));
      ++counts[w];
    }
    out.content[j].assign(counts.begin(), counts.end());

    const auto tags = topic_slice(c, config.tags_per_topic, config.n_tags);
    std::set<Index> chosen;
    const auto n_tags = n_article_tags(rng);
    while (chosen.size() < n_tags) {
      chosen.insert(coin(rng) < config.in_cluster_share ? tags[pick_topic_tag(rng)]
                                                        : static_cast<Index>(pick_any_tag(rng)));
    }
    for (Index t : chosen) out.tags.push_back({static_cast<Index>(j), t});

    const auto cites = n_cites(rng);
    for (std::size_t k = 0; k < cites; ++k) {
      const auto target_cluster = coin(rng) < config.in_cluster_share ? c : pick_cluster(rng);
      const auto& pool = members[target_cluster];
      const auto y = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      if (y != j) out.citations.push_back({static_cast<Index>(j), y});
    }
  }
  return out;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string users;
  for (std::size_t u = 0; u < data.interactions.n_users(); ++u) {
    const auto items = data.interactions.user_items(u);
    users += std::to_string(items.size());
    for (Index j : items) users += ' ' + std::to_string(j);
    users += '\n';
  }
  io::write_file_atomic(dir / "users.dat", users);

  std::string mult;
  for (const auto& row : data.content) {
    mult += std::to_string(row.size());
    for (const auto& [term, count] : row) mult += ' ' + std::to_string(term) + ':' + std::to_string(count);
    mult += '\n';
  }
  io::write_file_atomic(dir / "mult.dat", mult);

  std::vector<std::vector<Index>> per_article(data.content.size());
  for (const auto& a : data.tags) per_article[a.article].push_back(a.tag);
  std::string tags;
  for (const auto& row : per_article) {
    tags += std::to_string(row.size());
    for (Index t : row) tags += ' ' + std::to_string(t);
    tags += '\n';
  }
  io::write_file_atomic(dir / "tags.dat", tags);

  std::string cites;
  for (const auto& c : data.citations) cites += std::to_string(c.citing) + ' ' + std::to_string(c.cited) + '\n';
  io::write_file_atomic(dir / "citations.dat", cites);
}

}  // namespace cata::synth

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cata/corpus.hpp"
#include "cata/error.hpp"
#include "cata/synth.hpp"

using namespace cata;

namespace {

synth::SynthConfig small() {
  synth::SynthConfig c;
  c.n_users = 80;
  c.n_articles = 120;
  c.n_clusters = 4;
  c.vocab_size = 200;
  c.n_tags = 60;
  return c;
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  const auto a = synth::generate(small());
  const auto b = synth::generate(small());
  CHECK(a.interactions == b.interactions);
  CHECK(a.content == b.content);
  CHECK(a.user_cluster == b.user_cluster);
  auto other = small();
  other.seed = 8;
  CHECK_FALSE(synth::generate(other).interactions == a.interactions);
}

TEST_CASE("generated sizes respect the configuration") {
  const auto c = small();
  const auto d = synth::generate(c);
  CHECK(d.interactions.n_users() == c.n_users);
  CHECK(d.interactions.n_articles() == c.n_articles);
  CHECK(d.content.size() == c.n_articles);
  CHECK(d.user_cluster.size() == c.n_users);
  CHECK(d.article_cluster.size() == c.n_articles);
  for (std::size_t u = 0; u < c.n_users; ++u) {
    const auto n = d.interactions.user_items(u).size();
    CHECK(n >= c.min_library);
    CHECK(n <= c.max_library);
  }
  for (const auto& row : d.content) {
    for (const auto& [t, n] : row) {
      CHECK(t < c.vocab_size);
      CHECK(n >= 1);
    }
  }
  for (const auto& a : d.tags) CHECK(a.tag < c.n_tags);
  for (const auto& e : d.citations) {
    CHECK(e.citing < c.n_articles);
    CHECK(e.cited < c.n_articles);
    CHECK(e.citing != e.cited);
  }
}

TEST_CASE("libraries follow the user's cluster") {
  const auto d = synth::generate(small());
  std::size_t same = 0, total = 0;
  for (std::size_t u = 0; u < d.interactions.n_users(); ++u) {
    for (auto j : d.interactions.user_items(u)) {
      same += d.article_cluster[j] == d.user_cluster[u];
      ++total;
    }
  }
  CHECK(static_cast<double>(same) / static_cast<double>(total) > 0.6);
}

TEST_CASE("written files load through the corpus readers") {
  const auto d = synth::generate(small());
  const auto dir = std::filesystem::temp_directory_path() / "cata_synth_test";
  std::filesystem::remove_all(dir);
  synth::write_dataset(d, dir);
  CHECK(corpus::load_interactions(dir / "users.dat", d.interactions.n_articles()) == d.interactions);
  CHECK(corpus::load_content_counts(dir / "mult.dat") == d.content);
  auto tags = corpus::load_tag_assignments(dir / "tags.dat");
  auto expected = d.tags;
  auto key = [](const corpus::TagAssignment& a) { return std::pair(a.article, a.tag); };
  std::ranges::sort(tags, {}, key);
  std::ranges::sort(expected, {}, key);
  CHECK(tags.size() == expected.size());
  CHECK(std::ranges::equal(tags, expected, {}, key, key));
  CHECK(corpus::load_citations(dir / "citations.dat").size() == d.citations.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid generator settings are rejected") {
  auto c = small();
  c.max_library = 1000;
  CHECK_THROWS_AS(synth::generate(c), ConfigError);
  c = small();
  c.in_cluster_share = 1.5;
  CHECK_THROWS_AS(synth::generate(c), ConfigError);
  c = small();
  c.n_clusters = 0;
  CHECK_THROWS_AS(synth::generate(c), ConfigError);
}

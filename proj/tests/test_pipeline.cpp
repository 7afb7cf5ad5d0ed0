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
#include <fstream>

#include "cata/binary_io.hpp"
#include "cata/config.hpp"
#include "cata/error.hpp"
#include "cata/pipeline.hpp"
#include "cata/synth.hpp"

using namespace cata;
using namespace cata::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cata_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// A small dataset on disk plus a fast config pointed at it.
ExperimentConfig small_run(const fs::path& root) {
  synth::SynthConfig s;
  s.n_users = 60;
  s.n_articles = 90;
  s.n_clusters = 3;
  s.vocab_size = 150;
  s.n_tags = 40;
  s.tags_per_topic = 8;
  synth::write_dataset(synth::generate(s), root / "data");

  ExperimentConfig c;
  c.users = root / "data" / "users.dat";
  c.content = root / "data" / "mult.dat";
  c.tags = root / "data" / "tags.dat";
  c.citations = root / "data" / "citations.dat";
  c.vocab_size = 100;
  c.min_articles_per_tag = 2;
  c.hyper.dim = 4;
  c.widths = {8, 4};
  c.epochs = 3;
  c.max_sweeps = 4;
  c.n_repeats = 2;
  c.k_list = {5, 10};
  c.output_dir = root / "out";
  return c;
}

}  // namespace

TEST_CASE("preprocess is deterministic and records a manifest") {
  const auto root = scratch("pre");
  auto c = small_run(root);
  const auto m = pipeline::cmd_preprocess(c);
  CHECK(m["n_users"] == 60);
  CHECK(m["n_articles"] == 90);
  CHECK(m["vocab_size"] == 100);
  CHECK(m["inputs"].size() == 4);
  const auto out = c.output_dir;
  const auto R = io::read_file(out / "cache" / "R.bin");
  const auto X = io::read_file(out / "cache" / "X.bin");
  const auto T = io::read_file(out / "cache" / "T.bin");
  pipeline::cmd_preprocess(c);
  CHECK(io::read_file(out / "cache" / "R.bin") == R);
  CHECK(io::read_file(out / "cache" / "X.bin") == X);
  CHECK(io::read_file(out / "cache" / "T.bin") == T);
  CHECK(fs::exists(out / "manifest.json"));
  fs::remove_all(root);
}

TEST_CASE("missing inputs: optional tags, required users") {
  const auto root = scratch("missing");
  auto c = small_run(root);
  c.variant = "cata";
  c.tags = root / "data" / "nope.dat";
  CHECK_NOTHROW(pipeline::cmd_preprocess(c));
  CHECK_FALSE(fs::exists(c.output_dir / "cache" / "T.bin"));

  c.variant = "cata++";
  CHECK_THROWS_AS(pipeline::cmd_preprocess(c), ConfigError);

  c = small_run(root);
  c.users = root / "data" / "absent.dat";
  CHECK_THROWS_AS(pipeline::cmd_preprocess(c), ConfigError);
  fs::remove_all(root);
}

TEST_CASE("each variant trains only the encoders it needs") {
  const auto root = scratch("variants");
  auto c = small_run(root);
  pipeline::cmd_preprocess(c);
  const auto models = c.output_dir / "models";

  c.variant = "wrmf";
  pipeline::cmd_train(c);
  CHECK_FALSE(fs::exists(models / "ae_text.ckpt"));
  CHECK_FALSE(fs::exists(models / "ae_tags.ckpt"));
  CHECK(fs::exists(c.output_dir / "p1" / "models" / "wrmf" / "split1.factors"));
  CHECK(fs::exists(c.output_dir / "p1" / "models" / "wrmf" / "split0.trace.csv"));

  c.variant = "cata-tags";
  pipeline::cmd_train(c);
  CHECK_FALSE(fs::exists(models / "ae_text.ckpt"));
  CHECK(fs::exists(models / "ae_tags.ckpt"));

  const auto tag_ckpt = io::read_file(models / "ae_tags.ckpt");
  c.variant = "cata++";
  pipeline::cmd_train(c);
  CHECK(fs::exists(models / "ae_text.ckpt"));
  // The tag encoder is reused, not retrained.
  CHECK(io::read_file(models / "ae_tags.ckpt") == tag_ckpt);

  c.variant = "pop";
  pipeline::cmd_train(c);
  CHECK(fs::exists(c.output_dir / "p1" / "models" / "pop" / "split0.ranking"));
  fs::remove_all(root);
}

TEST_CASE("evaluation is reproducible and writes the comparison table") {
  const auto root = scratch("eval");
  auto c = small_run(root);
  pipeline::cmd_preprocess(c);
  for (const char* v : {"pop", "wrmf", "cata++"}) {
    c.variant = v;
    pipeline::cmd_train(c);
  }
  c.variant = "cata++";
  c.compare = {"pop", "wrmf"};
  const auto first = pipeline::cmd_evaluate(c);
  REQUIRE(first.size() == 3);
  const auto reports = c.output_dir / "p1" / "reports";
  const auto csv = io::read_file(reports / "cata++.csv");
  const auto table = io::read_file(reports / "improvement.csv");
  pipeline::cmd_evaluate(c);
  CHECK(io::read_file(reports / "cata++.csv") == csv);
  CHECK(io::read_file(reports / "improvement.csv") == table);
  CHECK(fs::exists(reports / "pop.json"));
  for (const auto& set : first) CHECK(set.splits.size() == 2);

  const auto recs = pipeline::cmd_recommend(c, 3, 5);
  CHECK(recs.size() == 5);
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].second >= recs[i].second);

  c.compare = {"cata"};
  CHECK_THROWS_AS(pipeline::cmd_evaluate(c), DataError);
  fs::remove_all(root);
}

TEST_CASE("a failed train leaves no partial model directory") {
  const auto root = scratch("fail");
  auto c = small_run(root);
  c.content.clear();
  c.variant = "wrmf";
  pipeline::cmd_preprocess(c);
  c.variant = "cata";
  CHECK_THROWS_AS(pipeline::cmd_train(c), DataError);
  const auto dir = c.output_dir / "p1" / "models";
  CHECK_FALSE(fs::exists(dir / "cata"));
  CHECK_FALSE(fs::exists(dir / "cata.partial"));
  fs::remove_all(root);
}

TEST_CASE("config files are strict") {
  const auto root = scratch("config");
  const auto write = [&](const std::string& body) {
    std::ofstream(root / "c.json") << body;
    return root / "c.json";
  };
  const auto good = load_config(write(R"({"variant": "wrmf", "d": 10, "widths": [20, 10]})"));
  CHECK(good.variant == "wrmf");
  CHECK(good.hyper.dim == 10);
  CHECK_NOTHROW(validate_model(good));
  CHECK_THROWS_AS(load_config(write(R"({"dimension": 10})")), ConfigError);
  CHECK_THROWS_AS(load_config(write(R"({"d": "ten"})")), ConfigError);
  CHECK_THROWS_AS(load_config(write("{not json")), ConfigError);
  CHECK_THROWS_AS(load_config(root / "missing.json"), ConfigError);

  ExperimentConfig c;
  c.widths = {20, 10};
  CHECK_THROWS_AS(validate_model(c), ConfigError);
  c.hyper.dim = 10;
  CHECK_NOTHROW(validate_model(c));
  c.variant = "bogus";
  CHECK_THROWS_AS(validate_model(c), ConfigError);
  fs::remove_all(root);
}

TEST_CASE("seed streams are distinct") {
  CHECK(pipeline::text_autoencoder_seed(1) != pipeline::tag_autoencoder_seed(1));
  CHECK(pipeline::factor_init_seed(1, 0) != pipeline::factor_init_seed(1, 1));
  CHECK(pipeline::factor_init_seed(1, 0) != pipeline::factor_init_seed(2, 0));
}

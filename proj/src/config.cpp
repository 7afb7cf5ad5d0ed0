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

#include "cata/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"

namespace cata::pipeline {

cf::Variant ExperimentConfig::factor_variant() const {
  if (is_pop()) throw ConfigError("the popularity baseline has no factor model");
  return cf::parse_variant(variant);
}

bool ExperimentConfig::needs_text() const { return !is_pop() && cf::uses_text(factor_variant()); }

bool ExperimentConfig::needs_tags() const { return !is_pop() && cf::uses_tags(factor_variant()); }

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {
      {"users", c.users.string()},
      {"docs", c.docs.string()},
      {"docs_format", c.docs_format},
      {"content", c.content.string()},
      {"tags", c.tags.string()},
      {"citations", c.citations.string()},
      {"citations_format", c.citations_format},
      {"stop_words", c.stop_words.string()},
      {"n_articles", c.n_articles ? nlohmann::json(*c.n_articles) : nlohmann::json(nullptr)},
      {"vocab_size", c.vocab_size},
      {"min_articles_per_tag", c.min_articles_per_tag},
      {"variant", c.variant},
      {"d", c.hyper.dim},
      {"lambda_u", c.hyper.lambda_u},
      {"lambda_v", c.hyper.lambda_v},
      {"a", c.hyper.a},
      {"b", c.hyper.b},
      {"widths", c.widths},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"max_sweeps", c.max_sweeps},
      {"tol", c.tol},
      {"P", c.P},
      {"n_repeats", c.n_repeats},
      {"seed", c.seed},
      {"k_list", c.k_list},
      {"compare", c.compare},
      {"output_dir", c.output_dir.string()},
      {"threads", c.threads},
  };
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "users",     "docs",       "docs_format", "content",       "tags",
      "citations", "citations_format", "stop_words", "n_articles", "vocab_size",
      "min_articles_per_tag", "variant", "d", "lambda_u", "lambda_v", "a", "b", "widths",
      "epochs", "batch_size", "learning_rate", "max_sweeps", "tol", "P", "n_repeats", "seed",
      "k_list", "compare", "output_dir", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  };
  auto get_path = [&](const char* key, std::filesystem::path& target) {
    std::string s = target.string();
    get(key, s);
    target = s;
  };
  get_path("users", c.users);
  get_path("docs", c.docs);
  get("docs_format", c.docs_format);
  get_path("content", c.content);
  get_path("tags", c.tags);
  get_path("citations", c.citations);
  get("citations_format", c.citations_format);
  get_path("stop_words", c.stop_words);
  if (j.contains("n_articles")) {
    if (j.at("n_articles").is_null()) {
      c.n_articles.reset();
    } else {
      std::size_t n = 0;
      get("n_articles", n);
      c.n_articles = n;
    }
  }
  get("vocab_size", c.vocab_size);
  get("min_articles_per_tag", c.min_articles_per_tag);
  get("variant", c.variant);
  get("d", c.hyper.dim);
  get("lambda_u", c.hyper.lambda_u);
  get("lambda_v", c.hyper.lambda_v);
  get("a", c.hyper.a);
  get("b", c.hyper.b);
  get("widths", c.widths);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("learning_rate", c.learning_rate);
  get("max_sweeps", c.max_sweeps);
  get("tol", c.tol);
  get("P", c.P);
  get("n_repeats", c.n_repeats);
  get("seed", c.seed);
  get("k_list", c.k_list);
  get("compare", c.compare);
  get_path("output_dir", c.output_dir);
  get("threads", c.threads);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

void validate_model(const ExperimentConfig& c) {
  if (!c.is_pop()) (void)c.factor_variant();
  c.hyper.validate();
  if (c.widths.empty()) throw ConfigError("widths must not be empty");
  if ((c.needs_text() || c.needs_tags()) && c.widths.back() != c.hyper.dim) {
    throw ConfigError("the last autoencoder width (" + std::to_string(c.widths.back()) +
                      ") must equal the latent dimension d (" + std::to_string(c.hyper.dim) + ")");
  }
  if (c.P == 0) throw ConfigError("P must be at least 1");
  if (c.n_repeats == 0) throw ConfigError("n_repeats must be at least 1");
  if (c.k_list.empty()) throw ConfigError("k_list must not be empty");
  for (auto k : c.k_list) {
    if (k == 0) throw ConfigError("every K must be at least 1");
  }
  if (c.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (c.docs_format != "text" && c.docs_format != "csv") {
    throw ConfigError("docs_format must be 'text' or 'csv'");
  }
  if (c.citations_format != "pairs" && c.citations_format != "lists") {
    throw ConfigError("citations_format must be 'pairs' or 'lists'");
  }
  if (c.vocab_size == 0) throw ConfigError("vocab_size must be at least 1");
}

std::string run_stamp(const ExperimentConfig& c) {
  const nlohmann::json key = {
      {"users", c.users.string()},       {"docs", c.docs.string()},
      {"content", c.content.string()},   {"tags", c.tags.string()},
      {"citations", c.citations.string()}, {"vocab_size", c.vocab_size},
      {"min_articles_per_tag", c.min_articles_per_tag}, {"P", c.P},
      {"n_repeats", c.n_repeats},        {"seed", c.seed}};
  return io::sha256_hex(key.dump()).substr(0, 12);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* base = std::getenv("CATA_DATA_DIR"); base && *base) {
    return std::filesystem::path(base) / "runs" / ("run-" + run_stamp(c));
  }
  throw ConfigError("no output directory: pass --out or set CATA_DATA_DIR");
}

}  // namespace cata::pipeline

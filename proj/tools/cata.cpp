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

// Command-line front end: synth, preprocess, train, evaluate, recommend.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cata/config.hpp"
#include "cata/error.hpp"
#include "cata/pipeline.hpp"
#include "cata/synth.hpp"

namespace {

using cata::pipeline::ExperimentConfig;

enum Exit { kOk = 0, kConfig = 1, kData = 2, kNumerical = 3 };

// Flags are parsed into optionals and applied on top of the config file.
struct Overrides {
  std::optional<std::string> users, docs, docs_format, content, tags, citations,
      citations_format, stop_words, variant, output_dir;
  std::optional<std::size_t> n_articles, vocab_size, min_articles_per_tag, d, epochs,
      batch_size, max_sweeps, P, n_repeats;
  std::optional<double> lambda_u, lambda_v, a, b, learning_rate, tol;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::vector<std::size_t> widths, k_list;
  std::vector<std::string> compare;

  void attach(CLI::App& app) {
    app.add_option("--users", users, "user libraries file (count-prefixed rows)");
    app.add_option("--docs", docs, "raw documents (one per line, or CSV)");
    app.add_option("--docs-format", docs_format, "text | csv");
    app.add_option("--content", content, "pre-tokenized term:count rows per article");
    app.add_option("--tags", tags, "article tag file (count-prefixed rows)");
    app.add_option("--citations", citations, "citation file");
    app.add_option("--citations-format", citations_format, "pairs | lists");
    app.add_option("--stop-words", stop_words, "stop-word list, one per line");
    app.add_option("--n-articles", n_articles, "article count (default: inferred)");
    app.add_option("--vocab-size", vocab_size, "vocabulary size");
    app.add_option("--min-articles-per-tag", min_articles_per_tag, "tag frequency cutoff");
    app.add_option("--variant", variant, "pop | wrmf | cata | cata-tags | cata++");
    app.add_option("-d,--dim", d, "latent dimension");
    app.add_option("--lambda-u", lambda_u, "user regularizer");
    app.add_option("--lambda-v", lambda_v, "article regularizer");
    app.add_option("--a", a, "confidence of observed cells");
    app.add_option("--b", b, "confidence of unobserved cells");
    app.add_option("--widths", widths, "autoencoder hidden widths, last = d")->delimiter(',');
    app.add_option("--epochs", epochs, "autoencoder epochs");
    app.add_option("--batch-size", batch_size, "autoencoder batch size");
    app.add_option("--learning-rate", learning_rate, "Adam learning rate");
    app.add_option("--max-sweeps", max_sweeps, "ALS sweep limit");
    app.add_option("--tol", tol, "ALS relative objective tolerance");
    app.add_option("-P,--train-per-user", P, "training articles per user (1 sparse, 10 dense)");
    app.add_option("--repeats", n_repeats, "number of random splits");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--k-list", k_list, "cutoffs, comma separated")->delimiter(',');
    app.add_option("--compare", compare, "baseline variants for the improvement table")
        ->delimiter(',');
    app.add_option("-o,--out", output_dir, "run directory (default: $CATA_DATA_DIR/runs/run-<stamp>)");
    app.add_option("--threads", threads, "worker threads");
  }

  void apply(ExperimentConfig& c) const {
    auto set = [](const auto& from, auto& to) {
      if (from) to = *from;
    };
    set(users, c.users);
    set(docs, c.docs);
    set(docs_format, c.docs_format);
    set(content, c.content);
    set(tags, c.tags);
    set(citations, c.citations);
    set(citations_format, c.citations_format);
    set(stop_words, c.stop_words);
    if (n_articles) c.n_articles = *n_articles;
    set(vocab_size, c.vocab_size);
    set(min_articles_per_tag, c.min_articles_per_tag);
    set(variant, c.variant);
    set(d, c.hyper.dim);
    set(lambda_u, c.hyper.lambda_u);
    set(lambda_v, c.hyper.lambda_v);
    set(a, c.hyper.a);
    set(b, c.hyper.b);
    if (!widths.empty()) c.widths = widths;
    set(epochs, c.epochs);
    set(batch_size, c.batch_size);
    set(learning_rate, c.learning_rate);
    set(max_sweeps, c.max_sweeps);
    set(tol, c.tol);
    set(P, c.P);
    set(n_repeats, c.n_repeats);
    set(seed, c.seed);
    if (!k_list.empty()) c.k_list = k_list;
    if (!compare.empty()) c.compare = compare;
    set(output_dir, c.output_dir);
    set(threads, c.threads);
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Hybrid article recommender with autoencoder content priors"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  bool verbose = false;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "JSON experiment config");
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");
  Overrides ov;
  ov.attach(app);

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset with planted clusters");
  cata::synth::SynthConfig sc;
  std::string synth_dir;
  synth_cmd->add_option("dir", synth_dir, "output directory")->required();
  synth_cmd->add_option("--n-users", sc.n_users);
  synth_cmd->add_option("--n-articles-synth", sc.n_articles);
  synth_cmd->add_option("--clusters", sc.n_clusters);
  synth_cmd->add_option("--synth-seed", sc.seed);

  auto* pre_cmd = app.add_subcommand("preprocess", "build cached matrices and the manifest");
  auto* train_cmd = app.add_subcommand("train", "pretrain autoencoders and fit factors");
  auto* eval_cmd = app.add_subcommand("evaluate", "write recall/nDCG reports");
  auto* rec_cmd = app.add_subcommand("recommend", "top-K articles for one user");
  std::size_t user = 0;
  std::size_t k = 10;
  std::size_t split = 0;
  rec_cmd->add_option("user_id", user)->required();
  rec_cmd->add_option("-k,--k", k, "list length");
  rec_cmd->add_option("--split", split, "which split's model to use");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("cata"));
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  if (*synth_cmd) {
    sc.validate();
    auto data = cata::synth::generate(sc);
    cata::synth::write_dataset(data, synth_dir);
    spdlog::info("wrote {} users x {} articles to {}", sc.n_users, sc.n_articles, synth_dir);
    return kOk;
  }

  ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : cata::pipeline::load_config(config_path);
  ov.apply(c);

  if (*pre_cmd) {
    auto manifest = cata::pipeline::cmd_preprocess(c);
    std::cout << manifest.dump(2) << '\n';
  } else if (*train_cmd) {
    cata::pipeline::cmd_train(c);
  } else if (*eval_cmd) {
    auto sets = cata::pipeline::cmd_evaluate(c);
    std::cout << cata::eval::to_csv(sets);
  } else if (*rec_cmd) {
    for (const auto& [article, score] : cata::pipeline::cmd_recommend(c, user, k, split)) {
      std::cout << fmt::format("{}\t{:.6f}\n", article, score);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cata::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kConfig;
  } catch (const cata::DataError& e) {
    spdlog::error("data: {}", e.what());
    return kData;
  } catch (const cata::NumericalError& e) {
    spdlog::error("numerical: {}", e.what());
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("io: {}", e.what());
    return kData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  }
}

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

#include "cata/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"

namespace cata::pipeline {

namespace fs = std::filesystem;
using corpus::Index;

Dataset dataset_from_synthetic(const synth::SyntheticDataset& data, std::size_t vocab_size,
                               std::size_t min_articles_per_tag) {
  Index n_terms = 0;
  for (const auto& row : data.content) {
    for (const auto& [term, count] : row) n_terms = std::max<Index>(n_terms, term + 1);
  }
  const auto terms = corpus::select_terms(data.content, n_terms, vocab_size);
  Dataset out;
  out.interactions = data.interactions;
  out.content = corpus::bow_from_counts(data.content, terms);
  out.tags = corpus::build_tag_matrix(data.interactions.n_articles(), data.tags, data.citations,
                                      min_articles_per_tag);
  return out;
}

std::uint64_t text_autoencoder_seed(std::uint64_t seed) { return seed * 1000003u + 11; }
std::uint64_t tag_autoencoder_seed(std::uint64_t seed) { return seed * 1000003u + 23; }
std::uint64_t factor_init_seed(std::uint64_t seed, std::size_t split) {
  return seed * 1000003u + 101 + split;
}

ae::PretrainConfig pretrain_config(const ExperimentConfig& c, std::uint64_t seed) {
  ae::PretrainConfig pc;
  pc.epochs = c.epochs;
  pc.batch_size = c.batch_size;
  pc.adam.learning_rate = c.learning_rate;
  pc.seed = seed;
  return pc;
}

ae::AttentiveAutoencoder train_autoencoder(const ae::SparseRows& data, const ExperimentConfig& c,
                                           std::uint64_t seed, std::vector<double>* loss) {
  auto model = ae::AttentiveAutoencoder::build(static_cast<std::size_t>(data.cols()), c.widths, seed);
  auto result = ae::pretrain(model, data, pretrain_config(c, seed));
  if (!result.epoch_loss.empty()) {
    spdlog::info("autoencoder {}: BCE {:.4f} -> {:.4f} over {} epochs", data.cols(),
                 result.epoch_loss.front(), result.epoch_loss.back(), result.epoch_loss.size());
  }
  if (loss) *loss = std::move(result.epoch_loss);
  return model;
}

cf::PriorMatrix build_prior(cf::Variant variant, const cf::Matrix* text_codes,
                            const cf::Matrix* tag_codes, std::size_t n_articles, std::size_t dim) {
  auto check = [&](const cf::Matrix* codes, const char* what) -> const cf::Matrix& {
    if (!codes) throw ContractError(fmt::format("variant {} needs {} codes", cf::to_string(variant), what));
    if (static_cast<std::size_t>(codes->rows()) != n_articles ||
        static_cast<std::size_t>(codes->cols()) != dim) {
      throw ContractError(fmt::format("{} codes are {}x{}, expected {}x{}", what, codes->rows(),
                                      codes->cols(), n_articles, dim));
    }
    return *codes;
  };
  switch (variant) {
    case cf::Variant::kWrmf: return cf::PriorMatrix::zero(n_articles, dim);
    case cf::Variant::kCata: return cf::PriorMatrix::from_codes(check(text_codes, "text"));
    case cf::Variant::kCataTags: return cf::PriorMatrix::from_codes(check(tag_codes, "tag"));
    case cf::Variant::kCataPlusPlus:
      return cf::PriorMatrix::sum(check(text_codes, "text"), check(tag_codes, "tag"));
  }
  throw ContractError("unknown variant");
}

FitResult fit_factors(const corpus::InteractionMatrix& train, const cf::PriorMatrix& prior,
                      cf::Variant variant, const ExperimentConfig& c, std::size_t split) {
  FitResult out;
  out.model = cf::FactorModel::initialize(train.n_users(), train.n_articles(), c.hyper, variant,
                                          factor_init_seed(c.seed, split));
  out.als = cf::train_als(train, out.model, prior, {c.max_sweeps, c.tol, c.threads});
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Relative inputs that do not exist from the working directory are looked up
// under $CATA_DATA_DIR.
fs::path resolve_input(const fs::path& p) {
  if (p.empty() || p.is_absolute() || fs::exists(p)) return p;
  if (const char* base = std::getenv("CATA_DATA_DIR"); base && *base) {
    if (auto alt = fs::path(base) / p; fs::exists(alt)) return alt;
  }
  return p;
}

// Empty path, or a missing file the variant does not need: nullopt.
std::optional<fs::path> optional_input(const fs::path& configured, bool required, const char* role) {
  if (configured.empty()) {
    if (required) throw ConfigError(fmt::format("the {} file is required for this variant", role));
    return std::nullopt;
  }
  auto p = resolve_input(configured);
  if (!fs::exists(p)) {
    if (required) throw ConfigError(fmt::format("{} file {} does not exist", role, p.string()));
    spdlog::warn("{} file {} does not exist; continuing without it", role, p.string());
    return std::nullopt;
  }
  return p;
}

fs::path setting_dir(const fs::path& out, const ExperimentConfig& c) {
  return out / ("p" + std::to_string(c.P));
}

fs::path split_path(const fs::path& out, const ExperimentConfig& c, std::size_t k, const char* part) {
  return setting_dir(out, c) / "splits" / fmt::format("split{}.{}.bin", k, part);
}

fs::path model_dir(const fs::path& out, const ExperimentConfig& c, std::string_view variant) {
  return setting_dir(out, c) / "models" / std::string(variant);
}

std::string read_required(const fs::path& p, const char* what) {
  if (!fs::exists(p)) {
    throw DataError(fmt::format("{} {} is missing; run the earlier pipeline stage first", what, p.string()));
  }
  return io::read_file(p);
}

Dataset load_caches(const fs::path& out) {
  Dataset d;
  d.interactions = corpus::deserialize_interactions(read_required(out / "cache" / "R.bin", "interaction cache"));
  if (fs::exists(out / "cache" / "X.bin")) {
    d.content = corpus::deserialize_content(io::read_file(out / "cache" / "X.bin"));
  }
  if (fs::exists(out / "cache" / "T.bin")) {
    d.tags = corpus::deserialize_tags(io::read_file(out / "cache" / "T.bin"));
  }
  return d;
}

eval::Split load_split(const fs::path& out, const ExperimentConfig& c, std::size_t k) {
  return {corpus::deserialize_interactions(read_required(split_path(out, c, k, "train"), "split")),
          corpus::deserialize_interactions(read_required(split_path(out, c, k, "test"), "split"))};
}

std::string vocab_tsv(const corpus::Vocabulary& vocab) {
  std::string out = "column\ttoken\tdoc_freq\tmax_count\tscore\n";
  for (std::size_t j = 0; j < vocab.size(); ++j) {
    const auto& e = vocab.entries()[j];
    out += fmt::format("{}\t{}\t{}\t{}\t{:.17g}\n", j, e.token, e.doc_freq, e.max_count, e.score);
  }
  return out;
}

std::string term_tsv(const std::vector<Index>& terms) {
  std::string out = "column\tterm_id\n";
  for (std::size_t j = 0; j < terms.size(); ++j) out += fmt::format("{}\t{}\n", j, terms[j]);
  return out;
}

nlohmann::json autoencoder_sidecar(const ExperimentConfig& c, std::size_t input_dim,
                                   std::uint64_t seed, const std::string& input_sha) {
  return {{"input_dim", input_dim}, {"widths", c.widths},       {"epochs", c.epochs},
          {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"seed", seed},               {"input_sha256", input_sha}};
}

// Loads the checkpoint when its sidecar matches the requested training
// configuration, otherwise trains and writes checkpoint + sidecar. Codes are
// always computed from the reloaded checkpoint so fresh and reused runs agree.
cf::Matrix autoencoder_codes(const fs::path& stem, const ae::SparseRows& data,
                             const std::string& input_sha, const ExperimentConfig& c,
                             std::uint64_t seed) {
  auto ckpt = stem;
  ckpt += ".ckpt";
  auto sidecar_path = stem;
  sidecar_path += ".json";
  auto wanted = autoencoder_sidecar(c, static_cast<std::size_t>(data.cols()), seed, input_sha);

  bool reuse = false;
  if (fs::exists(ckpt) && fs::exists(sidecar_path)) {
    auto existing = nlohmann::json::parse(io::read_file(sidecar_path), nullptr, false);
    if (!existing.is_discarded() && existing.is_object()) {
      existing.erase("loss_history");
      reuse = existing == wanted;
    }
  }
  if (reuse) {
    spdlog::info("reusing autoencoder checkpoint {}", ckpt.string());
  } else {
    std::vector<double> loss;
    auto model = train_autoencoder(data, c, seed, &loss);
    model.save(ckpt);
    wanted["loss_history"] = loss;
    io::write_file_atomic(sidecar_path, wanted.dump(2) + "\n");
  }
  auto model = ae::AttentiveAutoencoder::load(ckpt);
  return model.encode(data);
}

}  // namespace

nlohmann::json cmd_preprocess(const ExperimentConfig& c) {
  validate_model(c);
  const auto out = resolve_output_dir(c);
  nlohmann::json inputs = nlohmann::json::array();
  auto record = [&](const char* role, const fs::path& p) {
    inputs.push_back({{"role", role}, {"path", p.string()}, {"sha256", io::sha256_file(p)}});
  };

  const auto users = optional_input(c.users, true, "users");
  record("users", *users);

  // The content matrix fixes the article count when no explicit one is given.
  std::optional<corpus::ContentMatrix> content;
  std::string vocab_listing;
  if (auto p = optional_input(c.content, false, "content")) {
    record("content", *p);
    const auto counts = corpus::load_content_counts(*p);
    Index n_terms = 0;
    for (const auto& row : counts) {
      for (const auto& [term, count] : row) n_terms = std::max<Index>(n_terms, term + 1);
    }
    const auto terms = corpus::select_terms(counts, n_terms, c.vocab_size);
    content = corpus::bow_from_counts(counts, terms);
    vocab_listing = term_tsv(terms);
  } else if (auto d = optional_input(c.docs, c.needs_text(), "docs")) {
    record("docs", *d);
    const auto texts = corpus::load_documents(
        *d, c.docs_format == "csv" ? corpus::DocumentFormat::kCsv : corpus::DocumentFormat::kText);
    std::vector<corpus::Document> docs;
    docs.reserve(texts.size());
    for (const auto& t : texts) docs.push_back(corpus::tokenize(t));
    corpus::StopWords custom;
    if (!c.stop_words.empty()) {
      const auto sw = resolve_input(c.stop_words);
      record("stop_words", sw);
      custom = corpus::load_stop_words(sw);
    }
    const auto& stop = c.stop_words.empty() ? corpus::default_stop_words() : custom;
    const auto vocab = corpus::select_vocabulary(docs, stop, c.vocab_size);
    content = corpus::build_bow(docs, vocab);
    vocab_listing = vocab_tsv(vocab);
  }

  std::optional<std::size_t> n_articles = c.n_articles;
  if (!n_articles && content) n_articles = content->n_articles();
  const auto R = corpus::load_interactions(*users, n_articles);
  if (content && content->n_articles() != R.n_articles()) {
    throw DataError(fmt::format("content covers {} articles but the interaction matrix has {}",
                                content->n_articles(), R.n_articles()));
  }

  std::optional<corpus::TagMatrix> tags;
  std::size_t n_citations = 0;
  if (auto p = optional_input(c.tags, c.needs_tags(), "tags")) {
    record("tags", *p);
    const auto assignments = corpus::load_tag_assignments(*p);
    std::vector<corpus::Citation> citations;
    if (auto cp = optional_input(c.citations, false, "citations")) {
      record("citations", *cp);
      citations = corpus::load_citations(
          *cp, c.citations_format == "lists" ? corpus::CitationFormat::kLists : corpus::CitationFormat::kPairs);
    }
    n_citations = citations.size();
    tags = corpus::build_tag_matrix(R.n_articles(), assignments, citations, c.min_articles_per_tag);
  }

  const auto cache = out / "cache";
  io::write_file_atomic(cache / "R.bin", corpus::serialize(R));
  if (content) {
    io::write_file_atomic(cache / "X.bin", corpus::serialize(*content));
    io::write_file_atomic(cache / "vocab.tsv", vocab_listing);
  }
  if (tags) io::write_file_atomic(cache / "T.bin", corpus::serialize(*tags));

  nlohmann::json manifest = {
      {"stamp", run_stamp(c)},
      {"inputs", inputs},
      {"n_users", R.n_users()},
      {"n_articles", R.n_articles()},
      {"pairs", R.nnz()},
      {"vocab_size", content ? nlohmann::json(content->vocab_size()) : nlohmann::json(nullptr)},
      {"n_tags", tags ? nlohmann::json(tags->n_tags()) : nlohmann::json(nullptr)},
      {"n_citations", n_citations},
      {"settings",
       {{"vocab_size", c.vocab_size},
        {"min_articles_per_tag", c.min_articles_per_tag},
        {"docs_format", c.docs_format},
        {"citations_format", c.citations_format}}},
  };
  io::write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  spdlog::info("preprocessed {} users x {} articles ({} pairs) into {}", R.n_users(),
               R.n_articles(), R.nnz(), out.string());
  return manifest;
}

void cmd_train(const ExperimentConfig& c) {
  validate_model(c);
  const auto out = resolve_output_dir(c);
  const auto data = load_caches(out);

  const auto splits = eval::make_splits(data.interactions, {c.P, c.seed, c.n_repeats});
  for (std::size_t k = 0; k < splits.size(); ++k) {
    io::write_file_atomic(split_path(out, c, k, "train"), corpus::serialize(splits[k].train));
    io::write_file_atomic(split_path(out, c, k, "test"), corpus::serialize(splits[k].test));
  }

  const auto final_dir = model_dir(out, c, c.variant);
  auto partial = final_dir;
  partial += ".partial";
  fs::remove_all(partial);
  fs::create_directories(partial);
  try {
    if (c.is_pop()) {
      for (std::size_t k = 0; k < splits.size(); ++k) {
        std::string listing;
        for (Index j : cf::pop_baseline(splits[k].train)) listing += std::to_string(j) + '\n';
        io::write_file_atomic(partial / fmt::format("split{}.ranking", k), listing);
      }
    } else {
      const auto variant = c.factor_variant();
      std::optional<cf::Matrix> text_codes;
      std::optional<cf::Matrix> tag_codes;
      if (cf::uses_text(variant)) {
        if (!data.content) throw DataError("no content cache; preprocess with a docs or content file");
        text_codes = autoencoder_codes(out / "models" / "ae_text", data.content->features(),
                                       io::sha256_file(out / "cache" / "X.bin"), c,
                                       text_autoencoder_seed(c.seed));
      }
      if (cf::uses_tags(variant)) {
        if (!data.tags) throw DataError("no tag cache; preprocess with a tags file");
        tag_codes = autoencoder_codes(out / "models" / "ae_tags", data.tags->features(),
                                      io::sha256_file(out / "cache" / "T.bin"), c,
                                      tag_autoencoder_seed(c.seed));
      }
      const auto prior = build_prior(variant, text_codes ? &*text_codes : nullptr,
                                     tag_codes ? &*tag_codes : nullptr,
                                     data.interactions.n_articles(), c.hyper.dim);
      for (std::size_t k = 0; k < splits.size(); ++k) {
        auto fit = fit_factors(splits[k].train, prior, variant, c, k);
        spdlog::info("{} split {}: {} sweeps, objective {:.6g} -> {:.6g}", c.variant, k,
                     fit.als.sweeps, fit.als.objective.front(), fit.als.objective.back());
        fit.model.save(partial / fmt::format("split{}.factors", k));
        std::string trace = "sweep,objective\n";
        for (std::size_t s = 0; s < fit.als.objective.size(); ++s) {
          trace += fmt::format("{},{:.17g}\n", s, fit.als.objective[s]);
        }
        io::write_file_atomic(partial / fmt::format("split{}.trace.csv", k), trace);
      }
    }
  } catch (...) {
    fs::remove_all(partial);
    throw;
  }
  fs::remove_all(final_dir);
  fs::rename(partial, final_dir);
}

namespace {

std::vector<Index> load_ranking(const fs::path& p) {
  std::istringstream in(read_required(p, "popularity ranking"));
  std::vector<Index> out;
  for (Index j; in >> j;) out.push_back(j);
  return out;
}

eval::ReportSet evaluate_variant(const fs::path& out, const ExperimentConfig& c,
                                 const std::string& variant) {
  eval::ReportSet set;
  set.variant = variant;
  set.P = c.P;
  const auto dir = model_dir(out, c, variant);
  for (std::size_t k = 0; k < c.n_repeats; ++k) {
    const auto split = load_split(out, c, k);
    if (variant == "pop") {
      const auto ranking = load_ranking(dir / fmt::format("split{}.ranking", k));
      set.splits.push_back(eval::evaluate(ranking, split.train, split.test, c.k_list, c.threads));
    } else {
      const auto path = dir / fmt::format("split{}.factors", k);
      if (!fs::exists(path)) {
        throw DataError(fmt::format("checkpoint {} is missing; run train for {}", path.string(), variant));
      }
      const auto model = cf::FactorModel::load(path);
      set.splits.push_back(eval::evaluate(model, split.train, split.test, c.k_list, c.threads));
    }
  }
  set.finalize_mean();
  return set;
}

}  // namespace

std::vector<eval::ReportSet> cmd_evaluate(const ExperimentConfig& c) {
  validate_model(c);
  const auto out = resolve_output_dir(c);
  std::vector<std::string> variants{c.variant};
  variants.insert(variants.end(), c.compare.begin(), c.compare.end());

  std::vector<eval::ReportSet> sets;
  const auto reports = setting_dir(out, c) / "reports";
  for (const auto& v : variants) {
    if (v != "pop") (void)cf::parse_variant(v);
    sets.push_back(evaluate_variant(out, c, v));
    io::write_file_atomic(reports / (v + ".csv"), eval::to_csv(std::span(&sets.back(), 1)));
    io::write_file_atomic(reports / (v + ".json"), eval::to_json(sets.back()).dump(2) + "\n");
    const auto& mean = sets.back().mean;
    for (const auto& row : mean.rows) {
      spdlog::info("{} {} recall@{} = {:.4f}  nDCG@{} = {:.4f}", v, sets.back().setting(), row.K,
                   row.recall, row.K, row.ndcg);
    }
  }
  if (sets.size() > 1) {
    const auto table = eval::improvement_table(sets.front(), std::span(sets).subspan(1));
    io::write_file_atomic(reports / "improvement.csv", eval::to_csv(table));
  }
  return sets;
}

std::vector<std::pair<Index, double>> cmd_recommend(const ExperimentConfig& c, std::size_t user,
                                                    std::size_t K, std::size_t split) {
  validate_model(c);
  if (split >= c.n_repeats) throw ConfigError("split index out of range");
  const auto out = resolve_output_dir(c);
  const auto s = load_split(out, c, split);
  if (user >= s.train.n_users()) {
    throw ConfigError(fmt::format("user {} out of range ({} users)", user, s.train.n_users()));
  }
  Eigen::VectorXd scores;
  if (c.is_pop()) {
    const auto counts = s.train.article_counts();
    scores.resize(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t j = 0; j < counts.size(); ++j) scores(static_cast<Eigen::Index>(j)) = static_cast<double>(counts[j]);
  } else {
    const auto path = model_dir(out, c, c.variant) / fmt::format("split{}.factors", split);
    if (!fs::exists(path)) throw DataError(fmt::format("checkpoint {} is missing", path.string()));
    scores = cf::predict_scores(cf::FactorModel::load(path), user);
  }
  const auto ranked = eval::top_k({scores.data(), static_cast<std::size_t>(scores.size())},
                                  s.train.user_items(user), K);
  std::vector<std::pair<Index, double>> result;
  for (Index j : ranked) result.emplace_back(j, scores(j));
  return result;
}

}  // namespace cata::pipeline

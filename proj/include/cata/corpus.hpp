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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

namespace cata::corpus {

using Index = std::uint32_t;
using IndexPair = std::pair<Index, Index>;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Compressed row storage of a binary matrix. Column indices inside a row are
/// strictly increasing, which makes duplicates impossible.
class BinaryRows {
 public:
  BinaryRows() = default;

  // Sorts and deduplicates `pairs`; throws BoundsError for out-of-range cells.
  static BinaryRows from_pairs(std::size_t rows, std::size_t cols,
                               std::vector<IndexPair> pairs);

  std::size_t rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return indices_.size(); }

  std::span<const Index> row(std::size_t r) const;
  bool contains(std::size_t r, Index c) const;
  BinaryRows transposed() const;
  std::vector<IndexPair> pairs() const;

  // Real-valued copy with 1.0 at every stored cell.
  SparseRows to_sparse() const;

  bool operator==(const BinaryRows&) const = default;

 private:
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Index> indices_;
};

/// One-class user x article feedback: p_ij = 1 exactly on stored pairs.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  InteractionMatrix(std::size_t n_users, std::size_t n_articles, std::vector<IndexPair> pairs)
      : pattern_(BinaryRows::from_pairs(n_users, n_articles, std::move(pairs))) {}
  explicit InteractionMatrix(BinaryRows pattern) : pattern_(std::move(pattern)) {}

  std::size_t n_users() const { return pattern_.rows(); }
  std::size_t n_articles() const { return pattern_.cols(); }
  std::size_t nnz() const { return pattern_.nnz(); }
  std::span<const Index> user_items(std::size_t user) const { return pattern_.row(user); }
  bool contains(std::size_t user, Index article) const { return pattern_.contains(user, article); }
  std::vector<IndexPair> pairs() const { return pattern_.pairs(); }

  // Article-major view: row j lists the users that hold article j.
  BinaryRows by_article() const { return pattern_.transposed(); }
  // Number of users holding each article.
  std::vector<std::size_t> article_counts() const;

  const BinaryRows& pattern() const { return pattern_; }
  bool operator==(const InteractionMatrix&) const = default;

 private:
  BinaryRows pattern_;
};

/// Article x vocabulary bag-of-words values in [0, 1].
class ContentMatrix {
 public:
  ContentMatrix() = default;
  explicit ContentMatrix(SparseRows values);

  std::size_t n_articles() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t vocab_size() const { return static_cast<std::size_t>(values_.cols()); }
  const SparseRows& features() const { return values_; }

 private:
  SparseRows values_;
};

/// Binary article x tag matrix after frequency filtering and citation
/// propagation. Column t corresponds to input tag id original_tag_ids()[t].
class TagMatrix {
 public:
  TagMatrix() = default;
  TagMatrix(BinaryRows pattern, std::vector<Index> original_tag_ids);

  std::size_t n_articles() const { return pattern_.rows(); }
  std::size_t n_tags() const { return pattern_.cols(); }
  std::span<const Index> article_tags(std::size_t article) const { return pattern_.row(article); }
  const std::vector<Index>& original_tag_ids() const { return original_tag_ids_; }
  const BinaryRows& pattern() const { return pattern_; }
  SparseRows features() const { return pattern_.to_sparse(); }

  bool operator==(const TagMatrix&) const = default;

 private:
  BinaryRows pattern_;
  std::vector<Index> original_tag_ids_;
};

struct VocabEntry {
  std::string token;
  std::uint32_t doc_freq = 0;
  std::uint32_t max_count = 0;  // largest count of the token in any single document
  double score = 0.0;           // max_count * ln(n_docs / doc_freq)
};

/// Selected tokens in rank order; column j of the bag-of-words matrix is
/// entries()[j].
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  const std::string& token(std::size_t i) const { return entries_[i].token; }
  std::optional<Index> find(std::string_view token) const;

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, Index> index_;
};

using Document = std::vector<std::string>;
using StopWords = std::unordered_set<std::string>;
// Sparse term-count row of a pre-tokenized document: (term id, count).
using TermCounts = std::vector<std::pair<Index, std::uint32_t>>;

// Lower-cases and splits on anything that is not an ASCII letter or digit.
// Tokens shorter than two characters or made only of digits are dropped.
Document tokenize(std::string_view text);

// English stop-word list bundled with the library.
const StopWords& default_stop_words();
StopWords load_stop_words(const std::filesystem::path& path);

// Top-N tokens by max-count TF x ln(N/df) IDF, ties broken lexicographically.
// Returns every candidate (and logs a warning) when fewer than top_n exist.
Vocabulary select_vocabulary(std::span<const Document> docs, const StopWords& stop_words,
                             std::size_t top_n);

// Same scoring over pre-tokenized count rows; ties broken by ascending term
// id. Returns the selected term ids in rank order.
std::vector<Index> select_terms(std::span<const TermCounts> docs, std::size_t n_terms,
                                std::size_t top_n);

ContentMatrix build_bow(std::span<const Document> docs, const Vocabulary& vocab);

// Keeps only `selected_terms` (column j = selected_terms[j]) and max-normalizes.
ContentMatrix bow_from_counts(std::span<const TermCounts> docs,
                              std::span<const Index> selected_terms);

struct TagAssignment {
  Index article;
  Index tag;
};

struct Citation {
  Index citing;
  Index cited;
};

// Drops tags held by fewer than min_articles_per_tag articles, then copies
// every cited article's original tag row into the citing article's row.
TagMatrix build_tag_matrix(std::size_t n_articles, std::span<const TagAssignment> assignments,
                           std::span<const Citation> citations,
                           std::size_t min_articles_per_tag);

// ---------------------------------------------------------------------------
// Text file readers

// Lines of the form "count id id ..."; the count must match. Blank lines are
// malformed. Throws ParseError carrying the 1-based line number.
std::vector<std::vector<Index>> parse_count_prefixed(std::istream& in);

// n_articles == nullopt infers the article count as max id + 1.
InteractionMatrix parse_interactions(std::istream& in,
                                     std::optional<std::size_t> n_articles = std::nullopt);
InteractionMatrix load_interactions(const std::filesystem::path& path,
                                    std::optional<std::size_t> n_articles = std::nullopt);

// "num_terms term_id:count ..." per article.
std::vector<TermCounts> parse_content_counts(std::istream& in);
std::vector<TermCounts> load_content_counts(const std::filesystem::path& path);

// One line per article, "count tag tag ...".
std::vector<TagAssignment> load_tag_assignments(const std::filesystem::path& path);

enum class CitationFormat { kPairs, kLists };
// kPairs: "citing cited" per line. kLists: line x is "count cited cited ...".
std::vector<Citation> load_citations(const std::filesystem::path& path,
                                     CitationFormat format = CitationFormat::kPairs);

enum class DocumentFormat { kText, kCsv };
// kText: one article per line. kCsv: header row; title and abstract columns
// ("raw.title"/"raw.abstract", falling back to "title"/"abstract") are joined.
std::vector<std::string> load_documents(const std::filesystem::path& path,
                                        DocumentFormat format = DocumentFormat::kText);

// ---------------------------------------------------------------------------
// Binary caches
//
//   "CATAMTRX" magic, u8 version, u8 kind (1 interactions, 2 content, 3 tags),
//   u64 rows, u64 cols, u64 nnz, u64 offsets[rows + 1], u32 columns[nnz],
//   then kind 2: f64 values[nnz]; kind 3: u64 n, u32 original_tag_ids[n].
// All integers and floats little-endian.

std::string serialize(const InteractionMatrix& m);
std::string serialize(const ContentMatrix& m);
std::string serialize(const TagMatrix& m);
InteractionMatrix deserialize_interactions(std::string_view bytes);
ContentMatrix deserialize_content(std::string_view bytes);
TagMatrix deserialize_tags(std::string_view bytes);

}  // namespace cata::corpus

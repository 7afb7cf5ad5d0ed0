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

#include "cata/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cata/binary_io.hpp"
#include "cata/error.hpp"

namespace cata::corpus {

// Generated from data/stopwords_en.txt at configure time.
extern const char* const kBundledStopWords;

// ---------------------------------------------------------------------------
// BinaryRows

BinaryRows BinaryRows::from_pairs(std::size_t rows, std::size_t cols,
                                  std::vector<IndexPair> pairs) {
  for (const auto& [r, c] : pairs) {
    if (r >= rows || c >= cols) {
      throw BoundsError("cell (" + std::to_string(r) + ", " + std::to_string(c) +
                        ") outside " + std::to_string(rows) + " x " + std::to_string(cols));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  BinaryRows out;
  out.cols_ = cols;
  out.offsets_.assign(rows + 1, 0);
  out.indices_.reserve(pairs.size());
  for (const auto& [r, c] : pairs) {
    ++out.offsets_[r + 1];
    out.indices_.push_back(c);
  }
  for (std::size_t r = 0; r < rows; ++r) out.offsets_[r + 1] += out.offsets_[r];
  return out;
}

std::span<const Index> BinaryRows::row(std::size_t r) const {
  if (r >= rows()) throw BoundsError("row " + std::to_string(r) + " out of range");
  return {indices_.data() + offsets_[r], indices_.data() + offsets_[r + 1]};
}

bool BinaryRows::contains(std::size_t r, Index c) const {
  auto items = row(r);
  return std::binary_search(items.begin(), items.end(), c);
}

BinaryRows BinaryRows::transposed() const {
  BinaryRows out;
  out.cols_ = rows();
  out.offsets_.assign(cols_ + 1, 0);
  for (Index c : indices_) ++out.offsets_[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) out.offsets_[c + 1] += out.offsets_[c];
  out.indices_.resize(indices_.size());
  std::vector<std::uint64_t> cursor(out.offsets_.begin(), out.offsets_.end() - 1);
  // Rows are visited in increasing order, so each output row stays sorted.
  for (std::size_t r = 0; r < rows(); ++r) {
    for (Index c : row(r)) out.indices_[cursor[c]++] = static_cast<Index>(r);
  }
  return out;
}

std::vector<IndexPair> BinaryRows::pairs() const {
  std::vector<IndexPair> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (Index c : row(r)) out.emplace_back(static_cast<Index>(r), c);
  }
  return out;
}

SparseRows BinaryRows::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nnz());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (Index c : row(r)) {
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), 1.0);
    }
  }
  SparseRows out(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols_));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

std::vector<std::size_t> InteractionMatrix::article_counts() const {
  std::vector<std::size_t> counts(n_articles(), 0);
  for (std::size_t u = 0; u < n_users(); ++u) {
    for (Index j : user_items(u)) ++counts[j];
  }
  return counts;
}

ContentMatrix::ContentMatrix(SparseRows values) : values_(std::move(values)) {
  values_.makeCompressed();
  for (Eigen::Index r = 0; r < values_.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(values_, r); it; ++it) {
      if (!(it.value() > 0.0 && it.value() <= 1.0)) {
        throw DataError("content value outside (0, 1] in article " + std::to_string(r));
      }
    }
  }
}

TagMatrix::TagMatrix(BinaryRows pattern, std::vector<Index> original_tag_ids)
    : pattern_(std::move(pattern)), original_tag_ids_(std::move(original_tag_ids)) {
  if (original_tag_ids_.size() != pattern_.cols()) {
    throw ContractError("tag id map does not match tag matrix width");
  }
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].token, static_cast<Index>(i)).second) {
      throw ContractError("duplicate vocabulary token '" + entries_[i].token + "'");
    }
  }
}

std::optional<Index> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Text preprocessing

Document tokenize(std::string_view text) {
  Document out;
  std::string current;
  auto flush = [&] {
    const bool all_digits = std::all_of(current.begin(), current.end(),
                                        [](unsigned char c) { return std::isdigit(c); });
    if (current.size() >= 2 && !all_digits) out.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      flush();
    }
  }
  if (!current.empty()) flush();
  return out;
}

namespace {

StopWords parse_stop_words(std::istream& in) {
  StopWords out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (auto& tok : tokenize(line)) out.insert(std::move(tok));
  }
  return out;
}

struct TermStat {
  std::uint32_t doc_freq = 0;
  std::uint32_t max_count = 0;
};

double tfidf_score(const TermStat& s, std::size_t n_docs) {
  return static_cast<double>(s.max_count) *
         std::log(static_cast<double>(n_docs) / static_cast<double>(s.doc_freq));
}

void warn_if_short(std::size_t available, std::size_t top_n) {
  if (available < top_n) {
    spdlog::warn("vocabulary selection: only {} candidate terms for top_n={}", available, top_n);
  }
}

SparseRows max_normalize(std::size_t n_rows, std::size_t n_cols,
                         const std::vector<std::vector<std::pair<Index, double>>>& counts) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double peak = 0.0;
    for (const auto& [c, v] : counts[r]) peak = std::max(peak, v);
    for (const auto& [c, v] : counts[r]) {
      if (v > 0.0) {
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v / peak);
      }
    }
  }
  SparseRows out(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

const StopWords& default_stop_words() {
  static const StopWords words = [] {
    std::istringstream in(kBundledStopWords);
    return parse_stop_words(in);
  }();
  return words;
}

StopWords load_stop_words(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stop-word file " + path.string());
  return parse_stop_words(in);
}

Vocabulary select_vocabulary(std::span<const Document> docs, const StopWords& stop_words,
                             std::size_t top_n) {
  if (top_n == 0) throw ConfigError("vocabulary size must be at least 1");
  std::unordered_map<std::string, TermStat> stats;
  std::unordered_map<std::string_view, std::uint32_t> doc_counts;
  for (const auto& doc : docs) {
    doc_counts.clear();
    for (const auto& tok : doc) {
      if (!stop_words.contains(tok)) ++doc_counts[tok];
    }
    for (const auto& [tok, count] : doc_counts) {
      auto& s = stats[std::string(tok)];
      ++s.doc_freq;
      s.max_count = std::max(s.max_count, count);
    }
  }

  std::vector<VocabEntry> candidates;
  candidates.reserve(stats.size());
  for (const auto& [tok, s] : stats) {
    candidates.push_back({tok, s.doc_freq, s.max_count, tfidf_score(s, docs.size())});
  }
  warn_if_short(candidates.size(), top_n);
  const auto keep = std::min(top_n, candidates.size());
  auto by_rank = [](const VocabEntry& x, const VocabEntry& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.token < y.token;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), by_rank);
  candidates.resize(keep);
  return Vocabulary(std::move(candidates));
}

std::vector<Index> select_terms(std::span<const TermCounts> docs, std::size_t n_terms,
                                std::size_t top_n) {
  if (top_n == 0) throw ConfigError("vocabulary size must be at least 1");
  std::vector<TermStat> stats(n_terms);
  for (const auto& doc : docs) {
    for (const auto& [term, count] : doc) {
      if (term >= n_terms) throw BoundsError("term id " + std::to_string(term) + " out of range");
      if (count == 0) continue;
      ++stats[term].doc_freq;
      stats[term].max_count = std::max(stats[term].max_count, count);
    }
  }
  std::vector<std::pair<double, Index>> candidates;
  for (std::size_t t = 0; t < n_terms; ++t) {
    if (stats[t].doc_freq > 0) {
      candidates.emplace_back(tfidf_score(stats[t], docs.size()), static_cast<Index>(t));
    }
  }
  warn_if_short(candidates.size(), top_n);
  const auto keep = std::min(top_n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), [](const auto& x, const auto& y) {
                      if (x.first != y.first) return x.first > y.first;
                      return x.second < y.second;
                    });
  std::vector<Index> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(candidates[i].second);
  return out;
}

ContentMatrix build_bow(std::span<const Document> docs, const Vocabulary& vocab) {
  if (vocab.empty()) throw ConfigError("cannot build bag-of-words over an empty vocabulary");
  std::vector<std::vector<std::pair<Index, double>>> rows(docs.size());
  std::unordered_map<Index, double> counts;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    counts.clear();
    for (const auto& tok : docs[d]) {
      if (auto col = vocab.find(tok)) counts[*col] += 1.0;
    }
    rows[d].assign(counts.begin(), counts.end());
  }
  return ContentMatrix(max_normalize(docs.size(), vocab.size(), rows));
}

ContentMatrix bow_from_counts(std::span<const TermCounts> docs,
                              std::span<const Index> selected_terms) {
  if (selected_terms.empty()) {
    throw ConfigError("cannot build bag-of-words over an empty vocabulary");
  }
  std::unordered_map<Index, Index> column;
  for (std::size_t j = 0; j < selected_terms.size(); ++j) {
    column.emplace(selected_terms[j], static_cast<Index>(j));
  }
  std::vector<std::vector<std::pair<Index, double>>> rows(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::unordered_map<Index, double> merged;
    for (const auto& [term, count] : docs[d]) {
      if (auto it = column.find(term); it != column.end()) merged[it->second] += count;
    }
    rows[d].assign(merged.begin(), merged.end());
  }
  return ContentMatrix(max_normalize(docs.size(), selected_terms.size(), rows));
}

TagMatrix build_tag_matrix(std::size_t n_articles, std::span<const TagAssignment> assignments,
                           std::span<const Citation> citations,
                           std::size_t min_articles_per_tag) {
  Index max_tag = 0;
  for (const auto& a : assignments) {
    if (a.article >= n_articles) {
      throw BoundsError("tag assignment references article " + std::to_string(a.article) +
                        " but there are " + std::to_string(n_articles));
    }
    max_tag = std::max(max_tag, a.tag);
  }
  for (const auto& c : citations) {
    if (c.citing >= n_articles || c.cited >= n_articles) {
      throw BoundsError("citation (" + std::to_string(c.citing) + ", " +
                        std::to_string(c.cited) + ") references an unknown article");
    }
  }
  const std::size_t n_raw_tags = assignments.empty() ? 0 : std::size_t{max_tag} + 1;

  // Deduplicated assignment matrix over raw tag ids, then article support per tag.
  std::vector<IndexPair> raw;
  raw.reserve(assignments.size());
  for (const auto& a : assignments) raw.emplace_back(a.article, a.tag);
  const auto assigned = BinaryRows::from_pairs(n_articles, n_raw_tags, std::move(raw));
  const auto by_tag = assigned.transposed();

  std::vector<Index> kept;
  std::vector<std::int64_t> new_id(n_raw_tags, -1);
  for (std::size_t t = 0; t < n_raw_tags; ++t) {
    if (by_tag.row(t).size() >= std::max<std::size_t>(min_articles_per_tag, 1)) {
      new_id[t] = static_cast<std::int64_t>(kept.size());
      kept.push_back(static_cast<Index>(t));
    }
  }

  std::vector<IndexPair> filtered;
  for (const auto& [article, tag] : assigned.pairs()) {
    if (new_id[tag] >= 0) filtered.emplace_back(article, static_cast<Index>(new_id[tag]));
  }
  const auto original = BinaryRows::from_pairs(n_articles, kept.size(), filtered);

  // Propagation reads only the pre-propagation rows, so edge order is irrelevant
  // and chains do not propagate transitively.
  auto propagated = std::move(filtered);
  for (const auto& c : citations) {
    for (Index t : original.row(c.cited)) propagated.emplace_back(c.citing, t);
  }
  auto pattern = BinaryRows::from_pairs(n_articles, kept.size(), std::move(propagated));
  return TagMatrix(std::move(pattern), std::move(kept));
}

// ---------------------------------------------------------------------------
// Text file readers

namespace {

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a non-negative integer, got '" + std::string(tok) + "'", line_no);
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<std::vector<Index>> parse_count_prefixed(std::istream& in) {
  std::vector<std::vector<Index>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) throw ParseError("blank line", line_no);
    const auto count = parse_number<std::size_t>(toks[0], line_no);
    if (count != toks.size() - 1) {
      throw ParseError("declared " + std::to_string(count) + " ids but found " +
                           std::to_string(toks.size() - 1),
                       line_no);
    }
    std::vector<Index> ids;
    ids.reserve(count);
    for (std::size_t k = 1; k < toks.size(); ++k) ids.push_back(parse_number<Index>(toks[k], line_no));
    out.push_back(std::move(ids));
  }
  return out;
}

InteractionMatrix parse_interactions(std::istream& in, std::optional<std::size_t> n_articles) {
  const auto lists = parse_count_prefixed(in);
  if (lists.empty()) throw DataError("no users");
  std::vector<IndexPair> pairs;
  std::size_t inferred = 0;
  for (std::size_t u = 0; u < lists.size(); ++u) {
    for (Index j : lists[u]) {
      if (n_articles && j >= *n_articles) {
        throw BoundsError("line " + std::to_string(u + 1) + ": article " + std::to_string(j) +
                          " >= declared article count " + std::to_string(*n_articles));
      }
      inferred = std::max<std::size_t>(inferred, std::size_t{j} + 1);
      pairs.emplace_back(static_cast<Index>(u), j);
    }
  }
  return InteractionMatrix(lists.size(), n_articles.value_or(inferred), std::move(pairs));
}

InteractionMatrix load_interactions(const std::filesystem::path& path,
                                    std::optional<std::size_t> n_articles) {
  auto in = open_text(path);
  return parse_interactions(in, n_articles);
}

std::vector<TermCounts> parse_content_counts(std::istream& in) {
  std::vector<TermCounts> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) throw ParseError("blank line", line_no);
    const auto n = parse_number<std::size_t>(toks[0], line_no);
    if (n != toks.size() - 1) {
      throw ParseError("declared " + std::to_string(n) + " terms but found " +
                           std::to_string(toks.size() - 1),
                       line_no);
    }
    TermCounts row;
    row.reserve(n);
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto colon = toks[k].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError("expected term:count, got '" + std::string(toks[k]) + "'", line_no);
      }
      row.emplace_back(parse_number<Index>(toks[k].substr(0, colon), line_no),
                       parse_number<std::uint32_t>(toks[k].substr(colon + 1), line_no));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<TermCounts> load_content_counts(const std::filesystem::path& path) {
  auto in = open_text(path);
  return parse_content_counts(in);
}

std::vector<TagAssignment> load_tag_assignments(const std::filesystem::path& path) {
  auto in = open_text(path);
  const auto lists = parse_count_prefixed(in);
  std::vector<TagAssignment> out;
  for (std::size_t a = 0; a < lists.size(); ++a) {
    for (Index t : lists[a]) out.push_back({static_cast<Index>(a), t});
  }
  return out;
}

std::vector<Citation> load_citations(const std::filesystem::path& path, CitationFormat format) {
  auto in = open_text(path);
  std::vector<Citation> out;
  if (format == CitationFormat::kLists) {
    const auto lists = parse_count_prefixed(in);
    for (std::size_t x = 0; x < lists.size(); ++x) {
      for (Index y : lists[x]) out.push_back({static_cast<Index>(x), y});
    }
    return out;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw ParseError("expected 'citing cited'", line_no);
    out.push_back({parse_number<Index>(toks[0], line_no), parse_number<Index>(toks[1], line_no)});
  }
  return out;
}

namespace {

// RFC 4180 records: quoted fields may hold separators, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      field_started = false;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", records.size() + 1);
  if (field_started || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace

std::vector<std::string> load_documents(const std::filesystem::path& path, DocumentFormat format) {
  const auto text = io::read_file(path);
  std::vector<std::string> out;
  if (format == DocumentFormat::kText) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
  }
  const auto records = parse_csv(text);
  if (records.empty()) throw DataError("empty CSV document file " + path.string());
  const auto& header = records.front();
  auto column = [&](std::initializer_list<std::string_view> names) -> std::ptrdiff_t {
    for (auto name : names) {
      auto it = std::find(header.begin(), header.end(), name);
      if (it != header.end()) return it - header.begin();
    }
    return -1;
  };
  const auto title = column({"raw.title", "title"});
  const auto abstract = column({"raw.abstract", "abstract"});
  if (title < 0 && abstract < 0) {
    throw DataError("CSV document file has neither a title nor an abstract column");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    std::string doc;
    for (auto col : {title, abstract}) {
      if (col >= 0 && static_cast<std::size_t>(col) < rec.size()) {
        if (!doc.empty()) doc.push_back(' ');
        doc += rec[static_cast<std::size_t>(col)];
      }
    }
    out.push_back(std::move(doc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary caches

namespace {

constexpr std::string_view kMatrixMagic = "CATAMTRX";
constexpr std::uint8_t kMatrixVersion = 1;

enum class CacheKind : std::uint8_t { kInteractions = 1, kContent = 2, kTags = 3 };

void write_header(io::ByteWriter& w, CacheKind kind, std::size_t rows, std::size_t cols,
                  std::size_t nnz) {
  w.bytes(kMatrixMagic);
  w.u8(kMatrixVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u64(rows);
  w.u64(cols);
  w.u64(nnz);
}

void write_pattern(io::ByteWriter& w, CacheKind kind, const BinaryRows& m) {
  write_header(w, kind, m.rows(), m.cols(), m.nnz());
  std::uint64_t offset = 0;
  w.u64(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    offset += m.row(r).size();
    w.u64(offset);
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (Index c : m.row(r)) w.u32(c);
  }
}

struct RawCsr {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<Index> columns;
};

RawCsr read_csr(io::ByteReader& r, CacheKind expected) {
  if (r.remaining() < kMatrixMagic.size() || r.bytes(kMatrixMagic.size()) != kMatrixMagic) {
    throw DataError("not a matrix cache (bad magic)");
  }
  if (auto v = r.u8(); v != kMatrixVersion) {
    throw DataError("unsupported matrix cache version " + std::to_string(v));
  }
  if (auto k = r.u8(); k != static_cast<std::uint8_t>(expected)) {
    throw DataError("matrix cache holds kind " + std::to_string(k) + ", expected " +
                    std::to_string(static_cast<int>(expected)));
  }
  RawCsr out;
  out.rows = r.u64();
  out.cols = r.u64();
  const auto nnz = r.u64();
  if (out.rows >= r.remaining() / 8 || nnz > r.remaining() / 4) {
    throw DataError("matrix cache header exceeds file size");
  }
  out.offsets.resize(out.rows + 1);
  for (auto& o : out.offsets) o = r.u64();
  if (out.offsets.front() != 0 || out.offsets.back() != nnz ||
      !std::is_sorted(out.offsets.begin(), out.offsets.end())) {
    throw DataError("matrix cache has inconsistent row offsets");
  }
  out.columns.resize(nnz);
  for (auto& c : out.columns) {
    c = r.u32();
    if (c >= out.cols) throw DataError("matrix cache column out of range");
  }
  return out;
}

BinaryRows pattern_from(const RawCsr& csr) {
  std::vector<IndexPair> pairs;
  pairs.reserve(csr.columns.size());
  for (std::size_t row = 0; row < csr.rows; ++row) {
    for (auto k = csr.offsets[row]; k < csr.offsets[row + 1]; ++k) {
      pairs.emplace_back(static_cast<Index>(row), csr.columns[k]);
    }
  }
  auto out = BinaryRows::from_pairs(csr.rows, csr.cols, std::move(pairs));
  if (out.nnz() != csr.columns.size()) throw DataError("matrix cache has duplicate cells");
  return out;
}

}  // namespace

std::string serialize(const InteractionMatrix& m) {
  io::ByteWriter w;
  write_pattern(w, CacheKind::kInteractions, m.pattern());
  return w.data();
}

std::string serialize(const TagMatrix& m) {
  io::ByteWriter w;
  write_pattern(w, CacheKind::kTags, m.pattern());
  w.u64(m.original_tag_ids().size());
  for (Index t : m.original_tag_ids()) w.u32(t);
  return w.data();
}

std::string serialize(const ContentMatrix& m) {
  const auto& x = m.features();
  io::ByteWriter w;
  write_header(w, CacheKind::kContent, m.n_articles(), m.vocab_size(),
               static_cast<std::size_t>(x.nonZeros()));
  std::uint64_t offset = 0;
  w.u64(0);
  for (Eigen::Index r = 0; r < x.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(x, r); it; ++it) ++offset;
    w.u64(offset);
  }
  for (Eigen::Index r = 0; r < x.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(x, r); it; ++it) w.u32(static_cast<Index>(it.col()));
  }
  for (Eigen::Index r = 0; r < x.outerSize(); ++r) {
    for (SparseRows::InnerIterator it(x, r); it; ++it) w.f64(it.value());
  }
  return w.data();
}

InteractionMatrix deserialize_interactions(std::string_view bytes) {
  io::ByteReader r(bytes);
  auto csr = read_csr(r, CacheKind::kInteractions);
  if (!r.at_end()) throw DataError("trailing bytes after interaction cache");
  return InteractionMatrix(pattern_from(csr));
}

TagMatrix deserialize_tags(std::string_view bytes) {
  io::ByteReader r(bytes);
  auto csr = read_csr(r, CacheKind::kTags);
  const auto n = r.u64();
  if (n != csr.cols) throw DataError("tag cache id map does not match width");
  std::vector<Index> ids(n);
  for (auto& t : ids) t = r.u32();
  if (!r.at_end()) throw DataError("trailing bytes after tag cache");
  return TagMatrix(pattern_from(csr), std::move(ids));
}

ContentMatrix deserialize_content(std::string_view bytes) {
  io::ByteReader r(bytes);
  auto csr = read_csr(r, CacheKind::kContent);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(csr.columns.size());
  for (std::size_t row = 0; row < csr.rows; ++row) {
    for (auto k = csr.offsets[row]; k < csr.offsets[row + 1]; ++k) {
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(csr.columns[k]), 0.0);
    }
  }
  for (auto& t : triplets) t = Eigen::Triplet<double>(t.row(), t.col(), r.f64());
  if (!r.at_end()) throw DataError("trailing bytes after content cache");
  SparseRows x(static_cast<Eigen::Index>(csr.rows), static_cast<Eigen::Index>(csr.cols));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return ContentMatrix(std::move(x));
}

}  // namespace cata::corpus

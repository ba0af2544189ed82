#include "toxdet/embedding.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "toxdet/error.hpp"

namespace toxdet {

namespace {

std::vector<std::string_view> splitSpaces(std::string_view line) {
  std::vector<std::string_view> out;
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

double parseDouble(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError(where + ": bad float '" + std::string(s) + "'");
  }
  return v;
}

bool looksLikeHeader(const std::vector<std::string_view>& fields) {
  if (fields.size() != 2) return false;
  long a = 0, b = 0;
  auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), a);
  auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), b);
  return r1.ec == std::errc{} && r1.ptr == fields[0].data() + fields[0].size() &&
         r2.ec == std::errc{} && r2.ptr == fields[1].data() + fields[1].size() &&
         a > 0 && b > 0;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(std::istream& in,
                                    std::string_view source_name) {
  const std::string src(source_name);
  std::vector<std::pair<std::string, Eigen::VectorXd>> rows;
  std::string line;
  long line_no = 0;
  int dim = -1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = splitSpaces(line);
    if (first) {
      first = false;
      if (looksLikeHeader(fields)) continue;  // "count dim" header, advisory
    }
    if (fields.size() < 2) {
      throw FormatError(src + ":" + std::to_string(line_no) +
                        ": expected token followed by vector components");
    }
    const int row_dim = static_cast<int>(fields.size()) - 1;
    if (dim < 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw FormatError(src + ":" + std::to_string(line_no) + ": row has " +
                        std::to_string(row_dim) + " components, expected " +
                        std::to_string(dim));
    }
    Eigen::VectorXd v(dim);
    const std::string where = src + ":" + std::to_string(line_no);
    for (int j = 0; j < dim; ++j) {
      v[j] = parseDouble(fields[static_cast<size_t>(j) + 1], where);
    }
    rows.emplace_back(std::string(fields[0]), std::move(v));
  }
  if (rows.empty()) {
    throw FormatError(src + ": no embedding rows");
  }
  return fromRows(rows);
}

EmbeddingTable EmbeddingTable::fromRows(
    const std::vector<std::pair<std::string, Eigen::VectorXd>>& rows) {
  EmbeddingTable table;
  if (rows.empty()) {
    throw RangeError("EmbeddingTable: empty row set");
  }
  const int dim = static_cast<int>(rows.front().second.size());
  // Stable row ids in first-seen order; a repeated token keeps its row and
  // the later vector overwrites (last wins), counted for diagnostics.
  long next = 0;
  for (const auto& [token, vec] : rows) {
    if (static_cast<int>(vec.size()) != dim) {
      throw FormatError("EmbeddingTable: inconsistent vector length for '" +
                        token + "'");
    }
    auto [it, inserted] = table.index_.emplace(token, next);
    if (inserted) {
      ++next;
    } else {
      ++table.duplicates_;
    }
  }
  table.vectors_.resize(next, dim);
  for (const auto& [token, vec] : rows) {
    table.vectors_.row(table.index_.at(token)) = vec.transpose();
  }
  table.oov_ = table.vectors_.colwise().mean().transpose();
  return table;
}

std::optional<long> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingTable::vectorOf(std::string_view token) const {
  auto row = find(token);
  if (!row) {
    throw LookupError("token '" + std::string(token) + "' not in table");
  }
  return vectors_.row(*row).transpose();
}

Eigen::VectorXd subwordVector(std::string_view word, const SubwordModel& model) {
  if (auto row = model.words.find(word)) {
    return model.words.matrix().row(*row).transpose();
  }
  const std::string framed = "<" + std::string(word) + ">";
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.ngrams.dim());
  long known = 0;
  for (int n = model.min_ngram; n <= model.max_ngram; ++n) {
    if (static_cast<size_t>(n) > framed.size()) break;
    for (size_t i = 0; i + static_cast<size_t>(n) <= framed.size(); ++i) {
      std::string_view gram(framed.data() + i, static_cast<size_t>(n));
      if (auto row = model.ngrams.find(gram)) {
        sum += model.ngrams.matrix().row(*row).transpose();
        ++known;
      }
    }
  }
  if (known == 0) {
    ++model.zero_fallbacks;
    return Eigen::VectorXd::Zero(model.ngrams.dim());
  }
  return sum / static_cast<double>(known);
}

ContextualStore ContextualStore::load(std::istream& in,
                                      std::string_view source_name) {
  const std::string src(source_name);
  ContextualStore store;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto header = splitSpaces(line);
    if (header.size() != 3) {
      throw FormatError(src + ":" + std::to_string(line_no) +
                        ": expected 'comment_id n_tokens dim'");
    }
    const std::string where = src + ":" + std::to_string(line_no);
    // copy out: the views point into `line`, which the row loop reuses
    const std::string comment_id(header[0]);
    long n_tokens = static_cast<long>(parseDouble(header[1], where));
    int dim = static_cast<int>(parseDouble(header[2], where));
    if (n_tokens < 0 || dim < 1) {
      throw FormatError(where + ": bad entry header");
    }
    Entry entry;
    entry.pieces.reserve(static_cast<size_t>(n_tokens));
    entry.vectors.resize(n_tokens, dim);
    for (long t = 0; t < n_tokens; ++t) {
      if (!std::getline(in, line)) {
        throw FormatError(src + ": truncated entry for comment '" +
                          comment_id + "'");
      }
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto fields = splitSpaces(line);
      if (static_cast<int>(fields.size()) != dim + 1) {
        throw FormatError(src + ":" + std::to_string(line_no) +
                          ": token row width mismatch");
      }
      entry.pieces.emplace_back(fields[0]);
      for (int j = 0; j < dim; ++j) {
        entry.vectors(t, j) = parseDouble(fields[static_cast<size_t>(j) + 1],
                                          src + ":" + std::to_string(line_no));
      }
    }
    store.put(comment_id, std::move(entry));
  }
  return store;
}

void ContextualStore::save(std::ostream& out) const {
  for (const auto& id : order_) {
    const Entry& e = entries_.at(id);
    out << id << ' ' << e.pieces.size() << ' ' << dim_ << '\n';
    for (size_t t = 0; t < e.pieces.size(); ++t) {
      out << e.pieces[t];
      for (int j = 0; j < dim_; ++j) {
        std::ostringstream num;
        num.precision(17);
        num << e.vectors(static_cast<long>(t), j);
        out << ' ' << num.str();
      }
      out << '\n';
    }
  }
}

void ContextualStore::put(std::string comment_id, Entry entry) {
  if (comment_id.find_first_of(" \t\n") != std::string::npos) {
    throw FormatError("contextual store: comment_id '" + comment_id +
                      "' contains whitespace");
  }
  if (entry.vectors.rows() != static_cast<long>(entry.pieces.size())) {
    throw AlignmentError("contextual store: piece/vector count mismatch for '" +
                         comment_id + "'");
  }
  if (dim_ == 0) {
    dim_ = static_cast<int>(entry.vectors.cols());
  } else if (entry.vectors.cols() != dim_ && entry.vectors.rows() > 0) {
    throw FormatError("contextual store: dim mismatch for '" + comment_id + "'");
  }
  auto [it, inserted] = entries_.emplace(std::move(comment_id), std::move(entry));
  if (!inserted) {
    throw IntegrityError("contextual store: duplicate comment_id '" + it->first +
                         "'");
  }
  order_.push_back(it->first);
}

const ContextualStore::Entry& ContextualStore::at(
    std::string_view comment_id) const {
  auto it = entries_.find(std::string(comment_id));
  if (it == entries_.end()) {
    throw LookupError("contextual store has no entry for comment '" +
                      std::string(comment_id) + "'");
  }
  return it->second;
}

bool ContextualStore::contains(std::string_view comment_id) const {
  return entries_.find(std::string(comment_id)) != entries_.end();
}

Eigen::MatrixXd averageWordpieces(const Eigen::MatrixXd& piece_matrix,
                                  std::span<const int> boundaries) {
  if (static_cast<long>(boundaries.size()) != piece_matrix.rows()) {
    throw AlignmentError("averageWordpieces: boundary list covers " +
                         std::to_string(boundaries.size()) + " rows, matrix has " +
                         std::to_string(piece_matrix.rows()));
  }
  if (boundaries.empty()) {
    return Eigen::MatrixXd(0, piece_matrix.cols());
  }
  int prev = -1;
  for (int b : boundaries) {
    if (b < 0 || b < prev || b > prev + 1) {
      throw AlignmentError("averageWordpieces: boundary indices must be "
                           "nondecreasing without gaps");
    }
    prev = b;
  }
  const int n_words = prev + 1;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_words, piece_matrix.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_words);
  for (long i = 0; i < piece_matrix.rows(); ++i) {
    out.row(boundaries[static_cast<size_t>(i)]) += piece_matrix.row(i);
    counts[boundaries[static_cast<size_t>(i)]] += 1.0;
  }
  out.array().colwise() /= counts.array();
  return out;
}

StaticProvider::StaticProvider(std::shared_ptr<const EmbeddingTable> table)
    : table_(std::move(table)) {}

int StaticProvider::dim() const { return table_->dim(); }

namespace {

// Word-aligned providers embed the source words when the sequence was
// word-piece split, otherwise the tokens themselves.
std::span<const std::string> wordRows(const TokenSequence& seq) {
  if (seq.words) return *seq.words;
  return seq.tokens;
}

}  // namespace

Eigen::MatrixXd StaticProvider::embed(const TokenSequence& seq) const {
  auto rows = wordRows(seq);
  Eigen::MatrixXd out(static_cast<long>(rows.size()), table_->dim());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (auto row = table_->find(rows[i])) {
      out.row(static_cast<long>(i)) = table_->matrix().row(*row);
    } else {
      out.row(static_cast<long>(i)) = table_->oovVector().transpose();
    }
  }
  return out;
}

SubwordProvider::SubwordProvider(std::shared_ptr<const SubwordModel> model)
    : model_(std::move(model)) {}

int SubwordProvider::dim() const { return model_->words.dim(); }

Eigen::MatrixXd SubwordProvider::embed(const TokenSequence& seq) const {
  auto rows = wordRows(seq);
  Eigen::MatrixXd out(static_cast<long>(rows.size()), dim());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<long>(i)) = subwordVector(rows[i], *model_).transpose();
  }
  return out;
}

ContextualProvider::ContextualProvider(
    std::shared_ptr<const ContextualStore> store, bool word_level)
    : store_(std::move(store)), word_level_(word_level) {}

int ContextualProvider::dim() const { return store_->dim(); }

Eigen::MatrixXd ContextualProvider::embed(const TokenSequence& seq) const {
  const auto& entry = store_->at(seq.comment_id);
  if (entry.pieces != seq.tokens) {
    throw IntegrityError("contextual store entry for comment '" +
                         seq.comment_id +
                         "' does not match the sequence tokens");
  }
  if (!word_level_) {
    return entry.vectors;
  }
  if (!seq.word_boundaries) {
    throw AlignmentError("word-level contextual provider needs word boundaries "
                         "for comment '" + seq.comment_id + "'");
  }
  return averageWordpieces(entry.vectors, *seq.word_boundaries);
}

ConcatProvider::ConcatProvider(
    std::vector<std::shared_ptr<const RepresentationProvider>> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) {
    throw ConfigError("concat provider needs at least one part");
  }
  for (const auto& p : parts_) dim_ += p->dim();
}

std::string ConcatProvider::name() const {
  std::string out = "concat(";
  for (size_t i = 0; i < parts_.size(); ++i) {
    if (i) out += '+';
    out += parts_[i]->name();
  }
  out += ')';
  return out;
}

bool ConcatProvider::wordAligned() const {
  for (const auto& p : parts_) {
    if (!p->wordAligned()) return false;
  }
  return true;
}

Eigen::MatrixXd ConcatProvider::embed(const TokenSequence& seq) const {
  Eigen::MatrixXd out;
  long rows = -1;
  int col = 0;
  for (const auto& p : parts_) {
    Eigen::MatrixXd part = p->embed(seq);
    if (rows < 0) {
      rows = part.rows();
      out.resize(rows, dim_);
    } else if (part.rows() != rows) {
      throw AlignmentError("concat provider: part '" + p->name() + "' produced " +
                           std::to_string(part.rows()) + " rows, expected " +
                           std::to_string(rows));
    }
    out.middleCols(col, p->dim()) = part;
    col += p->dim();
  }
  return out;
}

std::shared_ptr<const ConcatProvider> concatProviders(
    std::shared_ptr<const RepresentationProvider> a,
    std::shared_ptr<const RepresentationProvider> b) {
  std::vector<std::shared_ptr<const RepresentationProvider>> parts;
  parts.push_back(std::move(a));
  parts.push_back(std::move(b));
  return std::make_shared<const ConcatProvider>(std::move(parts));
}

}  // namespace toxdet

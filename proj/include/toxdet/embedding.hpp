#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toxdet/preprocess.hpp"

namespace toxdet {

// Pretrained token -> vector table loaded from the text interchange format:
// an optional "count dim" header line, then "token v1 ... v_dim" rows.
class EmbeddingTable {
 public:
  static EmbeddingTable load(std::istream& in,
                             std::string_view source_name = "<stream>");
  static EmbeddingTable fromRows(
      const std::vector<std::pair<std::string, Eigen::VectorXd>>& rows);

  int dim() const { return static_cast<int>(vectors_.cols()); }
  long size() const { return vectors_.rows(); }
  long duplicateCount() const { return duplicates_; }

  // Row index of a token, if stored.
  std::optional<long> find(std::string_view token) const;
  Eigen::VectorXd vectorOf(std::string_view token) const;  // throws LookupError
  const Eigen::MatrixXd& matrix() const { return vectors_; }

  // Componentwise mean over every stored vector; computed at construction so
  // concurrent lookups never write shared state.
  const Eigen::VectorXd& oovVector() const { return oov_; }

 private:
  std::unordered_map<std::string, long> index_;
  Eigen::MatrixXd vectors_;  // one row per token
  long duplicates_ = 0;
  Eigen::VectorXd oov_;
};

// fastText-style model: a word table plus a character n-gram table with an
// inclusive n-gram length range. OOV words fall back to the mean vector of
// their known n-grams (word framed with '<' and '>').
struct SubwordModel {
  EmbeddingTable words;
  EmbeddingTable ngrams;
  int min_ngram = 3;
  int max_ngram = 6;
  mutable std::atomic<long> zero_fallbacks{0};  // words with no known n-gram
};

Eigen::VectorXd subwordVector(std::string_view word, const SubwordModel& model);

// Precomputed contextual word-piece vectors, keyed by comment id. Produced by
// an external encoder export (see the export-contextual command); this store
// is the source of truth, vectors are never recomputed.
class ContextualStore {
 public:
  struct Entry {
    std::vector<std::string> pieces;
    Eigen::MatrixXd vectors;  // pieces.size() rows
  };

  static ContextualStore load(std::istream& in,
                              std::string_view source_name = "<stream>");
  void save(std::ostream& out) const;

  void put(std::string comment_id, Entry entry);
  const Entry& at(std::string_view comment_id) const;  // throws LookupError
  bool contains(std::string_view comment_id) const;
  int dim() const { return dim_; }
  size_t size() const { return entries_.size(); }
  const std::vector<std::string>& order() const { return order_; }

 private:
  std::unordered_map<std::string, Entry> entries_;
  std::vector<std::string> order_;  // insertion order, for stable save
  int dim_ = 0;
};

// Mean of piece rows per source word. boundaries[i] is the word index of
// piece row i; it must start at 0, be nondecreasing, and have no gaps.
Eigen::MatrixXd averageWordpieces(const Eigen::MatrixXd& piece_matrix,
                                  std::span<const int> boundaries);

enum class ProviderKind { onehot_index, static_table, subword, contextual, concat };

// Maps a TokenSequence to one vector per row; which rows (words or pieces)
// depends on the provider. Providers are immutable after construction.
class RepresentationProvider {
 public:
  virtual ~RepresentationProvider() = default;
  virtual ProviderKind kind() const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  // True when output rows align 1:1 with source words (vs word-pieces).
  virtual bool wordAligned() const = 0;
  virtual Eigen::MatrixXd embed(const TokenSequence& seq) const = 0;
};

// Static word vectors with the global OOV-mean substitute.
class StaticProvider : public RepresentationProvider {
 public:
  explicit StaticProvider(std::shared_ptr<const EmbeddingTable> table);
  ProviderKind kind() const override { return ProviderKind::static_table; }
  int dim() const override;
  std::string name() const override { return "static"; }
  bool wordAligned() const override { return true; }
  Eigen::MatrixXd embed(const TokenSequence& seq) const override;

 private:
  std::shared_ptr<const EmbeddingTable> table_;
};

class SubwordProvider : public RepresentationProvider {
 public:
  explicit SubwordProvider(std::shared_ptr<const SubwordModel> model);
  ProviderKind kind() const override { return ProviderKind::subword; }
  int dim() const override;
  std::string name() const override { return "subword"; }
  bool wordAligned() const override { return true; }
  Eigen::MatrixXd embed(const TokenSequence& seq) const override;

 private:
  std::shared_ptr<const SubwordModel> model_;
};

// File-backed contextual vectors; either raw piece rows or rows averaged
// per word when word_level is set.
class ContextualProvider : public RepresentationProvider {
 public:
  ContextualProvider(std::shared_ptr<const ContextualStore> store,
                     bool word_level);
  ProviderKind kind() const override { return ProviderKind::contextual; }
  int dim() const override;
  std::string name() const override {
    return word_level_ ? "contextual-word" : "contextual";
  }
  bool wordAligned() const override { return word_level_; }
  Eigen::MatrixXd embed(const TokenSequence& seq) const override;

 private:
  std::shared_ptr<const ContextualStore> store_;
  bool word_level_;
};

// Rowwise concatenation of constituent outputs; all parts must produce the
// same row count for a sequence.
class ConcatProvider : public RepresentationProvider {
 public:
  explicit ConcatProvider(
      std::vector<std::shared_ptr<const RepresentationProvider>> parts);
  ProviderKind kind() const override { return ProviderKind::concat; }
  int dim() const override { return dim_; }
  std::string name() const override;
  bool wordAligned() const override;
  Eigen::MatrixXd embed(const TokenSequence& seq) const override;

  const std::vector<std::shared_ptr<const RepresentationProvider>>& parts() const {
    return parts_;
  }

 private:
  std::vector<std::shared_ptr<const RepresentationProvider>> parts_;
  int dim_ = 0;
};

std::shared_ptr<const ConcatProvider> concatProviders(
    std::shared_ptr<const RepresentationProvider> a,
    std::shared_ptr<const RepresentationProvider> b);

}  // namespace toxdet

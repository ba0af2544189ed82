#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace toxdet {

struct TokenSequence;

// Frequency vocabulary for the one-hot input path. Index 0 and 1 are the
// reserved padding / unknown symbols; corpus tokens start at 2 and are
// ordered by descending frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr int kUnkIndex = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::pair<std::string, long>> entries);

  // Index for a token; OOV maps to kUnkIndex.
  int indexOf(std::string_view token) const;
  // Token for an index (reserved symbols included). Throws RangeError.
  const std::string& tokenAt(int index) const;

  // Total table size including the two reserved ids.
  int size() const { return static_cast<int>(entries_.size()) + 2; }
  const std::vector<std::pair<std::string, long>>& entries() const {
    return entries_;
  }

  void save(std::ostream& out) const;  // token<TAB>frequency, rank order
  static Vocabulary load(std::istream& in,
                         std::string_view source_name = "<stream>");

 private:
  std::vector<std::pair<std::string, long>> entries_;
  std::unordered_map<std::string, int> index_;
  mutable std::string reserved_cache_[2] = {std::string(kPadToken),
                                            std::string(kUnkToken)};
};

// Top-N tokens of the training sequences. Deterministic for a fixed corpus.
Vocabulary buildVocab(std::span<const TokenSequence> training_sequences,
                      int top_n);

std::vector<int> encodeTokens(std::span<const std::string> tokens,
                              const Vocabulary& vocab);
std::vector<std::string> decodeTokens(std::span<const int> indices,
                                      const Vocabulary& vocab);

// Fixed word-piece inventory in the public pretrained format: one piece per
// line, line number = id. Non-initial pieces carry the "##" marker.
struct WordPieceVocab {
  std::vector<std::string> pieces;             // id = position
  std::unordered_map<std::string, int> piece_ids;
  std::string continuation = "##";
  std::string unknown = "[UNK]";
  int max_chars_per_word = 100;

  bool contains(std::string_view piece) const {
    return piece_ids.find(std::string(piece)) != piece_ids.end();
  }
  int idOf(std::string_view piece) const;  // throws LookupError

  static WordPieceVocab load(std::istream& in,
                             std::string_view source_name = "<stream>");
  static WordPieceVocab fromPieces(std::vector<std::string> pieces);
};

// Greedy longest-match-first split of one word. Returns [unknown] when some
// position has no matching piece (or the word exceeds max_chars_per_word).
std::vector<std::string> wordpieceTokenize(std::string_view word,
                                           const WordPieceVocab& vocab);

// Inverse of a tokenization that contains no unknown symbol: strips the
// continuation markers and concatenates.
std::string joinWordpieces(std::span<const std::string> pieces,
                           const WordPieceVocab& vocab);

}  // namespace toxdet

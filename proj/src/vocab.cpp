#include "toxdet/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>

#include "toxdet/error.hpp"
#include "toxdet/preprocess.hpp"

namespace toxdet {

Vocabulary::Vocabulary(std::vector<std::pair<std::string, long>> entries)
    : entries_(std::move(entries)) {
  index_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& token = entries_[i].first;
    if (token == kPadToken || token == kUnkToken) {
      throw IntegrityError("vocabulary entry collides with reserved symbol '" +
                           token + "'");
    }
    if (!index_.emplace(token, static_cast<int>(i) + 2).second) {
      throw IntegrityError("duplicate vocabulary token '" + token + "'");
    }
  }
}

int Vocabulary::indexOf(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkIndex : it->second;
}

const std::string& Vocabulary::tokenAt(int index) const {
  if (index == kPadIndex) return reserved_cache_[0];
  if (index == kUnkIndex) return reserved_cache_[1];
  int i = index - 2;
  if (i < 0 || i >= static_cast<int>(entries_.size())) {
    throw RangeError("vocabulary index " + std::to_string(index) +
                     " out of range");
  }
  return entries_[static_cast<size_t>(i)].first;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& [token, freq] : entries_) {
    out << token << '\t' << freq << '\n';
  }
}

Vocabulary Vocabulary::load(std::istream& in, std::string_view source_name) {
  std::vector<std::pair<std::string, long>> entries;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(std::string(source_name) + ":" +
                        std::to_string(line_no) +
                        ": expected token<TAB>frequency");
    }
    long freq = 0;
    const char* begin = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    auto res = std::from_chars(begin, end, freq);
    if (res.ec != std::errc{} || res.ptr != end) {
      throw FormatError(std::string(source_name) + ":" +
                        std::to_string(line_no) + ": bad frequency field");
    }
    entries.emplace_back(line.substr(0, tab), freq);
  }
  return Vocabulary(std::move(entries));
}

Vocabulary buildVocab(std::span<const TokenSequence> training_sequences,
                      int top_n) {
  if (top_n < 1) {
    throw ConfigError("top_n must be >= 1, got " + std::to_string(top_n));
  }
  if (training_sequences.empty()) {
    throw RangeError("buildVocab: empty training set");
  }
  std::unordered_map<std::string, long> counts;
  for (const auto& seq : training_sequences) {
    for (const auto& token : seq.tokens) {
      if (token == Vocabulary::kPadToken || token == Vocabulary::kUnkToken) {
        continue;  // reserved symbols never enter the table
      }
      ++counts[token];
    }
  }
  std::vector<std::pair<std::string, long>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (entries.size() > static_cast<size_t>(top_n)) {
    entries.resize(static_cast<size_t>(top_n));
  }
  return Vocabulary(std::move(entries));
}

std::vector<int> encodeTokens(std::span<const std::string> tokens,
                              const Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab.indexOf(t));
  return out;
}

std::vector<std::string> decodeTokens(std::span<const int> indices,
                                      const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(vocab.tokenAt(i));
  return out;
}

int WordPieceVocab::idOf(std::string_view piece) const {
  auto it = piece_ids.find(std::string(piece));
  if (it == piece_ids.end()) {
    throw LookupError("word-piece '" + std::string(piece) + "' not in vocab");
  }
  return it->second;
}

WordPieceVocab WordPieceVocab::fromPieces(std::vector<std::string> pieces) {
  WordPieceVocab v;
  v.pieces = std::move(pieces);
  v.piece_ids.reserve(v.pieces.size());
  for (size_t i = 0; i < v.pieces.size(); ++i) {
    v.piece_ids.emplace(v.pieces[i], static_cast<int>(i));
  }
  return v;
}

WordPieceVocab WordPieceVocab::load(std::istream& in,
                                    std::string_view source_name) {
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    pieces.push_back(line);
  }
  if (pieces.empty()) {
    throw FormatError(std::string(source_name) + ": empty word-piece vocab");
  }
  return fromPieces(std::move(pieces));
}

std::vector<std::string> wordpieceTokenize(std::string_view word,
                                           const WordPieceVocab& vocab) {
  if (word.empty()) {
    throw RangeError("wordpieceTokenize: empty word");
  }
  if (word.size() > static_cast<size_t>(vocab.max_chars_per_word)) {
    return {vocab.unknown};
  }
  std::vector<std::string> pieces;
  size_t start = 0;
  while (start < word.size()) {
    size_t end = word.size();
    std::string match;
    while (start < end) {
      std::string candidate;
      if (start > 0) candidate = vocab.continuation;
      candidate.append(word.substr(start, end - start));
      if (vocab.contains(candidate)) {
        match = std::move(candidate);
        break;
      }
      --end;
    }
    if (match.empty()) {
      return {vocab.unknown};
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  return pieces;
}

std::string joinWordpieces(std::span<const std::string> pieces,
                           const WordPieceVocab& vocab) {
  std::string word;
  for (const auto& piece : pieces) {
    if (piece == vocab.unknown) {
      throw RangeError("joinWordpieces: tokenization contains the unknown symbol");
    }
    std::string_view view = piece;
    if (view.size() >= vocab.continuation.size() &&
        view.substr(0, vocab.continuation.size()) == vocab.continuation &&
        !word.empty()) {
      view.remove_prefix(vocab.continuation.size());
    }
    word.append(view);
  }
  return word;
}

}  // namespace toxdet

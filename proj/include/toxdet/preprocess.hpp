#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toxdet/corpus.hpp"

namespace toxdet {

enum class TokenMode {
  word_nopunct,         // lowercase, punctuation replaced by spaces
  wordpiece_keep_punct  // lowercase, punctuation preserved
};

std::string_view tokenModeName(TokenMode m);
TokenMode tokenModeFromName(std::string_view name);

struct PreprocessConfig {
  TokenMode mode = TokenMode::word_nopunct;
  bool lowercase = true;
  int max_words = 200;
};

// Preprocessed token list. In word-piece mode, `tokens` are pieces and
// `word_boundaries[i]` is the source-word index of piece i (nondecreasing);
// `words` keeps the whitespace words the pieces came from, for word-aligned
// representation providers.
struct TokenSequence {
  std::string comment_id;
  std::vector<std::string> tokens;
  std::optional<std::vector<int>> word_boundaries;
  std::optional<std::vector<std::string>> words;

  int wordCount() const {
    if (words) return static_cast<int>(words->size());
    return static_cast<int>(tokens.size());
  }
};

// The frozen punctuation class used in word_nopunct mode: every ASCII
// punctuation/symbol character plus the common non-ASCII punctuation that
// shows up attached to words in web text. Codepoints not listed pass through.
bool isPunctuationCodepoint(uint32_t cp);

std::string normalizeText(std::string_view text, const PreprocessConfig& config);

// Maximal runs of non-whitespace bytes (space, \t, \n, \r, \f, \v separate).
std::vector<std::string> tokenizeWords(std::string_view text);

// First min(size, max_words) tokens. Idempotent.
std::vector<std::string> truncateTokens(std::vector<std::string> tokens,
                                        int max_words);

// Removes training-split comments that are toxic and longer than max_words
// (word count measured on normalized word tokens, before truncation).
// Dev/test splits and nontoxic training comments pass through untouched.
LabeledDataset filterTraining(const LabeledDataset& dataset, int max_words);

struct WordPieceVocab;  // vocab.hpp

// normalize -> tokenize -> truncate for one comment. When `wp` is given and
// the mode keeps punctuation, words are further split into word-pieces and
// boundaries recorded; truncation applies to words before piece splitting.
TokenSequence preprocessComment(const LabeledComment& comment,
                                const PreprocessConfig& config,
                                const WordPieceVocab* wp = nullptr);

}  // namespace toxdet

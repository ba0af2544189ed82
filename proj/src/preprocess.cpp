#include "toxdet/preprocess.hpp"

#include <algorithm>
#include <cstdint>

#include "toxdet/error.hpp"
#include "toxdet/vocab.hpp"

namespace toxdet {

std::string_view tokenModeName(TokenMode m) {
  return m == TokenMode::word_nopunct ? "word_nopunct" : "wordpiece_keep_punct";
}

TokenMode tokenModeFromName(std::string_view name) {
  if (name == "word_nopunct") return TokenMode::word_nopunct;
  if (name == "wordpiece_keep_punct") return TokenMode::wordpiece_keep_punct;
  throw ConfigError("unknown token mode '" + std::string(name) + "'");
}

namespace {

// Decodes the UTF-8 sequence starting at text[i]; advances i.
// Malformed bytes are returned one at a time so they pass through untouched.
uint32_t nextCodepoint(std::string_view text, size_t& i) {
  const auto byte = [&](size_t k) -> uint32_t {
    return static_cast<unsigned char>(text[k]);
  };
  uint32_t b0 = byte(i);
  auto continuation = [&](size_t k) {
    return k < text.size() && (byte(k) & 0xC0u) == 0x80u;
  };
  if (b0 < 0x80u) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0u) == 0xC0u && continuation(i + 1)) {
    uint32_t cp = ((b0 & 0x1Fu) << 6) | (byte(i + 1) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0u) == 0xE0u && continuation(i + 1) && continuation(i + 2)) {
    uint32_t cp = ((b0 & 0x0Fu) << 12) | ((byte(i + 1) & 0x3Fu) << 6) |
                  (byte(i + 2) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8u) == 0xF0u && continuation(i + 1) && continuation(i + 2) &&
      continuation(i + 3)) {
    uint32_t cp = ((b0 & 0x07u) << 18) | ((byte(i + 1) & 0x3Fu) << 12) |
                  ((byte(i + 2) & 0x3Fu) << 6) | (byte(i + 3) & 0x3Fu);
    i += 4;
    return cp;
  }
  ++i;
  return b0;  // stray byte, passed through as-is
}

void appendCodepoint(std::string& out, uint32_t cp) {
  if (cp < 0x80u) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800u) {
    out += static_cast<char>(0xC0u | (cp >> 6));
    out += static_cast<char>(0x80u | (cp & 0x3Fu));
  } else if (cp < 0x10000u) {
    out += static_cast<char>(0xE0u | (cp >> 12));
    out += static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu));
    out += static_cast<char>(0x80u | (cp & 0x3Fu));
  } else {
    out += static_cast<char>(0xF0u | (cp >> 18));
    out += static_cast<char>(0x80u | ((cp >> 12) & 0x3Fu));
    out += static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu));
    out += static_cast<char>(0x80u | (cp & 0x3Fu));
  }
}

uint32_t lowerCodepoint(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  // Latin-1 capitals, skipping the multiplication sign.
  if (cp >= 0xC0u && cp <= 0xDEu && cp != 0xD7u) return cp + 32;
  return cp;
}

}  // namespace

bool isPunctuationCodepoint(uint32_t cp) {
  // ASCII punctuation and symbols.
  if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
      (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E)) {
    return true;
  }
  // General Punctuation block (dashes, curly quotes, ellipsis, bullets...).
  if (cp >= 0x2010 && cp <= 0x205E) return true;
  switch (cp) {
    case 0xA1:    // inverted exclamation
    case 0xA6:    // broken bar
    case 0xA7:    // section sign
    case 0xAB:    // left guillemet
    case 0xB6:    // pilcrow
    case 0xB7:    // middle dot
    case 0xBB:    // right guillemet
    case 0xBF:    // inverted question mark
    case 0x3001:  // ideographic comma
    case 0x3002:  // ideographic full stop
    case 0xFF01:  // fullwidth !
    case 0xFF0C:  // fullwidth ,
    case 0xFF0E:  // fullwidth .
    case 0xFF1A:  // fullwidth :
    case 0xFF1B:  // fullwidth ;
    case 0xFF1F:  // fullwidth ?
      return true;
    default:
      return false;
  }
}

std::string normalizeText(std::string_view text, const PreprocessConfig& config) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    uint32_t cp = nextCodepoint(text, i);
    if (config.lowercase) cp = lowerCodepoint(cp);
    if (config.mode == TokenMode::word_nopunct && isPunctuationCodepoint(cp)) {
      out += ' ';
    } else {
      appendCodepoint(out, cp);
    }
  }
  return out;
}

std::vector<std::string> tokenizeWords(std::string_view text) {
  constexpr std::string_view kWhitespace = " \t\n\r\f\v";
  std::vector<std::string> tokens;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t start = text.find_first_not_of(kWhitespace, pos);
    if (start == std::string_view::npos) break;
    size_t end = text.find_first_of(kWhitespace, start);
    if (end == std::string_view::npos) end = text.size();
    tokens.emplace_back(text.substr(start, end - start));
    pos = end;
  }
  return tokens;
}

std::vector<std::string> truncateTokens(std::vector<std::string> tokens,
                                        int max_words) {
  if (max_words < 1) {
    throw ConfigError("max_words must be >= 1, got " + std::to_string(max_words));
  }
  if (tokens.size() > static_cast<size_t>(max_words)) {
    tokens.resize(static_cast<size_t>(max_words));
  }
  return tokens;
}

LabeledDataset filterTraining(const LabeledDataset& dataset, int max_words) {
  PreprocessConfig word_config;
  word_config.mode = TokenMode::word_nopunct;
  word_config.max_words = max_words;

  LabeledDataset out;
  out.comments.reserve(dataset.comments.size());
  for (const auto& c : dataset.comments) {
    if (c.split == Split::train && c.binary_label == BinaryLabel::toxic) {
      auto words = tokenizeWords(normalizeText(c.text, word_config));
      if (words.size() > static_cast<size_t>(max_words)) continue;
    }
    out.comments.push_back(c);
  }
  return out;
}

TokenSequence preprocessComment(const LabeledComment& comment,
                                const PreprocessConfig& config,
                                const WordPieceVocab* wp) {
  TokenSequence seq;
  seq.comment_id = comment.comment_id;
  auto words = truncateTokens(tokenizeWords(normalizeText(comment.text, config)),
                              config.max_words);
  if (config.mode == TokenMode::wordpiece_keep_punct && wp != nullptr) {
    seq.words = words;
    seq.word_boundaries.emplace();
    for (size_t w = 0; w < words.size(); ++w) {
      auto pieces = wordpieceTokenize(words[w], *wp);
      for (auto& piece : pieces) {
        seq.tokens.push_back(std::move(piece));
        seq.word_boundaries->push_back(static_cast<int>(w));
      }
    }
  } else {
    seq.tokens = std::move(words);
  }
  return seq;
}

}  // namespace toxdet

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxdet/attack.hpp"
#include "toxdet/classifier.hpp"
#include "toxdet/corpus.hpp"
#include "toxdet/encoder.hpp"
#include "toxdet/preprocess.hpp"

namespace toxdet {

// Representation selection. `kind` decides which fields apply:
//   onehot     - onehot_unit (word|wordpiece), vocab_top_n
//   static     - embedding_file
//   subword    - subword_words_file, subword_ngrams_file, min/max_ngram
//   contextual - contextual_store_file, word_level, layer
//   concat     - parts (each word-aligned)
struct RepresentationConfig {
  std::string kind = "onehot";
  std::string onehot_unit = "word";
  int vocab_top_n = 75000;
  std::string embedding_file;
  std::string subword_words_file;
  std::string subword_ngrams_file;
  int min_ngram = 3;
  int max_ngram = 6;
  std::string contextual_store_file;
  bool word_level = false;
  std::string layer = "last";
  std::vector<RepresentationConfig> parts;

  void validate() const;  // throws ConfigError naming the field
  // Word-piece tokenized input required (wordpiece one-hot or contextual).
  bool needsWordpieces() const;
};

struct RunConfig {
  // paths
  std::string comments_file;
  std::string annotations_file;
  std::string dataset_dir;
  std::string wordpiece_vocab_file;
  std::string output_dir;

  ColumnMapping columns;
  PreprocessConfig preprocess;
  RepresentationConfig representation;

  std::string task = "binary";             // binary | regression
  std::string model_type = "classifier";   // classifier | finetune
  std::string encoder = "miniature";       // finetune / export encoder name
  ModelConfig model;
  TrainConfig train;
  FineTuneConfig finetune;
  AttackConfig attack;
  uint64_t seed = 13;

  void validate() const;
  Head taskHead() const;
};

// JSON round-trip. Loading applies TOXDET_PATH_* environment overrides to the
// top-level path fields (paths only; hyperparameters cannot be overridden).
std::string runConfigToJson(const RunConfig& config);
RunConfig runConfigFromJson(const std::string& json_text);
RunConfig loadRunConfig(const std::string& path);

// 64-bit FNV-1a, hex encoded; used for config and input-file integrity.
std::string fnv64Hex(std::string_view bytes);
std::string fnv64HexFile(const std::string& path);

// Hash over the canonical config serialization plus the seed.
std::string configHash(const RunConfig& config);

}  // namespace toxdet

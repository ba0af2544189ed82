#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "toxdet/metrics.hpp"
#include "toxdet/preprocess.hpp"
#include "toxdet/vocab.hpp"

namespace toxdet {

struct AttackConfig {
  std::string toxic_word = "fuck";
  std::string healthy_word = "love";
  double regression_threshold = 0.6;
};

struct AttackReport {
  // nontoxic -> toxic when the toxic word is appended
  long n_correct_nontoxic = 0;
  long n_flipped_to_toxic = 0;
  std::optional<double> rate_nontoxic_to_toxic;  // percent; empty denominator -> nullopt

  // toxic -> nontoxic when the healthy word is appended
  long n_correct_toxic = 0;
  long n_flipped_to_nontoxic = 0;
  std::optional<double> rate_toxic_to_nontoxic;

  std::string model_id;
  double decision_threshold = 0.5;
  std::string toxic_word;
  std::string healthy_word;
};

// Appends one attack word after preprocessing/truncation; the result may run
// one word past the truncation limit. The word must survive normalization as
// exactly one token; in word-piece sequences its pieces are appended with a
// fresh word boundary. The input sequence is left untouched.
TokenSequence appendWord(const TokenSequence& seq, std::string_view word,
                         const PreprocessConfig& config,
                         const WordPieceVocab* wp = nullptr);

// Any scoring function over preprocessed sequences; higher = more toxic.
using Scorer = std::function<double(const TokenSequence&)>;
// Batch variant so model backends can amortize one forward pass over many
// comments; must return one score per input sequence, in order.
using BatchScorer =
    std::function<std::vector<double>(std::span<const TokenSequence>)>;

BatchScorer batchedScorer(const Scorer& scorer);

enum class AttackDirection { both, nontoxic_to_toxic, toxic_to_nontoxic };

// Word-append attack over a scored test set. A direction's denominator is
// the comments of that true class the model already classifies correctly;
// its numerator counts predictions that flip after the append.
AttackReport attackEval(const BatchScorer& scorer,
                        std::span<const TokenSequence> sequences,
                        std::span<const BinaryLabel> truth,
                        const AttackConfig& config, double decision_threshold,
                        const PreprocessConfig& preprocess,
                        const WordPieceVocab* wp = nullptr,
                        AttackDirection direction = AttackDirection::both);

AttackReport attackEval(const Scorer& scorer,
                        std::span<const TokenSequence> sequences,
                        std::span<const BinaryLabel> truth,
                        const AttackConfig& config, double decision_threshold,
                        const PreprocessConfig& preprocess,
                        const WordPieceVocab* wp = nullptr,
                        AttackDirection direction = AttackDirection::both);

}  // namespace toxdet

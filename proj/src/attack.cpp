#include "toxdet/attack.hpp"

#include "toxdet/error.hpp"

namespace toxdet {

TokenSequence appendWord(const TokenSequence& seq, std::string_view word,
                         const PreprocessConfig& config,
                         const WordPieceVocab* wp) {
  auto word_tokens = tokenizeWords(normalizeText(word, config));
  if (word_tokens.size() != 1) {
    throw RangeError("attack word '" + std::string(word) +
                     "' does not normalize to a single token");
  }
  TokenSequence out = seq;
  if (seq.word_boundaries && wp != nullptr) {
    const int next_word =
        seq.word_boundaries->empty() ? 0 : seq.word_boundaries->back() + 1;
    for (auto& piece : wordpieceTokenize(word_tokens[0], *wp)) {
      out.tokens.push_back(std::move(piece));
      out.word_boundaries->push_back(next_word);
    }
    if (out.words) out.words->push_back(word_tokens[0]);
  } else {
    out.tokens.push_back(word_tokens[0]);
    if (out.words) out.words->push_back(word_tokens[0]);
    if (out.word_boundaries) {
      out.word_boundaries->push_back(
          seq.word_boundaries->empty() ? 0 : seq.word_boundaries->back() + 1);
    }
  }
  return out;
}

BatchScorer batchedScorer(const Scorer& scorer) {
  return [scorer](std::span<const TokenSequence> seqs) {
    std::vector<double> scores;
    scores.reserve(seqs.size());
    for (const auto& seq : seqs) scores.push_back(scorer(seq));
    return scores;
  };
}

AttackReport attackEval(const BatchScorer& scorer,
                        std::span<const TokenSequence> sequences,
                        std::span<const BinaryLabel> truth,
                        const AttackConfig& config, double decision_threshold,
                        const PreprocessConfig& preprocess,
                        const WordPieceVocab* wp, AttackDirection direction) {
  if (sequences.size() != truth.size()) {
    throw AlignmentError("attackEval: sequence/label count mismatch");
  }
  AttackReport report;
  report.decision_threshold = decision_threshold;
  report.toxic_word = config.toxic_word;
  report.healthy_word = config.healthy_word;

  const bool run_nt = direction != AttackDirection::toxic_to_nontoxic;
  const bool run_tn = direction != AttackDirection::nontoxic_to_toxic;

  const std::vector<double> original = scorer(sequences);
  if (original.size() != sequences.size()) {
    throw AlignmentError("attackEval: scorer returned a short batch");
  }

  // One attacked batch per direction, restricted to the comments that count.
  std::vector<TokenSequence> attacked_nt, attacked_tn;
  for (size_t i = 0; i < sequences.size(); ++i) {
    const bool pred_toxic = original[i] >= decision_threshold;
    if (truth[i] == BinaryLabel::nontoxic && !pred_toxic && run_nt) {
      ++report.n_correct_nontoxic;
      attacked_nt.push_back(
          appendWord(sequences[i], config.toxic_word, preprocess, wp));
    } else if (truth[i] == BinaryLabel::toxic && pred_toxic && run_tn) {
      ++report.n_correct_toxic;
      attacked_tn.push_back(
          appendWord(sequences[i], config.healthy_word, preprocess, wp));
    }
  }
  if (!attacked_nt.empty()) {
    for (double score : scorer(attacked_nt)) {
      if (score >= decision_threshold) ++report.n_flipped_to_toxic;
    }
  }
  if (!attacked_tn.empty()) {
    for (double score : scorer(attacked_tn)) {
      if (score < decision_threshold) ++report.n_flipped_to_nontoxic;
    }
  }

  if (run_nt && report.n_correct_nontoxic > 0) {
    report.rate_nontoxic_to_toxic = 100.0 * report.n_flipped_to_toxic /
                                    static_cast<double>(report.n_correct_nontoxic);
  }
  if (run_tn && report.n_correct_toxic > 0) {
    report.rate_toxic_to_nontoxic = 100.0 * report.n_flipped_to_nontoxic /
                                    static_cast<double>(report.n_correct_toxic);
  }
  return report;
}

AttackReport attackEval(const Scorer& scorer,
                        std::span<const TokenSequence> sequences,
                        std::span<const BinaryLabel> truth,
                        const AttackConfig& config, double decision_threshold,
                        const PreprocessConfig& preprocess,
                        const WordPieceVocab* wp, AttackDirection direction) {
  return attackEval(batchedScorer(scorer), sequences, truth, config,
                    decision_threshold, preprocess, wp, direction);
}

}  // namespace toxdet

#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "toxdet/artifacts.hpp"
#include "toxdet/attack.hpp"
#include "toxdet/classifier.hpp"
#include "toxdet/embedding.hpp"
#include "toxdet/encoder.hpp"
#include "toxdet/runconfig.hpp"

namespace toxdet {

// Optional amendment applied to a freshly loaded contextual store (e.g. the
// predict command injecting vectors for an ad-hoc comment through the
// miniature encoder).
using StoreAmendment = std::function<void(ContextualStore&)>;

// Everything a run needs beyond the dataset: word-piece vocab, one-hot
// vocabulary, and/or the fixed-feature provider.
struct Pipeline {
  RunConfig config;
  std::optional<WordPieceVocab> wp;
  std::optional<Vocabulary> vocab;  // one-hot path
  std::shared_ptr<const RepresentationProvider> provider;  // fixed path
  std::map<std::string, std::string> input_hashes;

  bool onehot() const { return config.representation.kind == "onehot"; }
  long classifierInputDim() const;
  const WordPieceVocab* wpOrNull() const { return wp ? &*wp : nullptr; }
};

// Loads representation resources. For one-hot runs the vocabulary is built
// from the dataset's training split (or loaded via `vocab_override`, as the
// evaluate/predict commands do from the model directory).
Pipeline buildPipeline(const RunConfig& config, const LabeledDataset* dataset,
                       std::optional<Vocabulary> vocab_override = std::nullopt,
                       const StoreAmendment& amend_store = {});

std::vector<TokenSequence> preprocessSplit(const LabeledDataset& dataset,
                                           Split split,
                                           const PreprocessConfig& config,
                                           const WordPieceVocab* wp);

// Aligned per-split training arrays. Targets follow the head: 1/0 for
// binary, the toxicity score for regression.
TrainingData makeClassifierData(const Pipeline& pipeline,
                                std::span<const TokenSequence> seqs,
                                std::span<const LabeledComment* const> comments,
                                Head head);

FineTuneData makeFineTuneData(std::span<const TokenSequence> seqs,
                              std::span<const LabeledComment* const> comments,
                              Head head);

ModelInput makeModelInput(const Pipeline& pipeline, const TokenSequence& seq);

Scorer makeClassifierScorer(const Classifier& model, const Pipeline& pipeline);
Scorer makeFineTuneScorer(FineTunedClassifier& model, int max_len);

// Batch variants: one model forward per chunk instead of per comment.
BatchScorer makeClassifierBatchScorer(const Classifier& model,
                                      const Pipeline& pipeline);
BatchScorer makeFineTuneBatchScorer(FineTunedClassifier& model, int max_len);

}  // namespace toxdet

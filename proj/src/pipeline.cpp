#include "toxdet/pipeline.hpp"

#include <fstream>
#include <iostream>

#include "toxdet/error.hpp"

namespace toxdet {

long Pipeline::classifierInputDim() const {
  if (onehot()) return vocab ? vocab->size() : 0;
  return provider ? provider->dim() : 0;
}

namespace {

std::ifstream openHashed(const std::string& path,
                         std::map<std::string, std::string>& hashes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path + "'");
  }
  hashes[path] = fnv64HexFile(path);
  return in;
}

std::shared_ptr<const RepresentationProvider> buildProvider(
    const RepresentationConfig& r, std::map<std::string, std::string>& hashes,
    const StoreAmendment& amend_store) {
  if (r.kind == "static") {
    auto in = openHashed(r.embedding_file, hashes);
    auto table = std::make_shared<const EmbeddingTable>(
        EmbeddingTable::load(in, r.embedding_file));
    if (table->duplicateCount() > 0) {
      std::cerr << "warning: " << r.embedding_file << ": "
                << table->duplicateCount()
                << " duplicate tokens (last occurrence kept)\n";
    }
    return std::make_shared<const StaticProvider>(table);
  }
  if (r.kind == "subword") {
    auto model = std::make_shared<SubwordModel>();
    {
      auto in = openHashed(r.subword_words_file, hashes);
      model->words = EmbeddingTable::load(in, r.subword_words_file);
    }
    {
      auto in = openHashed(r.subword_ngrams_file, hashes);
      model->ngrams = EmbeddingTable::load(in, r.subword_ngrams_file);
    }
    if (model->words.dim() != model->ngrams.dim()) {
      throw FormatError("subword model: word and n-gram dimensions differ");
    }
    model->min_ngram = r.min_ngram;
    model->max_ngram = r.max_ngram;
    return std::make_shared<const SubwordProvider>(
        std::shared_ptr<const SubwordModel>(model));
  }
  if (r.kind == "contextual") {
    ContextualStore store;
    if (fs::exists(r.contextual_store_file)) {
      auto in = openHashed(r.contextual_store_file, hashes);
      store = ContextualStore::load(in, r.contextual_store_file);
    }
    if (amend_store) amend_store(store);
    if (store.size() == 0) {
      throw FormatError("contextual store '" + r.contextual_store_file +
                        "' is missing or empty; run export-contextual first");
    }
    auto shared = std::make_shared<const ContextualStore>(std::move(store));
    return std::make_shared<const ContextualProvider>(shared, r.word_level);
  }
  if (r.kind == "concat") {
    std::vector<std::shared_ptr<const RepresentationProvider>> parts;
    for (const auto& p : r.parts) {
      parts.push_back(buildProvider(p, hashes, amend_store));
    }
    return std::make_shared<const ConcatProvider>(std::move(parts));
  }
  throw ConfigError("representation.kind: '" + r.kind +
                    "' has no fixed-feature provider");
}

}  // namespace

std::vector<TokenSequence> preprocessSplit(const LabeledDataset& dataset,
                                           Split split,
                                           const PreprocessConfig& config,
                                           const WordPieceVocab* wp) {
  std::vector<TokenSequence> seqs;
  for (const auto& c : dataset.comments) {
    if (c.split != split) continue;
    seqs.push_back(preprocessComment(c, config, wp));
  }
  return seqs;
}

Pipeline buildPipeline(const RunConfig& config, const LabeledDataset* dataset,
                       std::optional<Vocabulary> vocab_override,
                       const StoreAmendment& amend_store) {
  config.validate();
  if (config.representation.needsWordpieces() &&
      config.preprocess.mode != TokenMode::wordpiece_keep_punct) {
    throw ConfigError(
        "preprocess.mode: the selected representation needs "
        "wordpiece_keep_punct");
  }

  Pipeline p;
  p.config = config;
  if (!config.wordpiece_vocab_file.empty() &&
      (config.preprocess.mode == TokenMode::wordpiece_keep_punct)) {
    auto in = openHashed(config.wordpiece_vocab_file, p.input_hashes);
    p.wp = WordPieceVocab::load(in, config.wordpiece_vocab_file);
  }

  if (config.model_type == "finetune") {
    if (!p.wp) {
      throw ConfigError(
          "wordpiece_vocab_file: required to fine-tune (the encoder tokenizes "
          "with it)");
    }
    return p;
  }

  if (config.representation.kind == "onehot") {
    if (vocab_override) {
      p.vocab = std::move(vocab_override);
    } else {
      if (dataset == nullptr) {
        throw ConfigError("one-hot vocabulary needs a dataset or a saved vocab");
      }
      auto train_seqs = preprocessSplit(*dataset, Split::train,
                                        config.preprocess, p.wpOrNull());
      p.vocab = buildVocab(train_seqs, config.representation.vocab_top_n);
    }
  } else {
    p.provider =
        buildProvider(config.representation, p.input_hashes, amend_store);
  }
  return p;
}

ModelInput makeModelInput(const Pipeline& pipeline, const TokenSequence& seq) {
  if (pipeline.onehot()) {
    return ModelInput::fromIds(encodeTokens(seq.tokens, *pipeline.vocab));
  }
  return ModelInput::fromFeatures(pipeline.provider->embed(seq));
}

TrainingData makeClassifierData(const Pipeline& pipeline,
                                std::span<const TokenSequence> seqs,
                                std::span<const LabeledComment* const> comments,
                                Head head) {
  if (seqs.size() != comments.size()) {
    throw AlignmentError("makeClassifierData: sequence/comment count mismatch");
  }
  TrainingData data;
  data.inputs.reserve(seqs.size());
  data.targets.resize(static_cast<long>(seqs.size()));
  data.labels.reserve(seqs.size());
  for (size_t i = 0; i < seqs.size(); ++i) {
    data.inputs.push_back(makeModelInput(pipeline, seqs[i]));
    data.labels.push_back(comments[i]->binary_label);
    data.targets[static_cast<long>(i)] =
        head == Head::binary
            ? (comments[i]->binary_label == BinaryLabel::toxic ? 1.0 : 0.0)
            : comments[i]->toxicity_score;
  }
  return data;
}

FineTuneData makeFineTuneData(std::span<const TokenSequence> seqs,
                              std::span<const LabeledComment* const> comments,
                              Head head) {
  if (seqs.size() != comments.size()) {
    throw AlignmentError("makeFineTuneData: sequence/comment count mismatch");
  }
  FineTuneData data;
  data.word_seqs.reserve(seqs.size());
  data.targets.resize(static_cast<long>(seqs.size()));
  data.labels.reserve(seqs.size());
  for (size_t i = 0; i < seqs.size(); ++i) {
    data.word_seqs.push_back(seqs[i].words ? *seqs[i].words : seqs[i].tokens);
    data.labels.push_back(comments[i]->binary_label);
    data.targets[static_cast<long>(i)] =
        head == Head::binary
            ? (comments[i]->binary_label == BinaryLabel::toxic ? 1.0 : 0.0)
            : comments[i]->toxicity_score;
  }
  return data;
}

Scorer makeClassifierScorer(const Classifier& model, const Pipeline& pipeline) {
  return [&model, &pipeline](const TokenSequence& seq) {
    ModelInput input = makeModelInput(pipeline, seq);
    return model.predictScores(std::span<const ModelInput>(&input, 1))[0];
  };
}

Scorer makeFineTuneScorer(FineTunedClassifier& model, int max_len) {
  return [&model, max_len](const TokenSequence& seq) {
    std::vector<std::vector<std::string>> batch{
        seq.words ? *seq.words : seq.tokens};
    return model.predictScores(batch, max_len)[0];
  };
}

BatchScorer makeClassifierBatchScorer(const Classifier& model,
                                      const Pipeline& pipeline) {
  return [&model, &pipeline](std::span<const TokenSequence> seqs) {
    std::vector<ModelInput> inputs;
    inputs.reserve(seqs.size());
    for (const auto& seq : seqs) inputs.push_back(makeModelInput(pipeline, seq));
    Eigen::VectorXd scores = model.predictScores(inputs);
    return std::vector<double>(scores.data(), scores.data() + scores.size());
  };
}

BatchScorer makeFineTuneBatchScorer(FineTunedClassifier& model, int max_len) {
  return [&model, max_len](std::span<const TokenSequence> seqs) {
    std::vector<std::vector<std::string>> batch;
    batch.reserve(seqs.size());
    for (const auto& seq : seqs) {
      batch.push_back(seq.words ? *seq.words : seq.tokens);
    }
    Eigen::VectorXd scores = model.predictScores(batch, max_len);
    return std::vector<double>(scores.data(), scores.data() + scores.size());
  };
}

}  // namespace toxdet

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxdet/classifier.hpp"
#include "toxdet/preprocess.hpp"
#include "toxdet/vocab.hpp"

namespace toxdet {

struct FineTuneConfig {
  int max_sequence_length = 256;  // word-pieces seen by the encoder
  int batch_size = 32;
  double learning_rate = 2e-5;
  int epochs = 2;
  uint64_t seed = 13;

  void validate() const;
};

// Adapter over a pretrained transformer encoder: word-piece tokenization,
// forward to a pooled classification vector (or per-piece hidden states for
// the contextual export), and access to the trainable parameters.
class EncoderHandle {
 public:
  virtual ~EncoderHandle() = default;

  virtual int hiddenDim() const = 0;
  virtual const WordPieceVocab& vocab() const = 0;

  // Word-piece ids for a word sequence, including any special markers, cut to
  // at most max_len pieces.
  virtual std::vector<int> encodeIds(std::span<const std::string> words,
                                     int max_len) = 0;

  // Pooled representation (1 x hiddenDim) for one id sequence.
  virtual ad::Var forwardPooled(ad::Tape& t, std::span<const int> ids,
                                bool with_grad) = 0;

  // Final hidden state per input piece (no special markers added), taken from
  // `layer` (negative = last). Used by the contextual-store export.
  virtual Eigen::MatrixXd hiddenStates(std::span<const std::string> pieces,
                                       int layer) = 0;
  virtual int layerCount() const = 0;

  virtual std::vector<ad::Param*> parameters() = 0;

  // Counting hook: length of the id sequence most recently passed through
  // forwardPooled.
  virtual long lastSequenceLength() const = 0;
};

// Small deterministic transformer (token+position embeddings, post-norm
// self-attention blocks, GELU feed-forward, tanh pooler over the first
// position). Random-init from a seed; the real pretrained encoder is an
// external dependency and this stands in for it in tests and offline runs.
class MiniatureTransformer : public EncoderHandle {
 public:
  struct Config {
    int hidden_dim = 16;
    int n_layers = 2;
    int n_heads = 2;
    int ffn_dim = 32;
    int max_positions = 512;
  };

  MiniatureTransformer(WordPieceVocab vocab, Config config, uint64_t seed);

  int hiddenDim() const override { return config_.hidden_dim; }
  const WordPieceVocab& vocab() const override { return vocab_; }
  std::vector<int> encodeIds(std::span<const std::string> words,
                             int max_len) override;
  ad::Var forwardPooled(ad::Tape& t, std::span<const int> ids,
                        bool with_grad) override;
  Eigen::MatrixXd hiddenStates(std::span<const std::string> pieces,
                               int layer) override;
  int layerCount() const override { return config_.n_layers; }
  std::vector<ad::Param*> parameters() override;
  long lastSequenceLength() const override { return last_sequence_length_; }

  const Config& config() const { return config_; }

 private:
  struct Block {
    nn::DenseLayer wq, wk, wv, wo;
    nn::DenseLayer ffn1, ffn2;
    ad::Param ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  };

  ad::Var encode(ad::Tape& t, std::span<const int> ids, bool with_grad,
                 int upto_layer);  // T x hidden

  WordPieceVocab vocab_;
  Config config_;
  ad::Param token_embedding_;     // V x hidden
  ad::Param position_embedding_;  // max_positions x hidden
  std::vector<Block> blocks_;
  nn::DenseLayer pooler_;
  int cls_id_ = -1;
  int sep_id_ = -1;
  int unk_id_ = -1;
  long last_sequence_length_ = 0;
};

// Raises DependencyError describing how to supply an encoder (the miniature
// test encoder or an externally exported contextual store).
[[noreturn]] void raiseEncoderUnavailable(const std::string& requested);

// Builds the named encoder. "miniature" is the only in-process implementation;
// anything else raises DependencyError.
std::unique_ptr<EncoderHandle> makeEncoder(const std::string& name,
                                           WordPieceVocab vocab, uint64_t seed);

// Fine-tuned model: the encoder (all parameters updated) plus a dense
// classification head.
class FineTunedClassifier {
 public:
  FineTunedClassifier(EncoderHandle* encoder, Head head, uint64_t seed);

  Head head() const { return head_; }
  EncoderHandle* encoder() { return encoder_; }
  std::vector<ad::Param*> parameters();

  // Scores for word sequences (tokenized by the encoder itself).
  Eigen::VectorXd predictScores(std::span<const std::vector<std::string>> word_seqs,
                                int max_len);

  ad::Var buildLoss(ad::Tape& t,
                    std::span<const std::vector<std::string>> word_seqs,
                    const Eigen::VectorXd& targets, int max_len, bool with_grad);

  nn::DenseLayer& headLayer() { return head_layer_; }

 private:
  ad::Var forwardLogits(ad::Tape& t,
                        std::span<const std::vector<std::string>> word_seqs,
                        int max_len, bool with_grad);

  EncoderHandle* encoder_;
  Head head_;
  nn::DenseLayer head_layer_;
};

struct FineTuneData {
  std::vector<std::vector<std::string>> word_seqs;
  Eigen::VectorXd targets;
  std::vector<BinaryLabel> labels;

  size_t size() const { return word_seqs.size(); }
};

// Updates every encoder parameter plus the head for config.epochs passes.
// Returns per-epoch history (dev F1 at 0.5 for binary, dev RMSE otherwise).
TrainingHistory fineTune(FineTunedClassifier& model, const FineTuneData& train,
                         const FineTuneData& dev, const FineTuneConfig& config);

}  // namespace toxdet

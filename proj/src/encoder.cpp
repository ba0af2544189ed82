#include "toxdet/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "toxdet/error.hpp"
#include "toxdet/metrics.hpp"

namespace toxdet {

using ad::Matrix;
using ad::Vector;

void FineTuneConfig::validate() const {
  if (max_sequence_length < 3) {
    throw ConfigError("max_sequence_length: must be >= 3");
  }
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate: must be > 0");
  if (epochs < 0) throw ConfigError("epochs: must be >= 0");
}

MiniatureTransformer::MiniatureTransformer(WordPieceVocab vocab, Config config,
                                           uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (config_.hidden_dim % config_.n_heads != 0) {
    throw ConfigError("hidden_dim: must be divisible by n_heads");
  }
  unk_id_ = vocab_.idOf(vocab_.unknown);
  cls_id_ = vocab_.contains("[CLS]") ? vocab_.idOf("[CLS]") : -1;
  sep_id_ = vocab_.contains("[SEP]") ? vocab_.idOf("[SEP]") : -1;

  ad::Rng rng(seed);
  const long V = static_cast<long>(vocab_.pieces.size());
  const long d = config_.hidden_dim;
  token_embedding_ = ad::Param("tok_emb", ad::gaussianMatrix(V, d, 0.06, rng));
  position_embedding_ =
      ad::Param("pos_emb", ad::gaussianMatrix(config_.max_positions, d, 0.06, rng));
  blocks_.resize(static_cast<size_t>(config_.n_layers));
  for (size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "block" + std::to_string(i + 1);
    Block& b = blocks_[i];
    b.wq.init(prefix + ".wq", d, d, rng);
    b.wk.init(prefix + ".wk", d, d, rng);
    b.wv.init(prefix + ".wv", d, d, rng);
    b.wo.init(prefix + ".wo", d, d, rng);
    b.ffn1.init(prefix + ".ffn1", d, config_.ffn_dim, rng);
    b.ffn2.init(prefix + ".ffn2", config_.ffn_dim, d, rng);
    b.ln1_gain = ad::Param(prefix + ".ln1_gain", Matrix::Ones(1, d));
    b.ln1_bias = ad::Param(prefix + ".ln1_bias", Matrix::Zero(1, d));
    b.ln2_gain = ad::Param(prefix + ".ln2_gain", Matrix::Ones(1, d));
    b.ln2_bias = ad::Param(prefix + ".ln2_bias", Matrix::Zero(1, d));
  }
  pooler_.init("pooler", d, d, rng);
}

std::vector<int> MiniatureTransformer::encodeIds(
    std::span<const std::string> words, int max_len) {
  // Content is cut so that [CLS] ... [SEP] fits within max_len pieces.
  const size_t n_special = (cls_id_ >= 0 ? 1u : 0u) + (sep_id_ >= 0 ? 1u : 0u);
  if (max_len <= static_cast<int>(n_special)) {
    throw ConfigError("max_sequence_length: too small for the special markers");
  }
  const size_t content_budget = static_cast<size_t>(max_len) - n_special;
  std::vector<int> ids;
  if (cls_id_ >= 0) ids.push_back(cls_id_);
  const size_t lead = cls_id_ >= 0 ? 1u : 0u;
  for (const auto& word : words) {
    if (ids.size() - lead >= content_budget) break;
    for (const auto& piece : wordpieceTokenize(word, vocab_)) {
      if (ids.size() - lead >= content_budget) break;
      ids.push_back(vocab_.contains(piece) ? vocab_.idOf(piece) : unk_id_);
    }
  }
  if (sep_id_ >= 0) ids.push_back(sep_id_);
  return ids;
}

ad::Var MiniatureTransformer::encode(ad::Tape& t, std::span<const int> ids,
                                     bool with_grad, int upto_layer) {
  const long T = static_cast<long>(ids.size());
  const long d = config_.hidden_dim;
  if (T > config_.max_positions) {
    throw RangeError("encoder input of " + std::to_string(T) +
                     " pieces exceeds max positions " +
                     std::to_string(config_.max_positions));
  }
  std::vector<int> tok_ids(ids.begin(), ids.end());
  std::vector<int> pos_ids(static_cast<size_t>(T));
  for (long i = 0; i < T; ++i) pos_ids[static_cast<size_t>(i)] = static_cast<int>(i);

  ad::Var x{};
  if (with_grad) {
    x = ad::add(ad::embedRows(t, token_embedding_, std::move(tok_ids)),
                ad::embedRows(t, position_embedding_, std::move(pos_ids)));
  } else {
    Matrix m(T, d);
    for (long i = 0; i < T; ++i) {
      m.row(i) = token_embedding_.value.row(ids[static_cast<size_t>(i)]) +
                 position_embedding_.value.row(i);
    }
    x = ad::constant(t, std::move(m));
  }

  const long head_dim = d / config_.n_heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const int layers = upto_layer < 0 ? config_.n_layers
                                    : std::min(upto_layer, config_.n_layers);
  for (int l = 0; l < layers; ++l) {
    Block& blk = blocks_[static_cast<size_t>(l)];
    ad::Var q = blk.wq.apply(t, x, with_grad);
    ad::Var k = blk.wk.apply(t, x, with_grad);
    ad::Var v = blk.wv.apply(t, x, with_grad);
    ad::Var heads{};
    for (int h = 0; h < config_.n_heads; ++h) {
      ad::Var qh = ad::sliceCols(q, h * head_dim, head_dim);
      ad::Var kh = ad::sliceCols(k, h * head_dim, head_dim);
      ad::Var vh = ad::sliceCols(v, h * head_dim, head_dim);
      ad::Var scores =
          ad::scale(ad::matmul(qh, ad::transposed(kh)), attn_scale);
      ad::Var ctx = ad::matmul(ad::softmaxRows(scores), vh);
      heads = h == 0 ? ctx : ad::concatCols(heads, ctx);
    }
    ad::Var attn = blk.wo.apply(t, heads, with_grad);
    x = ad::layerNormRows(ad::add(x, attn),
                          nn::paramVar(t, blk.ln1_gain, with_grad),
                          nn::paramVar(t, blk.ln1_bias, with_grad));
    ad::Var f = blk.ffn2.apply(t, ad::gelu(blk.ffn1.apply(t, x, with_grad)),
                               with_grad);
    x = ad::layerNormRows(ad::add(x, f),
                          nn::paramVar(t, blk.ln2_gain, with_grad),
                          nn::paramVar(t, blk.ln2_bias, with_grad));
  }
  return x;
}

ad::Var MiniatureTransformer::forwardPooled(ad::Tape& t,
                                            std::span<const int> ids,
                                            bool with_grad) {
  if (ids.empty()) {
    throw RangeError("forwardPooled: empty id sequence");
  }
  last_sequence_length_ = static_cast<long>(ids.size());
  ad::Var hidden = encode(t, ids, with_grad, -1);
  ad::Var first = ad::sliceRows(hidden, 0, 1);
  return ad::tanhOp(pooler_.apply(t, first, with_grad));
}

Eigen::MatrixXd MiniatureTransformer::hiddenStates(
    std::span<const std::string> pieces, int layer) {
  if (pieces.empty()) {
    return Eigen::MatrixXd(0, config_.hidden_dim);
  }
  std::vector<int> ids;
  ids.reserve(pieces.size());
  for (const auto& piece : pieces) {
    ids.push_back(vocab_.contains(piece) ? vocab_.idOf(piece) : unk_id_);
  }
  ad::Tape t;
  const int upto = layer < 0 ? -1 : layer;
  ad::Var hidden = encode(t, ids, /*with_grad=*/false, upto);
  return hidden.value();
}

std::vector<ad::Param*> MiniatureTransformer::parameters() {
  std::vector<ad::Param*> out;
  out.push_back(&token_embedding_);
  out.push_back(&position_embedding_);
  for (auto& b : blocks_) {
    b.wq.collect(out);
    b.wk.collect(out);
    b.wv.collect(out);
    b.wo.collect(out);
    b.ffn1.collect(out);
    b.ffn2.collect(out);
    out.push_back(&b.ln1_gain);
    out.push_back(&b.ln1_bias);
    out.push_back(&b.ln2_gain);
    out.push_back(&b.ln2_bias);
  }
  pooler_.collect(out);
  return out;
}

void raiseEncoderUnavailable(const std::string& requested) {
  throw DependencyError(
      "pretrained encoder '" + requested +
      "' is not available in-process; use the miniature test encoder "
      "(encoder=\"miniature\") or export contextual vectors externally and "
      "point the run at the store file");
}

std::unique_ptr<EncoderHandle> makeEncoder(const std::string& name,
                                           WordPieceVocab vocab, uint64_t seed) {
  if (name == "miniature") {
    return std::make_unique<MiniatureTransformer>(std::move(vocab),
                                                  MiniatureTransformer::Config{},
                                                  seed);
  }
  raiseEncoderUnavailable(name);
}

FineTunedClassifier::FineTunedClassifier(EncoderHandle* encoder, Head head,
                                         uint64_t seed)
    : encoder_(encoder), head_(head) {
  if (encoder_ == nullptr) {
    raiseEncoderUnavailable("<null>");
  }
  ad::Rng rng(seed);
  head_layer_.init("finetune_head", encoder_->hiddenDim(), 1, rng);
}

std::vector<ad::Param*> FineTunedClassifier::parameters() {
  auto out = encoder_->parameters();
  head_layer_.collect(out);
  return out;
}

ad::Var FineTunedClassifier::forwardLogits(
    ad::Tape& t, std::span<const std::vector<std::string>> word_seqs,
    int max_len, bool with_grad) {
  std::vector<ad::Var> pooled;
  pooled.reserve(word_seqs.size());
  for (const auto& words : word_seqs) {
    auto ids = encoder_->encodeIds(words, max_len);
    pooled.push_back(encoder_->forwardPooled(t, ids, with_grad));
  }
  ad::Var batch = ad::concatRows(pooled);
  return head_layer_.apply(t, batch, with_grad);
}

Eigen::VectorXd FineTunedClassifier::predictScores(
    std::span<const std::vector<std::string>> word_seqs, int max_len) {
  Eigen::VectorXd out(static_cast<long>(word_seqs.size()));
  constexpr size_t kChunk = 16;
  for (size_t start = 0; start < word_seqs.size(); start += kChunk) {
    const size_t n = std::min(kChunk, word_seqs.size() - start);
    ad::Tape t;
    ad::Var logits = forwardLogits(t, word_seqs.subspan(start, n), max_len,
                                   /*with_grad=*/false);
    out.segment(static_cast<long>(start), static_cast<long>(n)) =
        logits.value().col(0).unaryExpr([](double z) {
          return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                          : std::exp(z) / (1.0 + std::exp(z));
        });
  }
  return out;
}

ad::Var FineTunedClassifier::buildLoss(
    ad::Tape& t, std::span<const std::vector<std::string>> word_seqs,
    const Eigen::VectorXd& targets, int max_len, bool with_grad) {
  ad::Var logits = forwardLogits(t, word_seqs, max_len, with_grad);
  if (head_ == Head::binary) {
    return ad::bceWithLogitsLoss(logits, targets);
  }
  return ad::mseLoss(ad::sigmoid(logits), targets);
}

TrainingHistory fineTune(FineTunedClassifier& model, const FineTuneData& train,
                         const FineTuneData& dev, const FineTuneConfig& config) {
  config.validate();
  if (train.size() == 0 || dev.size() == 0) {
    throw RangeError("fineTune: train and dev splits must be nonempty");
  }

  TrainingHistory history;
  if (config.epochs == 0) return history;

  ad::Rng rng(config.seed);
  ad::AdamOptimizer adam({.learning_rate = config.learning_rate});
  auto params = model.parameters();

  auto dev_metric = [&]() {
    Eigen::VectorXd scores =
        model.predictScores(dev.word_seqs, config.max_sequence_length);
    if (model.head() == Head::binary) {
      std::vector<BinaryLabel> pred;
      for (long i = 0; i < scores.size(); ++i) {
        pred.push_back(scores[i] >= 0.5 ? BinaryLabel::toxic
                                        : BinaryLabel::nontoxic);
      }
      return f1Score(confusion(pred, dev.labels));
    }
    std::vector<double> s(scores.data(), scores.data() + scores.size());
    std::vector<double> y(dev.targets.data(),
                          dev.targets.data() + dev.targets.size());
    return regressionErrors(s, y).rmse;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto order = rng.permutation(train.size());
    double loss_sum = 0.0;
    long batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t n =
          std::min(static_cast<size_t>(config.batch_size), order.size() - start);
      std::vector<std::vector<std::string>> batch;
      Eigen::VectorXd targets(static_cast<long>(n));
      for (size_t i = 0; i < n; ++i) {
        batch.push_back(train.word_seqs[order[start + i]]);
        targets[static_cast<long>(i)] =
            train.targets[static_cast<long>(order[start + i])];
      }
      for (ad::Param* p : params) p->zeroGrad();
      ad::Tape t;
      ad::Var loss = model.buildLoss(t, batch, targets,
                                     config.max_sequence_length,
                                     /*with_grad=*/true);
      const double loss_value = loss.value()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite fine-tune loss at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batches));
      }
      t.backward(loss.id);
      adam.step(params);
      loss_sum += loss_value;
      ++batches;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.dev_metric = dev_metric();
    history.epochs.push_back(record);
    history.best_epoch = epoch;
    history.best_metric = record.dev_metric;
  }
  return history;
}

}  // namespace toxdet

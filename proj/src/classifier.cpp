#include "toxdet/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "toxdet/error.hpp"
#include "toxdet/vocab.hpp"

namespace toxdet {

using ad::Matrix;
using ad::Vector;

std::string_view archName(Arch a) {
  switch (a) {
    case Arch::cnn: return "cnn";
    case Arch::bilstm: return "bilstm";
    case Arch::bigru: return "bigru";
  }
  return "?";
}

Arch archFromName(std::string_view name) {
  if (name == "cnn") return Arch::cnn;
  if (name == "bilstm") return Arch::bilstm;
  if (name == "bigru") return Arch::bigru;
  throw ConfigError("architecture: unknown value '" + std::string(name) + "'");
}

std::string_view inputKindName(InputKind k) {
  return k == InputKind::onehot_trainable ? "onehot_trainable" : "fixed_features";
}

InputKind inputKindFromName(std::string_view name) {
  if (name == "onehot_trainable") return InputKind::onehot_trainable;
  if (name == "fixed_features") return InputKind::fixed_features;
  throw ConfigError("input: unknown value '" + std::string(name) + "'");
}

std::string_view headName(Head h) {
  return h == Head::binary ? "binary" : "regression";
}

Head headFromName(std::string_view name) {
  if (name == "binary") return Head::binary;
  if (name == "regression") return Head::regression;
  throw ConfigError("head: unknown value '" + std::string(name) + "'");
}

std::string_view summaryName(RecurrentSummary s) {
  return s == RecurrentSummary::final_state ? "final_state" : "max_pool";
}

RecurrentSummary summaryFromName(std::string_view name) {
  if (name == "final_state") return RecurrentSummary::final_state;
  if (name == "max_pool") return RecurrentSummary::max_pool;
  throw ConfigError("recurrent_summary: unknown value '" + std::string(name) +
                    "'");
}

void ModelConfig::validate() const {
  const bool is_cnn = architecture == Arch::cnn;
  if (is_cnn) {
    if (!conv_layers) throw ConfigError("conv_layers: required for cnn");
    if (recurrent_layers) {
      throw ConfigError("recurrent_layers: must be empty for cnn");
    }
    if (conv_layers->n_layers < 1 || conv_layers->n_layers > 2) {
      throw ConfigError("conv_layers.n_layers: must be 1 or 2");
    }
    if (conv_layers->kernel < 3 || conv_layers->kernel > 5) {
      throw ConfigError("conv_layers.kernel: must be in [3,5]");
    }
    if (conv_layers->channels < 1) {
      throw ConfigError("conv_layers.channels: must be >= 1");
    }
  } else {
    if (!recurrent_layers) {
      throw ConfigError("recurrent_layers: required for " +
                        std::string(archName(architecture)));
    }
    if (conv_layers) throw ConfigError("conv_layers: must be empty for " +
                                       std::string(archName(architecture)));
    if (recurrent_layers->n_layers < 1 || recurrent_layers->n_layers > 2) {
      throw ConfigError("recurrent_layers.n_layers: must be 1 or 2");
    }
    if (recurrent_layers->units != 50 && recurrent_layers->units != 128) {
      throw ConfigError("recurrent_layers.units: must be 50 or 128");
    }
  }
  if (dense_units_1 < 64 || dense_units_1 > 256) {
    throw ConfigError("dense_units_1: must be in [64,256]");
  }
  if (dense_units_2 < 16 || dense_units_2 > 64) {
    throw ConfigError("dense_units_2: must be in [16,64]");
  }
  if (input == InputKind::onehot_trainable && trainable_embedding_dim < 1) {
    throw ConfigError("trainable_embedding_dim: must be >= 1");
  }
  if (dropout_rate && (*dropout_rate < 0.0 || *dropout_rate >= 1.0)) {
    throw ConfigError("dropout_rate: must be in [0,1)");
  }
  if (l2_coefficient < 0.0) {
    throw ConfigError("l2_coefficient: must be >= 0");
  }
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate: must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs: must be >= 0");
  if (patience < 1) throw ConfigError("patience: must be >= 1");
}

ModelInput ModelInput::fromIds(std::vector<int> token_ids, long len) {
  ModelInput in;
  in.ids = std::move(token_ids);
  in.length = len < 0 ? static_cast<long>(in.ids.size()) : len;
  return in;
}

ModelInput ModelInput::fromFeatures(Eigen::MatrixXd f, long len) {
  ModelInput in;
  in.length = len < 0 ? f.rows() : len;
  in.features = std::move(f);
  return in;
}

Classifier::Classifier(ModelConfig config, long input_dim, uint64_t init_seed)
    : config_(std::move(config)), input_dim_(input_dim), init_seed_(init_seed) {
  config_.validate();
  if (input_dim < 1) {
    throw ConfigError("input_dim: must be >= 1");
  }
  ad::Rng rng(init_seed);
  const long feat = featureDim();
  long summary_width = 0;
  if (config_.input == InputKind::onehot_trainable) {
    embedding_ = ad::Param("embedding",
                           ad::gaussianMatrix(input_dim,
                                              config_.trainable_embedding_dim,
                                              0.05, rng));
    embedding_.value.row(Vocabulary::kPadIndex).setZero();
  }
  if (config_.architecture == Arch::cnn) {
    long in = feat;
    convs_.resize(static_cast<size_t>(config_.conv_layers->n_layers));
    for (size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].init("conv" + std::to_string(i + 1), config_.conv_layers->kernel,
                     in, config_.conv_layers->channels, rng);
      in = config_.conv_layers->channels;
    }
    summary_width = config_.conv_layers->channels;
  } else if (config_.architecture == Arch::bilstm) {
    long in = feat;
    lstm_layers_.resize(static_cast<size_t>(config_.recurrent_layers->n_layers));
    for (size_t i = 0; i < lstm_layers_.size(); ++i) {
      lstm_layers_[i].init("lstm" + std::to_string(i + 1), in,
                           config_.recurrent_layers->units, rng);
      in = 2 * config_.recurrent_layers->units;
    }
    summary_width = 2 * config_.recurrent_layers->units;
  } else {
    long in = feat;
    gru_layers_.resize(static_cast<size_t>(config_.recurrent_layers->n_layers));
    for (size_t i = 0; i < gru_layers_.size(); ++i) {
      gru_layers_[i].init("gru" + std::to_string(i + 1), in,
                          config_.recurrent_layers->units, rng);
      in = 2 * config_.recurrent_layers->units;
    }
    summary_width = 2 * config_.recurrent_layers->units;
  }
  dense1_.init("dense1", summary_width, config_.dense_units_1, rng);
  dense2_.init("dense2", config_.dense_units_1, config_.dense_units_2, rng);
  out_.init("out", config_.dense_units_2, 1, rng);
}

long Classifier::featureDim() const {
  return config_.input == InputKind::onehot_trainable
             ? config_.trainable_embedding_dim
             : input_dim_;
}

long Classifier::summaryDim() const {
  if (config_.architecture == Arch::cnn) return config_.conv_layers->channels;
  return 2 * config_.recurrent_layers->units;
}

std::vector<ad::Param*> Classifier::parameters() {
  std::vector<ad::Param*> out;
  if (config_.input == InputKind::onehot_trainable) out.push_back(&embedding_);
  for (auto& c : convs_) c.collect(out);
  for (auto& l : lstm_layers_) l.collect(out);
  for (auto& g : gru_layers_) g.collect(out);
  dense1_.collect(out);
  dense2_.collect(out);
  out_.collect(out);
  return out;
}

std::vector<const ad::Param*> Classifier::parameters() const {
  auto mutable_params = const_cast<Classifier*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

namespace {

long inputLength(const ModelInput& in, InputKind kind) {
  const long present = kind == InputKind::onehot_trainable
                           ? static_cast<long>(in.ids.size())
                           : in.features.rows();
  if (in.length < 0) return present;
  return std::min(in.length, present);
}

}  // namespace

ad::Var Classifier::forwardCnn(ad::Tape& t, std::span<const ModelInput> batch,
                               bool with_grad) {
  const int kernel = config_.conv_layers->kernel;
  const int n_layers = config_.conv_layers->n_layers;
  // A stack of valid convolutions needs this many input rows.
  const long min_rows = static_cast<long>(n_layers) * (kernel - 1) + 1;

  // Conv weights materialize once per tape and are shared across examples.
  std::vector<nn::Conv1dLayer*> layers;
  for (auto& c : convs_) layers.push_back(&c);

  std::vector<ad::Var> pooled;
  pooled.reserve(batch.size());
  for (const auto& in : batch) {
    const long len = inputLength(in, config_.input);
    ad::Var x{};
    if (config_.input == InputKind::onehot_trainable) {
      std::vector<int> ids(in.ids.begin(), in.ids.begin() + len);
      x = with_grad ? ad::embedRows(t, embedding_, std::move(ids))
                    : ad::constant(t, [&] {
                        Matrix m(len, embedding_.value.cols());
                        for (long i = 0; i < len; ++i) {
                          m.row(i) = embedding_.value.row(ids[static_cast<size_t>(i)]);
                        }
                        return m;
                      }());
    } else {
      if (in.features.cols() != input_dim_) {
        throw ConfigError("feature matrix has dimension " +
                          std::to_string(in.features.cols()) + ", model expects " +
                          std::to_string(input_dim_));
      }
      x = ad::constant(t, in.features.topRows(len));
    }
    x = ad::padRowsTo(x, min_rows);
    for (auto* layer : layers) {
      x = ad::relu(layer->apply(t, x, with_grad));
    }
    pooled.push_back(ad::colwiseMax(x));
  }
  return ad::concatRows(pooled);
}

ad::Var Classifier::forwardRecurrent(ad::Tape& t,
                                     std::span<const ModelInput> batch,
                                     bool with_grad) {
  const long B = static_cast<long>(batch.size());
  std::vector<long> lengths(batch.size());
  long T = 0;
  for (size_t b = 0; b < batch.size(); ++b) {
    if (config_.input == InputKind::fixed_features &&
        batch[b].features.cols() != input_dim_ && batch[b].features.rows() > 0) {
      throw ConfigError("feature matrix has dimension " +
                        std::to_string(batch[b].features.cols()) +
                        ", model expects " + std::to_string(input_dim_));
    }
    lengths[b] = inputLength(batch[b], config_.input);
    T = std::max(T, lengths[b]);
  }

  std::vector<ad::Var> xs;
  std::vector<Vector> masks;
  xs.reserve(static_cast<size_t>(T));
  masks.reserve(static_cast<size_t>(T));
  for (long step = 0; step < T; ++step) {
    Vector mask(B);
    if (config_.input == InputKind::onehot_trainable) {
      std::vector<int> ids(static_cast<size_t>(B), Vocabulary::kPadIndex);
      for (long b = 0; b < B; ++b) {
        if (step < lengths[static_cast<size_t>(b)]) {
          ids[static_cast<size_t>(b)] =
              batch[static_cast<size_t>(b)].ids[static_cast<size_t>(step)];
          mask[b] = 1.0;
        } else {
          mask[b] = 0.0;
        }
      }
      xs.push_back(with_grad
                       ? ad::embedRows(t, embedding_, std::move(ids))
                       : ad::constant(t, [&] {
                           Matrix m(B, embedding_.value.cols());
                           for (long b = 0; b < B; ++b) {
                             m.row(b) = embedding_.value.row(ids[static_cast<size_t>(b)]);
                           }
                           return m;
                         }()));
    } else {
      Matrix m = Matrix::Zero(B, featureDim());
      for (long b = 0; b < B; ++b) {
        if (step < lengths[static_cast<size_t>(b)]) {
          m.row(b) = batch[static_cast<size_t>(b)].features.row(step);
          mask[b] = 1.0;
        } else {
          mask[b] = 0.0;
        }
      }
      xs.push_back(ad::constant(t, std::move(m)));
    }
    masks.push_back(std::move(mask));
  }

  std::vector<ad::Var> layer_in = std::move(xs);
  nn::BidirectionalResult result;
  const size_t n_layers = config_.architecture == Arch::bilstm
                              ? lstm_layers_.size()
                              : gru_layers_.size();
  if (T == 0) {
    // No live steps anywhere: the summary is the zero initial state.
    result.summary = ad::constant(t, Matrix::Zero(B, summaryDim()));
  }
  for (size_t layer = 0; layer < n_layers && T > 0; ++layer) {
    if (config_.architecture == Arch::bilstm) {
      result = nn::runBidirectional(t, lstm_layers_[layer], layer_in, masks, B,
                                    with_grad);
    } else {
      result = nn::runBidirectional(t, gru_layers_[layer], layer_in, masks, B,
                                    with_grad);
    }
    layer_in = result.step_outputs;
  }
  if (T > 0 && config_.recurrent_summary == RecurrentSummary::max_pool) {
    return nn::maskedMaxOverSteps(t, result.step_outputs, masks, B,
                                  summaryDim());
  }
  return result.summary;
}

Classifier::Forward Classifier::forward(ad::Tape& t,
                                        std::span<const ModelInput> batch,
                                        bool with_grad, ad::Rng* dropout_rng) {
  if (batch.empty()) {
    throw RangeError("forward: empty batch");
  }
  ad::Var summary = config_.architecture == Arch::cnn
                        ? forwardCnn(t, batch, with_grad)
                        : forwardRecurrent(t, batch, with_grad);
  const double rate =
      (dropout_rng && config_.dropout_rate) ? *config_.dropout_rate : 0.0;
  ad::Var h = ad::relu(dense1_.apply(t, summary, with_grad));
  if (rate > 0.0) h = ad::dropout(h, rate, *dropout_rng);
  h = ad::relu(dense2_.apply(t, h, with_grad));
  if (rate > 0.0) h = ad::dropout(h, rate, *dropout_rng);
  ad::Var logits = out_.apply(t, h, with_grad);
  return {logits, ad::sigmoid(logits)};
}

Eigen::VectorXd Classifier::predictScores(
    std::span<const ModelInput> batch) const {
  if (batch.empty()) return Eigen::VectorXd(0);
  // Inference builds constant-only graphs, so this never mutates parameters.
  auto* self = const_cast<Classifier*>(this);
  Eigen::VectorXd out(static_cast<long>(batch.size()));
  constexpr size_t kChunk = 64;
  for (size_t start = 0; start < batch.size(); start += kChunk) {
    const size_t n = std::min(kChunk, batch.size() - start);
    ad::Tape t;
    auto fwd = self->forward(t, batch.subspan(start, n), /*with_grad=*/false,
                             nullptr);
    out.segment(static_cast<long>(start), static_cast<long>(n)) =
        fwd.scores.value().col(0);
  }
  return out;
}

ad::Var Classifier::buildLoss(ad::Tape& t, std::span<const ModelInput> batch,
                              const Eigen::VectorXd& targets, bool with_grad,
                              ad::Rng* dropout_rng) {
  if (static_cast<long>(batch.size()) != targets.size()) {
    throw AlignmentError("buildLoss: batch/target size mismatch");
  }
  auto fwd = forward(t, batch, with_grad, dropout_rng);
  ad::Var loss = config_.head == Head::binary
                     ? ad::bceWithLogitsLoss(fwd.logits, targets)
                     : ad::mseLoss(fwd.scores, targets);
  if (config_.l2_coefficient > 0.0) {
    ad::Var penalty{};
    bool first = true;
    for (ad::Param* p : parameters()) {
      ad::Var term = with_grad ? ad::paramSquaredNorm(t, *p)
                               : ad::constant(t, [&] {
                                   Matrix m(1, 1);
                                   m(0, 0) = p->value.squaredNorm();
                                   return m;
                                 }());
      penalty = first ? term : ad::add(penalty, term);
      first = false;
    }
    loss = ad::add(loss, ad::scale(penalty, config_.l2_coefficient));
  }
  return loss;
}

std::vector<Eigen::MatrixXd> Classifier::saveValues() const {
  std::vector<Eigen::MatrixXd> out;
  for (const ad::Param* p : parameters()) out.push_back(p->value);
  return out;
}

void Classifier::restoreValues(const std::vector<Eigen::MatrixXd>& values) {
  auto params = parameters();
  if (values.size() != params.size()) {
    throw IntegrityError("restoreValues: parameter count mismatch");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    params[i]->value = values[i];
  }
}

Eigen::VectorXd binaryTargets(std::span<const BinaryLabel> labels) {
  Eigen::VectorXd y(static_cast<long>(labels.size()));
  for (size_t i = 0; i < labels.size(); ++i) {
    y[static_cast<long>(i)] = labels[i] == BinaryLabel::toxic ? 1.0 : 0.0;
  }
  return y;
}

namespace {

double devMetric(const Classifier& model, const TrainingData& dev) {
  Eigen::VectorXd scores = model.predictScores(dev.inputs);
  if (model.config().head == Head::binary) {
    std::vector<BinaryLabel> pred;
    pred.reserve(dev.labels.size());
    for (long i = 0; i < scores.size(); ++i) {
      pred.push_back(scores[i] >= 0.5 ? BinaryLabel::toxic
                                      : BinaryLabel::nontoxic);
    }
    return f1Score(confusion(pred, dev.labels));
  }
  std::vector<double> s(scores.data(), scores.data() + scores.size());
  std::vector<double> targets(dev.targets.data(),
                              dev.targets.data() + dev.targets.size());
  return regressionErrors(s, targets).rmse;
}

bool improved(Head head, double candidate, double best) {
  return head == Head::binary ? candidate > best : candidate < best;
}

}  // namespace

TrainingHistory trainClassifier(Classifier& model, const TrainingData& train,
                                const TrainingData& dev,
                                const TrainConfig& config) {
  config.validate();
  if (train.size() == 0 || dev.size() == 0) {
    throw RangeError("trainClassifier: train and dev splits must be nonempty");
  }
  if (static_cast<long>(train.size()) != train.targets.size() ||
      train.size() != train.labels.size()) {
    throw AlignmentError("trainClassifier: train data misaligned");
  }

  TrainingHistory history;
  if (config.max_epochs == 0) return history;

  ad::Rng rng(config.seed);
  ad::AdamOptimizer adam({.learning_rate = config.learning_rate});
  auto params = model.parameters();

  const Head head = model.config().head;
  double best_metric = head == Head::binary
                           ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_values;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto order = rng.permutation(train.size());
    double loss_sum = 0.0;
    long batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t n =
          std::min(static_cast<size_t>(config.batch_size), order.size() - start);
      std::vector<ModelInput> batch;
      Eigen::VectorXd targets(static_cast<long>(n));
      batch.reserve(n);
      for (size_t i = 0; i < n; ++i) {
        batch.push_back(train.inputs[order[start + i]]);
        targets[static_cast<long>(i)] = train.targets[
            static_cast<long>(order[start + i])];
      }
      for (ad::Param* p : params) p->zeroGrad();
      ad::Tape t;
      ad::Var loss =
          model.buildLoss(t, batch, targets, /*with_grad=*/true, &rng);
      const double loss_value = loss.value()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite loss at epoch " +
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
    record.dev_metric = devMetric(model, dev);
    history.epochs.push_back(record);

    if (improved(head, record.dev_metric, best_metric)) {
      best_metric = record.dev_metric;
      best_values = model.saveValues();
      history.best_epoch = epoch;
      history.best_metric = best_metric;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= config.patience) break;
    }
  }

  if (!best_values.empty()) {
    model.restoreValues(best_values);
  }
  return history;
}

}  // namespace toxdet

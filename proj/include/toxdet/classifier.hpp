#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toxdet/corpus.hpp"
#include "toxdet/metrics.hpp"
#include "toxdet/nn.hpp"

namespace toxdet {

enum class Arch { cnn, bilstm, bigru };
enum class InputKind { onehot_trainable, fixed_features };
enum class Head { binary, regression };
enum class RecurrentSummary { final_state, max_pool };

std::string_view archName(Arch a);
Arch archFromName(std::string_view name);
std::string_view inputKindName(InputKind k);
InputKind inputKindFromName(std::string_view name);
std::string_view headName(Head h);
Head headFromName(std::string_view name);
std::string_view summaryName(RecurrentSummary s);
RecurrentSummary summaryFromName(std::string_view name);

struct ConvSpec {
  int n_layers = 1;  // 1 or 2
  int kernel = 4;    // 3..5
  int channels = 128;
};

struct RecurrentSpec {
  int n_layers = 1;  // 1 or 2
  int units = 128;   // 50 or 128 per direction
};

struct ModelConfig {
  Arch architecture = Arch::bilstm;
  InputKind input = InputKind::fixed_features;
  int trainable_embedding_dim = 128;  // onehot path only
  std::optional<ConvSpec> conv_layers;
  std::optional<RecurrentSpec> recurrent_layers;
  int dense_units_1 = 128;  // 64..256
  int dense_units_2 = 32;   // 16..64
  std::optional<double> dropout_rate;  // 0.5 when enabled
  double l2_coefficient = 1e-4;
  Head head = Head::binary;
  RecurrentSummary recurrent_summary = RecurrentSummary::final_state;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-3;  // adam
  int batch_size = 32;
  int max_epochs = 20;
  int patience = 3;
  uint64_t seed = 13;

  void validate() const;
};

// One comment ready for the model: token indices for the one-hot path or a
// feature matrix for the fixed path. May carry padding beyond `length`
// (negative length means "use everything present").
struct ModelInput {
  std::vector<int> ids;
  Eigen::MatrixXd features;
  long length = -1;

  static ModelInput fromIds(std::vector<int> token_ids, long len = -1);
  static ModelInput fromFeatures(Eigen::MatrixXd f, long len = -1);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-batch loss including the L2 term
  double dev_metric = 0.0;  // F1 at 0.5 (binary) or RMSE (regression)
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_metric = 0.0;
};

class Classifier {
 public:
  // input_dim: vocabulary size for onehot_trainable, provider dimension for
  // fixed_features.
  Classifier(ModelConfig config, long input_dim, uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  long inputDim() const { return input_dim_; }
  uint64_t initSeed() const { return init_seed_; }
  // Width of the representation entering the dense stack.
  long summaryDim() const;

  std::vector<ad::Param*> parameters();
  std::vector<const ad::Param*> parameters() const;

  // Post-sigmoid score per input, batched with masking; deterministic and
  // read-only (dropout off).
  Eigen::VectorXd predictScores(std::span<const ModelInput> batch) const;

  // Builds scores (and logits) for one batch on the given tape.
  struct Forward {
    ad::Var logits;  // B x 1
    ad::Var scores;  // B x 1, sigmoid(logits)
  };
  Forward forward(ad::Tape& t, std::span<const ModelInput> batch, bool with_grad,
                  ad::Rng* dropout_rng);

  // Total training loss for a batch: data term (BCE on logits for the binary
  // head, MSE on scores for regression) plus l2_coefficient * sum of squared
  // parameters.
  ad::Var buildLoss(ad::Tape& t, std::span<const ModelInput> batch,
                    const Eigen::VectorXd& targets, bool with_grad,
                    ad::Rng* dropout_rng);

  // Snapshot/restore of parameter values (early stopping keeps the best).
  std::vector<Eigen::MatrixXd> saveValues() const;
  void restoreValues(const std::vector<Eigen::MatrixXd>& values);

 private:
  ModelConfig config_;
  long input_dim_ = 0;
  uint64_t init_seed_ = 0;

  ad::Param embedding_;  // onehot path
  std::vector<nn::Conv1dLayer> convs_;
  std::vector<nn::BidirectionalLayer<nn::LstmCell>> lstm_layers_;
  std::vector<nn::BidirectionalLayer<nn::GruCell>> gru_layers_;
  nn::DenseLayer dense1_, dense2_, out_;

  long featureDim() const;
  ad::Var forwardCnn(ad::Tape& t, std::span<const ModelInput> batch,
                     bool with_grad);
  ad::Var forwardRecurrent(ad::Tape& t, std::span<const ModelInput> batch,
                           bool with_grad);
};

// Inputs, regression targets in [0,1], and binary labels for one split.
struct TrainingData {
  std::vector<ModelInput> inputs;
  Eigen::VectorXd targets;
  std::vector<BinaryLabel> labels;

  size_t size() const { return inputs.size(); }
};

// Adam + early stopping on the dev metric (patience epochs without
// improvement). Returns per-epoch history; the classifier ends up with the
// best-dev parameters. max_epochs = 0 returns the initialization untouched.
TrainingHistory trainClassifier(Classifier& model, const TrainingData& train,
                                const TrainingData& dev,
                                const TrainConfig& config);

Eigen::VectorXd binaryTargets(std::span<const BinaryLabel> labels);

}  // namespace toxdet

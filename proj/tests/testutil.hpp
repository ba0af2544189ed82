#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "toxdet/classifier.hpp"
#include "toxdet/corpus.hpp"
#include "toxdet/vocab.hpp"

namespace toxtest {

inline std::string fixturePath(const std::string& name) {
  return std::string(TOXDET_FIXTURE_DIR) + "/" + name;
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline toxdet::WordPieceVocab loadFixtureWordpieces() {
  std::ifstream in(fixturePath("wordpiece_vocab.txt"));
  if (!in.good()) {
    throw std::runtime_error("cannot open fixture wordpiece_vocab.txt");
  }
  return toxdet::WordPieceVocab::load(in, "wordpiece_vocab.txt");
}

// Linearly separable toy task: every comment is filler tokens plus one
// signal token; "bad" marks toxic (target 0.75), "good" nontoxic (0.25).
// A single-token feature decides the label, so any working trainer fits it.
struct ToySet {
  toxdet::Vocabulary vocab;
  toxdet::TrainingData train;
  toxdet::TrainingData dev;
};

inline ToySet makeToySet(toxdet::Head head, uint64_t seed, int n_train = 40,
                         int n_dev = 16) {
  using namespace toxdet;
  ToySet set;
  std::vector<std::pair<std::string, long>> entries = {
      {"bad", 100}, {"good", 90}, {"f1", 80}, {"f2", 70}, {"f3", 60},
      {"f4", 50},   {"f5", 40},   {"f6", 30}, {"f7", 20}, {"f8", 10}};
  set.vocab = Vocabulary(std::move(entries));

  ad::Rng rng(seed);
  auto make = [&](int n, TrainingData& data) {
    data.targets.resize(n);
    for (int i = 0; i < n; ++i) {
      const bool toxic = i % 2 == 0;
      const int len = 4 + static_cast<int>(rng.bits() % 4);  // 4..7 tokens
      const int signal_pos = static_cast<int>(rng.bits() % len);
      std::vector<std::string> tokens;
      for (int t = 0; t < len; ++t) {
        if (t == signal_pos) {
          tokens.push_back(toxic ? "bad" : "good");
        } else {
          tokens.push_back("f" + std::to_string(1 + rng.bits() % 8));
        }
      }
      data.inputs.push_back(
          ModelInput::fromIds(encodeTokens(tokens, set.vocab)));
      data.labels.push_back(toxic ? BinaryLabel::toxic : BinaryLabel::nontoxic);
      data.targets[i] = head == Head::binary ? (toxic ? 1.0 : 0.0)
                                             : (toxic ? 0.75 : 0.25);
    }
  };
  make(n_train, set.train);
  make(n_dev, set.dev);
  return set;
}

// Small model configs that train in milliseconds but stay inside the
// documented hyperparameter ranges.
inline toxdet::ModelConfig toyModelConfig(toxdet::Arch arch, toxdet::Head head) {
  toxdet::ModelConfig config;
  config.architecture = arch;
  config.input = toxdet::InputKind::onehot_trainable;
  config.trainable_embedding_dim = 16;
  if (arch == toxdet::Arch::cnn) {
    config.conv_layers = toxdet::ConvSpec{1, 3, 32};
  } else {
    config.recurrent_layers = toxdet::RecurrentSpec{1, 50};
  }
  config.dense_units_1 = 64;
  config.dense_units_2 = 16;
  config.l2_coefficient = 1e-5;
  config.head = head;
  return config;
}

inline toxdet::TrainConfig toyTrainConfig(uint64_t seed) {
  toxdet::TrainConfig tc;
  tc.learning_rate = 0.02;
  tc.batch_size = 8;
  tc.max_epochs = 20;
  tc.patience = 20;  // let the toy runs use the full budget
  tc.seed = seed;
  return tc;
}

}  // namespace toxtest

// Acceptance suite: one line per criterion, nonzero exit if any mandatory
// criterion fails. The desk-scale criteria (1-11) run on fixtures in minutes.
// Full-scale criteria (12-15) need the real corpus, pretrained vectors, and
// models trained through the CLI; they are checked when the corresponding
// artifacts are supplied and reported as skipped otherwise (see README).

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "toxdet/artifacts.hpp"
#include "toxdet/attack.hpp"
#include "toxdet/classifier.hpp"
#include "toxdet/embedding.hpp"
#include "toxdet/encoder.hpp"
#include "toxdet/metrics.hpp"
#include "toxdet/pipeline.hpp"
#include "gradcheck.hpp"
#include "testutil.hpp"

using namespace toxdet;
using ad::Rng;

namespace {

struct Outcome {
  enum Kind { pass, fail, skip } kind = fail;
  std::string detail;
};

Outcome ok(std::string detail = "") { return {Outcome::pass, std::move(detail)}; }
Outcome bad(std::string detail) { return {Outcome::fail, std::move(detail)}; }
Outcome skipped(std::string detail) { return {Outcome::skip, std::move(detail)}; }

// ---- C1: labeling oracle over all annotation multisets of size <= 6 --------

Outcome c1LabelingOracle() {
  std::vector<int> multiset;
  long checked = 0, mismatches = 0;
  std::function<void(int, int)> recurse = [&](int depth, int min_label) {
    if (depth > 0) {
      auto s = summarizeLabels(multiset);
      int toxic = 0, healthy = 0;
      long sum = 0;
      for (int l : multiset) {
        if (l <= -1) ++toxic;
        if (l >= 1) ++healthy;
        sum += l;
      }
      const bool expect_toxic = toxic > healthy && toxic > 2;
      const double mean = static_cast<double>(sum) / multiset.size();
      const double expect_score = (2.0 - mean) / 4.0;
      if ((binaryLabel(s) == BinaryLabel::toxic) != expect_toxic ||
          toxicityScore(s) != expect_score) {
        ++mismatches;
      }
      ++checked;
    }
    if (depth == 6) return;
    for (int l = min_label; l <= 2; ++l) {
      multiset.push_back(l);
      recurse(depth + 1, l);
      multiset.pop_back();
    }
  };
  recurse(0, -2);
  std::ostringstream detail;
  detail << checked << " multisets, " << mismatches << " mismatches";
  return mismatches == 0 && checked == 461 ? ok(detail.str()) : bad(detail.str());
}

// ---- C2: mirror symmetry ----------------------------------------------------

Outcome c2MirrorSymmetry() {
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.bits() % 10);
    std::vector<int> labels, mirrored;
    for (int i = 0; i < n; ++i) {
      int l = static_cast<int>(rng.bits() % 5) - 2;
      labels.push_back(l);
      mirrored.push_back(-l);
    }
    const double sum = toxicityScore(summarizeLabels(labels)) +
                       toxicityScore(summarizeLabels(mirrored));
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  std::ostringstream detail;
  detail << "1000 summaries, worst |sum-1| = " << worst;
  return worst <= 1e-12 ? ok(detail.str()) : bad(detail.str());
}

// ---- C3: wordpiece round trip -----------------------------------------------

Outcome c3WordpieceRoundTrip() {
  auto wp = toxtest::loadFixtureWordpieces();
  std::ifstream in(toxtest::fixturePath("wordlist_100.txt"));
  if (!in) return bad("fixture wordlist missing");
  std::string word;
  int n = 0, exact = 0;
  while (in >> word) {
    ++n;
    auto pieces = wordpieceTokenize(word, wp);
    bool unknown = false;
    for (const auto& p : pieces) unknown = unknown || p == wp.unknown;
    if (!unknown && joinWordpieces(pieces, wp) == word) ++exact;
  }
  std::ostringstream detail;
  detail << exact << "/" << n << " words reconstructed";
  return n == 100 && exact == 100 ? ok(detail.str()) : bad(detail.str());
}

// ---- C4: OOV mean vector ------------------------------------------------------

Outcome c4OovMean() {
  Rng rng(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng.bits() % 16);
    const int n = 1 + static_cast<int>(rng.bits() % 50);
    std::vector<std::pair<std::string, Eigen::VectorXd>> rows;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v(dim);
      for (int j = 0; j < dim; ++j) v[j] = rng.uniform(-100.0, 100.0);
      rows.emplace_back("t" + std::to_string(i), v);
    }
    auto table = EmbeddingTable::fromRows(rows);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(dim);
    for (const auto& [_, v] : rows) expected += v;
    expected /= static_cast<double>(n);
    const double rel = (table.oovVector() - expected).norm() /
                       std::max(1.0, expected.norm());
    worst = std::max(worst, rel);
  }
  std::ostringstream detail;
  detail << "100 tables, worst relative deviation = " << worst;
  return worst <= 1e-9 ? ok(detail.str()) : bad(detail.str());
}

// ---- C5: calibration oracle ---------------------------------------------------

Outcome c5CalibrationOracle() {
  Rng rng(1005);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.bits() % 200);
    std::vector<double> scores(n);
    std::vector<BinaryLabel> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.bits() % 1001) / 1000.0;
      labels[i] = rng.bits() % 2 ? BinaryLabel::toxic : BinaryLabel::nontoxic;
    }
    auto cal = calibrateThreshold(scores, labels);
    double sweep_best = -1.0;
    for (int g = 0; g <= 10000; ++g) {
      const double t = static_cast<double>(g) / 10000.0;
      std::vector<BinaryLabel> pred;
      pred.reserve(scores.size());
      for (double s : scores) {
        pred.push_back(s >= t ? BinaryLabel::toxic : BinaryLabel::nontoxic);
      }
      sweep_best = std::max(sweep_best, f1Score(confusion(pred, labels)));
    }
    if (cal.f1 == sweep_best) ++exact;
  }
  std::ostringstream detail;
  detail << exact << "/100 instances matched the 10001-point sweep exactly";
  return exact == 100 ? ok(detail.str()) : bad(detail.str());
}

// ---- C6: trainability matrix ---------------------------------------------------

Outcome c6Trainability() {
  std::ostringstream detail;
  int failures = 0;
  for (Arch arch : {Arch::cnn, Arch::bilstm, Arch::bigru}) {
    for (Head head : {Head::binary, Head::regression}) {
      for (uint64_t seed : {101ull, 202ull, 303ull}) {
        auto toy = toxtest::makeToySet(head, seed);
        Classifier model(toxtest::toyModelConfig(arch, head),
                         toy.vocab.size(), seed);
        auto history = trainClassifier(model, toy.train, toy.dev,
                                       toxtest::toyTrainConfig(seed));
        if (static_cast<int>(history.epochs.size()) > 20) ++failures;
        if (head == Head::binary) {
          Eigen::VectorXd scores = model.predictScores(toy.dev.inputs);
          std::vector<BinaryLabel> pred;
          for (long i = 0; i < scores.size(); ++i) {
            pred.push_back(scores[i] >= 0.5 ? BinaryLabel::toxic
                                            : BinaryLabel::nontoxic);
          }
          const double f1 = f1Score(confusion(pred, toy.dev.labels));
          if (f1 != 1.0) {
            ++failures;
            detail << archName(arch) << "/binary/seed" << seed << " F1=" << f1
                   << " ";
          }
        } else {
          Eigen::VectorXd scores = model.predictScores(toy.train.inputs);
          const double mse =
              (scores - toy.train.targets).squaredNorm() / scores.size();
          if (!(mse < 1e-2)) {
            ++failures;
            detail << archName(arch) << "/regression/seed" << seed
                   << " MSE=" << mse << " ";
          }
        }
      }
    }
  }
  if (failures == 0) {
    return ok("18/18 runs reached F1=1.0 or MSE<1e-2 within 20 epochs");
  }
  return bad(std::to_string(failures) + " runs missed: " + detail.str());
}

// ---- C7: masking correctness ----------------------------------------------------

Outcome c7Masking() {
  double worst = 0.0;
  for (Arch arch : {Arch::cnn, Arch::bilstm, Arch::bigru}) {
    auto toy = toxtest::makeToySet(Head::binary, 1007);
    Classifier model(toxtest::toyModelConfig(arch, Head::binary),
                     toy.vocab.size(), 1007);
    Rng rng(2007);
    std::vector<ModelInput> singles;
    for (int i = 0; i < 50; ++i) {
      const int len = 1 + static_cast<int>(rng.bits() % 12);
      std::vector<int> ids;
      for (int t = 0; t < len; ++t) {
        ids.push_back(static_cast<int>(rng.bits() % toy.vocab.size()));
      }
      singles.push_back(ModelInput::fromIds(std::move(ids)));
    }
    long max_len = 0;
    for (const auto& in : singles) max_len = std::max(max_len, in.length);
    std::vector<ModelInput> padded = singles;
    for (auto& in : padded) {
      const long true_len = in.length;
      while (static_cast<long>(in.ids.size()) < max_len) {
        in.ids.push_back(static_cast<int>(rng.bits() % toy.vocab.size()));
      }
      in.length = true_len;
    }
    Eigen::VectorXd batch_scores = model.predictScores(padded);
    for (size_t i = 0; i < singles.size(); ++i) {
      auto one = model.predictScores(std::span<const ModelInput>(&singles[i], 1));
      worst = std::max(worst,
                       std::abs(one[0] - batch_scores[static_cast<long>(i)]));
    }
  }
  std::ostringstream detail;
  detail << "150 inputs, worst |single - padded-batch| = " << worst;
  return worst < 1e-5 ? ok(detail.str()) : bad(detail.str());
}

// ---- C8: gradient check (from-scratch backend) -----------------------------------

Outcome c8GradientCheck() {
  // The backend is the in-tree tape, so the check runs (no autodiff library
  // to defer to). Micro-models per architecture plus both heads.
  Rng rng(1008);
  double worst = 0.0;

  {
    nn::LstmCell cell;
    cell.init("micro", 1, 1, rng);  // 12 parameters
    Eigen::MatrixXd x0 = toxtest::randomMatrix(1, 1, rng);
    Eigen::MatrixXd x1 = toxtest::randomMatrix(1, 1, rng);
    std::vector<ad::Param*> params;
    cell.collect(params);
    worst = std::max(worst, toxtest::gradientCheck(params, [&](ad::Tape& t) {
      auto w = cell.materialize(t, true);
      ad::Var h = ad::constant(t, Eigen::MatrixXd::Zero(1, 1));
      ad::Var c = ad::constant(t, Eigen::MatrixXd::Zero(1, 1));
      std::tie(h, c) = cell.step(w, ad::constant(t, x0), h, c);
      std::tie(h, c) = cell.step(w, ad::constant(t, x1), h, c);
      return ad::bceWithLogitsLoss(h, ad::Vector::Ones(1));
    }));
  }
  {
    nn::GruCell cell;
    cell.init("micro", 1, 1, rng);  // 9 parameters
    Eigen::MatrixXd x0 = toxtest::randomMatrix(1, 1, rng);
    std::vector<ad::Param*> params;
    cell.collect(params);
    worst = std::max(worst, toxtest::gradientCheck(params, [&](ad::Tape& t) {
      auto w = cell.materialize(t, true);
      ad::Var h = ad::constant(t, Eigen::MatrixXd::Zero(1, 1));
      h = cell.step(w, ad::constant(t, x0), h);
      return ad::mseLoss(ad::sigmoid(h), ad::Vector::Zero(1));
    }));
  }
  {
    nn::Conv1dLayer conv;
    conv.init("micro", 3, 1, 2, rng);  // 8 parameters
    Eigen::MatrixXd x = toxtest::randomMatrix(5, 1, rng);
    std::vector<ad::Param*> params;
    conv.collect(params);
    worst = std::max(worst, toxtest::gradientCheck(params, [&](ad::Tape& t) {
      ad::Var y = ad::relu(conv.apply(t, ad::constant(t, x), true));
      return ad::mseLoss(ad::transposed(ad::colwiseMax(y)),
                         ad::Vector::Zero(2));
    }));
  }
  std::ostringstream detail;
  detail << "micro-model worst relative error = " << worst;
  return worst < 1e-4 ? ok(detail.str()) : bad(detail.str());
}

// ---- C9: attack harness oracle -----------------------------------------------------

Outcome c9AttackOracle() {
  std::vector<TokenSequence> seqs;
  std::vector<BinaryLabel> truth;
  auto add = [&](std::string id, std::vector<std::string> tokens,
                 BinaryLabel label) {
    TokenSequence s;
    s.comment_id = std::move(id);
    s.tokens = std::move(tokens);
    seqs.push_back(std::move(s));
    truth.push_back(label);
  };
  add("1", {"you", "are", "nice"}, BinaryLabel::nontoxic);
  add("2", {"fuck", "you"}, BinaryLabel::toxic);
  add("3", {"have", "a", "good", "day"}, BinaryLabel::nontoxic);
  add("4", {"what", "the", "fuck"}, BinaryLabel::toxic);
  add("5", {"thanks", "again"}, BinaryLabel::nontoxic);

  Scorer keyword = [](const TokenSequence& seq) {
    return std::find(seq.tokens.begin(), seq.tokens.end(), "fuck") !=
                   seq.tokens.end()
               ? 1.0
               : 0.0;
  };
  PreprocessConfig cfg;
  auto report = attackEval(keyword, seqs, truth, AttackConfig{}, 0.5, cfg);
  std::ostringstream detail;
  detail << "nontoxic->toxic "
         << (report.rate_nontoxic_to_toxic ? *report.rate_nontoxic_to_toxic
                                           : -1.0)
         << "%, toxic->nontoxic "
         << (report.rate_toxic_to_nontoxic ? *report.rate_toxic_to_nontoxic
                                           : -1.0)
         << "%";
  const bool pass = report.rate_nontoxic_to_toxic &&
                    *report.rate_nontoxic_to_toxic == 100.0 &&
                    report.rate_toxic_to_nontoxic &&
                    *report.rate_toxic_to_nontoxic == 0.0;
  return pass ? ok(detail.str()) : bad(detail.str());
}

// ---- C10: fine-tune adapter ---------------------------------------------------------

Outcome c10FineTune() {
  MiniatureTransformer enc(toxtest::loadFixtureWordpieces(),
                           MiniatureTransformer::Config{}, 1010);

  // truncation hook: a 300-piece input must reach the encoder as 256 pieces
  std::vector<std::string> many(300, "a");
  auto ids = enc.encodeIds(many, 256);
  {
    ad::Tape t;
    enc.forwardPooled(t, ids, false);
  }
  if (enc.lastSequenceLength() != 256) {
    return bad("encoder saw " + std::to_string(enc.lastSequenceLength()) +
               " pieces, expected 256");
  }

  FineTunedClassifier model(&enc, Head::binary, 1010);
  FineTuneData train, dev;
  Rng rng(1010);
  const std::vector<std::string> filler = {"the", "you", "are", "a",
                                           "person", "page"};
  auto fill = [&](FineTuneData& data, int n) {
    data.targets.resize(n);
    for (int i = 0; i < n; ++i) {
      const bool toxic = i % 2 == 0;
      const int len = 3 + static_cast<int>(rng.bits() % 3);
      const int signal = static_cast<int>(rng.bits() % len);
      std::vector<std::string> words;
      for (int t = 0; t < len; ++t) {
        words.push_back(t == signal ? (toxic ? "fuck" : "love")
                                    : filler[rng.bits() % filler.size()]);
      }
      data.word_seqs.push_back(std::move(words));
      data.labels.push_back(toxic ? BinaryLabel::toxic : BinaryLabel::nontoxic);
      data.targets[i] = toxic ? 1.0 : 0.0;
    }
  };
  fill(train, 40);
  fill(dev, 16);

  FineTuneConfig config;
  config.max_sequence_length = 32;
  config.batch_size = 8;
  config.learning_rate = 5e-3;
  config.epochs = 12;
  config.seed = 1010;
  fineTune(model, train, dev, config);

  Eigen::VectorXd scores =
      model.predictScores(dev.word_seqs, config.max_sequence_length);
  std::vector<BinaryLabel> pred;
  for (long i = 0; i < scores.size(); ++i) {
    pred.push_back(scores[i] >= 0.5 ? BinaryLabel::toxic
                                    : BinaryLabel::nontoxic);
  }
  const double f1 = f1Score(confusion(pred, dev.labels));
  std::ostringstream detail;
  detail << "truncation 300->256 ok, dev F1 = " << f1;
  return f1 == 1.0 ? ok(detail.str()) : bad(detail.str());
}

// ---- C11: metric formulas ---------------------------------------------------------

Outcome c11MetricFormulas() {
  if (f1Score({2, 1, 1, 0}) != 2.0 / 3.0) {
    return bad("f1(tp=2,fp=1,fn=1) != 2/3");
  }
  Rng rng(1011);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.bits() % 64);
    std::vector<double> s(n), t(n);
    for (int i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      t[i] = rng.uniform();
    }
    auto err = regressionErrors(s, t);
    if (err.rmse < err.mae - 1e-12) {
      return bad("rmse < mae on a random vector");
    }
  }
  return ok("f1 formula exact, rmse >= mae on 1000 random vectors");
}

// ---- full-scale criteria (12-15): checked from CLI-produced artifacts -------------

std::string g_full_dir;  // --full-dir

nlohmann::json loadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

Outcome c12CorpusStats() {
  const fs::path file = fs::path(g_full_dir) / "stats.json";
  if (g_full_dir.empty() || !fs::exists(file)) {
    return skipped("needs the full Detox corpus: run ingest and pass "
                   "--full-dir with its stats.json");
  }
  auto j = loadJson(file);
  struct Cell {
    const char* split;
    const char* field;
    double expected;
  };
  // Reference corpus statistics ('K' = 1000, 'M' = 1e6).
  const Cell cells[] = {
      {"train", "n_comments", 88900},    {"train", "n_toxic", 16000},
      {"train", "n_nontoxic", 72900},    {"train", "total_word_count", 4.3e6},
      {"train", "n_unique_words", 106e3}, {"dev", "n_comments", 32100},
      {"dev", "n_toxic", 5600},          {"dev", "n_nontoxic", 26500},
      {"dev", "total_word_count", 1.9e6}, {"dev", "n_unique_words", 64e3},
      {"test", "n_comments", 31800},     {"test", "n_toxic", 5500},
      {"test", "n_nontoxic", 26300},     {"test", "total_word_count", 1.9e6},
      {"test", "n_unique_words", 64e3},
  };
  std::ostringstream detail;
  int misses = 0;
  for (const auto& cell : cells) {
    const double got = j.at(cell.split).at(cell.field).get<double>();
    const double rel = std::abs(got - cell.expected) / cell.expected;
    if (rel > 0.10) {
      ++misses;
      detail << cell.split << "." << cell.field << "=" << got << " (expected "
             << cell.expected << " +-10%) ";
    }
  }
  if (misses == 0) {
    // The corpus ships 96k training comments while the reference table says
    // 88.9K after a filter that only removes ~5% of toxic ones; the origin of
    // the remaining gap is unknown, hence the tolerance-based check.
    return ok("all 15 cells within 10% of the reference table (known "
              "96k->88.9K training-count gap absorbed by the tolerance)");
  }
  return bad(std::to_string(misses) + " cells out of tolerance: " + detail.str());
}

Outcome checkF1(const char* file, double expected, std::ostringstream& detail) {
  const fs::path path = fs::path(g_full_dir) / file;
  if (!fs::exists(path)) {
    detail << file << " missing ";
    return skipped("");
  }
  const double f1 = loadJson(path).at("f1").get<double>() * 100.0;
  detail << file << " F1=" << f1 << " (expected " << expected << "+-2.0) ";
  return std::abs(f1 - expected) <= 2.0 ? ok("") : bad("");
}

Outcome c13BinaryF1() {
  if (g_full_dir.empty()) {
    return skipped("needs full-scale bi-LSTM models: evaluate each and pass "
                   "--full-dir with mikolov/fasttext/bert metrics");
  }
  std::ostringstream detail;
  const std::pair<const char*, double> targets[] = {
      {"binary_mikolov_metrics.json", 72.7},
      {"binary_fasttext_metrics.json", 74.1},
      {"binary_bert_metrics.json", 75.6},
      {"binary_finetune_metrics.json", 78.2},
  };
  bool any = false, all_pass = true;
  for (const auto& [file, expected] : targets) {
    auto r = checkF1(file, expected, detail);
    if (r.kind == Outcome::fail) all_pass = false;
    if (r.kind != Outcome::skip) any = true;
  }
  if (!any) return skipped("no full-scale binary metrics found in --full-dir");
  return all_pass ? ok(detail.str()) : bad(detail.str());
}

Outcome c14RegressionErrors() {
  if (g_full_dir.empty()) {
    return skipped("needs full-scale regression bi-LSTM models (BERT "
                   "configurations)");
  }
  std::ostringstream detail;
  bool any = false, all_pass = true;
  for (const char* file :
       {"regression_bert_metrics.json", "regression_finetune_metrics.json"}) {
    const fs::path path = fs::path(g_full_dir) / file;
    if (!fs::exists(path)) continue;
    any = true;
    auto j = loadJson(path);
    const double rmse = j.at("rmse").get<double>();
    const double mae = j.at("mae").get<double>();
    detail << file << " rmse=" << rmse << " mae=" << mae << " ";
    if (std::abs(rmse - 0.06) > 0.01 || std::abs(mae - 0.047) > 0.01) {
      all_pass = false;
    }
  }
  if (!any) {
    return skipped("no full-scale regression metrics found in --full-dir");
  }
  return all_pass ? ok(detail.str()) : bad(detail.str());
}

Outcome c15AttackOrdering() {
  if (g_full_dir.empty()) {
    return skipped("needs full-scale attack reports for mikolov, fasttext, "
                   "and bert bi-LSTM models");
  }
  const char* files[] = {"attack_mikolov.json", "attack_fasttext.json",
                         "attack_bert.json"};
  double rates[3];
  for (int i = 0; i < 3; ++i) {
    const fs::path path = fs::path(g_full_dir) / files[i];
    if (!fs::exists(path)) {
      return skipped(std::string(files[i]) + " not found in --full-dir");
    }
    rates[i] = loadJson(path)
                   .at("nontoxic_to_toxic")
                   .at("rate_percent")
                   .get<double>();
  }
  std::ostringstream detail;
  detail << "nontoxic->toxic rates: mikolov " << rates[0] << "%, fasttext "
         << rates[1] << "%, bert " << rates[2] << "%";
  const bool pass = rates[2] < rates[0] && rates[2] < rates[1];
  return pass ? ok(detail.str()) : bad(detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full-dir") == 0 && i + 1 < argc) {
      g_full_dir = argv[++i];
    }
  }

  struct Criterion {
    const char* label;
    std::function<Outcome()> run;
    bool mandatory;
  };
  const std::vector<Criterion> criteria = {
      {"C1  labeling oracle equivalence", c1LabelingOracle, true},
      {"C2  mirror symmetry of toxicity score", c2MirrorSymmetry, true},
      {"C3  wordpiece round-trip", c3WordpieceRoundTrip, true},
      {"C4  OOV mean vector", c4OovMean, true},
      {"C5  threshold calibration oracle", c5CalibrationOracle, true},
      {"C6  trainability on the separable toy set", c6Trainability, true},
      {"C7  masking correctness", c7Masking, true},
      {"C8  gradient check (from-scratch backend)", c8GradientCheck, true},
      {"C9  attack harness oracle", c9AttackOracle, true},
      {"C10 fine-tune adapter", c10FineTune, true},
      {"C11 metric formulas", c11MetricFormulas, true},
      {"C12 corpus statistics vs reference table", c12CorpusStats, false},
      {"C13 binary bi-LSTM F1 vs reference results", c13BinaryF1, false},
      {"C14 regression RMSE/MAE vs reference values", c14RegressionErrors, false},
      {"C15 attack-rate ordering across representations", c15AttackOrdering,
       false},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = bad(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.kind == Outcome::pass   ? "PASS"
                      : outcome.kind == Outcome::skip ? "SKIP"
                                                      : "FAIL";
    std::cout << "[" << tag << "] " << criterion.label;
    if (!outcome.detail.empty()) std::cout << " -- " << outcome.detail;
    std::cout << "\n";
    if (outcome.kind == Outcome::fail) ++failures;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  return 0;
}

// toxdet: corpus ingestion, preprocessing, training, evaluation, calibration,
// and word-append robustness checks for toxic-comment classifiers.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "toxdet/artifacts.hpp"
#include "toxdet/error.hpp"
#include "toxdet/pipeline.hpp"
#include "toxdet/tsv.hpp"

namespace toxdet {
namespace {

PreprocessConfig modeConfig(const std::string& mode, int max_words) {
  PreprocessConfig cfg;
  if (mode == "word" || mode == "word_nopunct") {
    cfg.mode = TokenMode::word_nopunct;
  } else if (mode == "wordpiece" || mode == "wordpiece_keep_punct") {
    cfg.mode = TokenMode::wordpiece_keep_punct;
  } else {
    throw ConfigError("mode: expected word or wordpiece, got '" + mode + "'");
  }
  cfg.max_words = max_words;
  return cfg;
}

CorpusStats filteredViewStats(const LabeledDataset& dataset, int max_words) {
  // Statistics over the standard reporting view: training filter applied,
  // word tokens, truncated.
  PreprocessConfig cfg = modeConfig("word", max_words);
  return datasetStats(filterTraining(dataset, max_words), cfg);
}

int cmdIngest(const std::string& comments_path,
              const std::string& annotations_path, const std::string& out,
              const std::string& config_path, bool force) {
  ColumnMapping columns;
  if (!config_path.empty()) {
    columns = loadRunConfig(config_path).columns;
  }
  std::ifstream cf(comments_path);
  if (!cf) throw FormatError("cannot open comments file '" + comments_path + "'");
  std::ifstream af(annotations_path);
  if (!af) {
    throw FormatError("cannot open annotations file '" + annotations_path + "'");
  }
  auto comments = parseComments(cf, columns, comments_path);
  auto annotations = parseAnnotations(af, columns, annotations_path);
  auto dataset = buildDataset(comments, annotations);

  prepareOutputDir(out, force);
  writeLabeledDataset(out, dataset);
  CorpusStats stats = filteredViewStats(dataset, 200);
  writeStatsJson(fs::path(out) / "stats.json", stats);
  {
    // Re-run recipe: inputs, their hashes, and the column mapping. No
    // timestamps, so identical inputs give byte-identical output.
    nlohmann::json j;
    j["command"] = "ingest";
    j["inputs"] = {{comments_path, fnv64HexFile(comments_path)},
                   {annotations_path, fnv64HexFile(annotations_path)}};
    j["columns"] = {{"comment_id", columns.comment_id},
                    {"text", columns.text},
                    {"split", columns.split},
                    {"worker_id", columns.worker_id},
                    {"raw_label", columns.raw_label}};
    std::ofstream mout(fs::path(out) / "ingest_manifest.json");
    mout << j.dump(2) << '\n';
  }
  std::cout << "ingested " << dataset.comments.size() << " comments to " << out
            << "\n"
            << statsTable(stats);
  return 0;
}

int cmdStats(const std::string& dataset_dir, int max_words, bool filter,
             const std::string& out) {
  auto dataset = readLabeledDataset(dataset_dir);
  CorpusStats stats =
      filter ? filteredViewStats(dataset, max_words)
             : datasetStats(dataset, modeConfig("word", max_words));
  std::cout << statsTable(stats);
  if (!out.empty()) {
    writeStatsJson(out, stats);
  }
  return 0;
}

int cmdPreprocess(const std::string& dataset_dir, const std::string& out,
                  const std::string& mode, const std::string& wp_path,
                  int max_words, bool force) {
  PreprocessConfig cfg = modeConfig(mode, max_words);
  std::optional<WordPieceVocab> wp;
  if (cfg.mode == TokenMode::wordpiece_keep_punct) {
    if (wp_path.empty()) {
      throw ConfigError("--wordpiece-vocab: required in wordpiece mode");
    }
    std::ifstream in(wp_path);
    if (!in) throw FormatError("cannot open '" + wp_path + "'");
    wp = WordPieceVocab::load(in, wp_path);
  }
  auto dataset = filterTraining(readLabeledDataset(dataset_dir), max_words);
  prepareOutputDir(out, force);
  for (Split s : kSplits) {
    auto seqs = preprocessSplit(dataset, s, cfg, wp ? &*wp : nullptr);
    writeTokenTable(fs::path(out) / (std::string(splitName(s)) + ".tokens.tsv"),
                    seqs);
  }
  {
    nlohmann::json j;
    j["command"] = "preprocess";
    j["config"] = {{"mode", std::string(tokenModeName(cfg.mode))},
                   {"lowercase", cfg.lowercase},
                   {"max_words", cfg.max_words}};
    j["config_hash"] = fnv64Hex(j["config"].dump());
    j["dataset_dir"] = dataset_dir;
    std::ofstream mout(fs::path(out) / "preprocess_manifest.json");
    mout << j.dump(2) << '\n';
  }
  std::cout << "wrote token tables to " << out << "\n";
  return 0;
}

int cmdBuildVocab(const std::string& tokens_path, int top_n,
                  const std::string& out) {
  auto seqs = readTokenTable(tokens_path);
  Vocabulary vocab = buildVocab(seqs, top_n);
  std::ofstream os(out);
  if (!os) throw FormatError("cannot write '" + out + "'");
  vocab.save(os);
  std::cout << "vocabulary of " << vocab.entries().size() << " tokens (+"
            << 2 << " reserved) written to " << out << "\n";
  return 0;
}

struct LoadedModel {
  ModelManifest manifest;
  Pipeline pipeline;
  std::unique_ptr<Classifier> classifier;
  std::unique_ptr<EncoderHandle> encoder;
  std::unique_ptr<FineTunedClassifier> finetuned;

  double storedThreshold() const {
    if (manifest.config.task == "binary") return 0.5;
    return manifest.calibrated_threshold.value_or(0.5);
  }
  Scorer scorer() {
    if (finetuned) {
      return makeFineTuneScorer(*finetuned,
                                manifest.config.finetune.max_sequence_length);
    }
    return makeClassifierScorer(*classifier, pipeline);
  }
  BatchScorer batchScorer() {
    if (finetuned) {
      return makeFineTuneBatchScorer(
          *finetuned, manifest.config.finetune.max_sequence_length);
    }
    return makeClassifierBatchScorer(*classifier, pipeline);
  }
};

ModelConfig normalizedModelConfig(const RunConfig& cfg) {
  ModelConfig m = cfg.model;
  m.head = cfg.taskHead();
  m.input = cfg.representation.kind == "onehot" ? InputKind::onehot_trainable
                                                : InputKind::fixed_features;
  return m;
}

LoadedModel loadModel(const fs::path& dir, const StoreAmendment& amend = {}) {
  LoadedModel lm;
  lm.manifest = readManifest(dir);
  const RunConfig& cfg = lm.manifest.config;

  std::optional<Vocabulary> vocab;
  if (cfg.model_type == "classifier" && cfg.representation.kind == "onehot") {
    std::ifstream in(dir / "vocab.tsv");
    if (!in) throw FormatError("model dir is missing vocab.tsv");
    vocab = Vocabulary::load(in, (dir / "vocab.tsv").string());
  }
  lm.pipeline = buildPipeline(cfg, nullptr, std::move(vocab), amend);

  // Representation files must still be the ones the model was trained on.
  for (const auto& [path, hash] : lm.pipeline.input_hashes) {
    auto it = lm.manifest.input_hashes.find(path);
    if (it != lm.manifest.input_hashes.end() && it->second != hash) {
      throw IntegrityError("input file '" + path +
                           "' changed since training (hash mismatch)");
    }
  }

  if (cfg.model_type == "classifier") {
    lm.classifier = std::make_unique<Classifier>(normalizedModelConfig(cfg),
                                                 lm.pipeline.classifierInputDim(),
                                                 cfg.seed);
    auto params = lm.classifier->parameters();
    loadParams(dir / "params.bin", params);
  } else {
    lm.encoder = makeEncoder(cfg.encoder, *lm.pipeline.wp, cfg.seed);
    lm.finetuned = std::make_unique<FineTunedClassifier>(lm.encoder.get(),
                                                         cfg.taskHead(),
                                                         cfg.seed);
    auto params = lm.finetuned->parameters();
    loadParams(dir / "params.bin", params);
  }
  return lm;
}

int cmdTrain(const std::string& config_path, const std::string& out,
             bool force) {
  RunConfig cfg = loadRunConfig(config_path);
  if (!out.empty()) cfg.output_dir = out;
  if (cfg.output_dir.empty()) {
    throw ConfigError("output_dir: set it in the config or pass --out");
  }
  cfg.validate();
  if (cfg.dataset_dir.empty()) {
    throw ConfigError("dataset_dir: required for train");
  }

  auto dataset =
      filterTraining(readLabeledDataset(cfg.dataset_dir), cfg.preprocess.max_words);
  Pipeline pipeline = buildPipeline(cfg, &dataset);

  ModelManifest manifest;
  manifest.config = cfg;
  manifest.config.model = normalizedModelConfig(cfg);
  for (Split s : kSplits) {
    const fs::path f = fs::path(cfg.dataset_dir) /
                       (std::string(splitName(s)) + ".tsv");
    manifest.input_hashes[f.string()] = fnv64HexFile(f.string());
  }
  for (const auto& [p, h] : pipeline.input_hashes) manifest.input_hashes[p] = h;

  const Head head = cfg.taskHead();
  auto train_comments = dataset.split(Split::train);
  auto dev_comments = dataset.split(Split::dev);
  auto train_seqs =
      preprocessSplit(dataset, Split::train, cfg.preprocess, pipeline.wpOrNull());
  auto dev_seqs =
      preprocessSplit(dataset, Split::dev, cfg.preprocess, pipeline.wpOrNull());

  prepareOutputDir(cfg.output_dir, force);

  TrainingHistory history;
  if (cfg.model_type == "classifier") {
    auto train_data = makeClassifierData(pipeline, train_seqs, train_comments, head);
    auto dev_data = makeClassifierData(pipeline, dev_seqs, dev_comments, head);
    Classifier model(manifest.config.model, pipeline.classifierInputDim(),
                     cfg.seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    history = trainClassifier(model, train_data, dev_data, tc);
    manifest.input_dim = pipeline.classifierInputDim();
    auto params = model.parameters();
    for (const auto* p : params) manifest.parameter_count += p->count();
    saveParams(fs::path(cfg.output_dir) / "params.bin",
               {params.begin(), params.end()});
    if (pipeline.vocab) {
      std::ofstream os(fs::path(cfg.output_dir) / "vocab.tsv");
      pipeline.vocab->save(os);
    }
  } else {
    auto train_data = makeFineTuneData(train_seqs, train_comments, head);
    auto dev_data = makeFineTuneData(dev_seqs, dev_comments, head);
    auto encoder = makeEncoder(cfg.encoder, *pipeline.wp, cfg.seed);
    FineTunedClassifier model(encoder.get(), head, cfg.seed);
    FineTuneConfig fc = cfg.finetune;
    fc.seed = cfg.seed;
    history = fineTune(model, train_data, dev_data, fc);
    manifest.input_dim = encoder->hiddenDim();
    auto params = model.parameters();
    for (const auto* p : params) manifest.parameter_count += p->count();
    saveParams(fs::path(cfg.output_dir) / "params.bin",
               {params.begin(), params.end()});
  }

  manifest.history = history.epochs;
  manifest.dev_metric = history.best_metric;
  writeManifest(cfg.output_dir, manifest);

  std::cout << "model written to " << cfg.output_dir << "\n";
  for (const auto& e : history.epochs) {
    std::cout << "epoch " << e.epoch << "  train_loss " << e.train_loss
              << "  dev_metric " << e.dev_metric << "\n";
  }
  std::cout << "best dev metric: " << history.best_metric << " (epoch "
            << history.best_epoch << ")\n";
  return 0;
}

// Preprocessed sequences plus aligned labels/targets/texts for one split.
struct SplitView {
  std::vector<TokenSequence> seqs;
  std::vector<BinaryLabel> labels;
  std::vector<double> targets;
  std::vector<std::string> ids;
  std::vector<std::string> texts;
};

SplitView splitView(LoadedModel& lm, const std::string& dataset_override,
                    Split split) {
  const RunConfig& cfg = lm.manifest.config;
  std::string dir = dataset_override.empty() ? cfg.dataset_dir : dataset_override;
  if (dir.empty()) {
    throw ConfigError("dataset_dir: not recorded in the manifest; pass --dataset");
  }
  auto dataset =
      filterTraining(readLabeledDataset(dir), cfg.preprocess.max_words);
  SplitView view;
  view.seqs = preprocessSplit(dataset, split, cfg.preprocess,
                              lm.pipeline.wpOrNull());
  for (const auto* c : dataset.split(split)) {
    view.labels.push_back(c->binary_label);
    view.targets.push_back(c->toxicity_score);
    view.ids.push_back(c->comment_id);
    view.texts.push_back(c->text);
  }
  return view;
}

// The misclassified-example dump accompanying an evaluation report.
void writeMisclassified(const fs::path& file, const SplitView& view,
                        const Eigen::VectorXd& scores, double threshold) {
  std::ofstream out(file);
  out << "comment_id\ttrue_label\tpredicted_label\tscore\ttext\n";
  for (size_t i = 0; i < view.ids.size(); ++i) {
    const BinaryLabel predicted = scores[static_cast<long>(i)] >= threshold
                                      ? BinaryLabel::toxic
                                      : BinaryLabel::nontoxic;
    if (predicted == view.labels[i]) continue;
    out << joinTabs({view.ids[i], std::string(labelName(view.labels[i])),
                     std::string(labelName(predicted)),
                     formatDouble(scores[static_cast<long>(i)]),
                     escapePlaceholders(view.texts[i])})
        << '\n';
  }
}

Eigen::VectorXd scoreSplit(LoadedModel& lm, const SplitView& view) {
  if (lm.finetuned) {
    std::vector<std::vector<std::string>> word_seqs;
    for (const auto& s : view.seqs) {
      word_seqs.push_back(s.words ? *s.words : s.tokens);
    }
    return lm.finetuned->predictScores(
        word_seqs, lm.manifest.config.finetune.max_sequence_length);
  }
  std::vector<ModelInput> inputs;
  inputs.reserve(view.seqs.size());
  for (const auto& s : view.seqs) inputs.push_back(makeModelInput(lm.pipeline, s));
  return lm.classifier->predictScores(inputs);
}

int cmdEvaluate(const std::string& model_dir, const std::string& dataset_dir,
                const std::string& split_name, const std::string& out) {
  LoadedModel lm = loadModel(model_dir);
  const Split split = splitFromName(split_name);
  SplitView view = splitView(lm, dataset_dir, split);
  if (view.seqs.empty()) {
    throw RangeError("split '" + split_name + "' is empty");
  }
  Eigen::VectorXd scores = scoreSplit(lm, view);
  const double threshold = lm.storedThreshold();
  std::vector<double> s(scores.data(), scores.data() + scores.size());
  MetricsReport report = evaluateScores(s, view.labels, view.targets, threshold);
  if (lm.manifest.config.task == "regression" &&
      !lm.manifest.calibrated_threshold) {
    std::cout << "note: regression model is uncalibrated, using threshold 0.5 "
                 "(run calibrate)\n";
  }
  std::cout << metricsTable(report);
  if (!out.empty()) {
    fs::create_directories(out);
    writeMetricsJson(fs::path(out) / "metrics.json", report,
                     lm.manifest.config_hash, split_name,
                     dataset_dir.empty() ? lm.manifest.config.dataset_dir
                                         : dataset_dir);
    writeMisclassified(fs::path(out) / "misclassified.tsv", view, scores,
                       threshold);
  }
  return 0;
}

int cmdCalibrate(const std::string& model_dir, const std::string& dataset_dir) {
  LoadedModel lm = loadModel(model_dir);
  SplitView view = splitView(lm, dataset_dir, Split::dev);
  if (view.seqs.empty()) {
    throw RangeError("dev split is empty");
  }
  Eigen::VectorXd scores = scoreSplit(lm, view);
  std::vector<double> s(scores.data(), scores.data() + scores.size());
  Calibration cal = calibrateThreshold(s, view.labels);
  updateCalibration(model_dir, cal.threshold, cal.f1);
  std::cout << "threshold " << formatDouble(cal.threshold) << "  dev F1 "
            << formatDouble(cal.f1) << " (stored in manifest)\n";
  return 0;
}

int cmdAttack(const std::string& model_dir, const std::string& dataset_dir,
              const std::string& split_name, std::string toxic_word,
              std::string healthy_word, const std::string& single_word,
              const std::string& direction_name, double threshold_flag,
              const std::string& out) {
  LoadedModel lm = loadModel(model_dir);
  const RunConfig& cfg = lm.manifest.config;

  AttackDirection direction = AttackDirection::both;
  if (direction_name == "nontoxic-to-toxic") {
    direction = AttackDirection::nontoxic_to_toxic;
  } else if (direction_name == "toxic-to-nontoxic") {
    direction = AttackDirection::toxic_to_nontoxic;
  } else if (!direction_name.empty() && direction_name != "both") {
    throw ConfigError("--direction: expected nontoxic-to-toxic, "
                      "toxic-to-nontoxic, or both");
  }
  if (!single_word.empty()) {
    if (direction == AttackDirection::both) {
      throw ConfigError("--word: needs --direction to pick which side to attack");
    }
    if (direction == AttackDirection::nontoxic_to_toxic) {
      toxic_word = single_word;
    } else {
      healthy_word = single_word;
    }
  }

  AttackConfig attack = cfg.attack;
  if (!toxic_word.empty()) attack.toxic_word = toxic_word;
  if (!healthy_word.empty()) attack.healthy_word = healthy_word;

  double threshold = threshold_flag;
  if (threshold < 0) {
    // binary decides at 0.5; regression uses the attack protocol's threshold
    threshold = cfg.task == "binary" ? 0.5 : attack.regression_threshold;
  }

  SplitView view = splitView(lm, dataset_dir, splitFromName(split_name));
  if (view.seqs.empty()) {
    throw RangeError("split '" + split_name + "' is empty");
  }
  BatchScorer scorer = lm.batchScorer();
  AttackReport report =
      attackEval(scorer, view.seqs, view.labels, attack, threshold,
                 cfg.preprocess, lm.pipeline.wpOrNull(), direction);
  report.model_id = lm.manifest.config_hash;
  std::cout << attackTable(report);
  if (!out.empty()) {
    fs::create_directories(out);
    writeAttackJson(fs::path(out) / "attack.json", report);
  }
  return 0;
}

int cmdPredict(const std::string& model_dir, const std::string& text) {
  // For contextual representations the ad-hoc comment is not in the store;
  // compute its vectors with the miniature encoder when configured.
  ModelManifest peek = readManifest(model_dir);
  const RunConfig& cfg = peek.config;
  LabeledComment adhoc;
  adhoc.comment_id = "adhoc";
  adhoc.text = text;

  StoreAmendment amend;
  if (cfg.model_type == "classifier" && cfg.representation.needsWordpieces()) {
    std::ifstream in(cfg.wordpiece_vocab_file);
    if (!in) {
      throw FormatError("cannot open '" + cfg.wordpiece_vocab_file + "'");
    }
    auto wp = std::make_shared<WordPieceVocab>(
        WordPieceVocab::load(in, cfg.wordpiece_vocab_file));
    TokenSequence seq = preprocessComment(adhoc, cfg.preprocess, wp.get());
    if (cfg.encoder == "miniature") {
      auto enc_seed = cfg.seed;
      amend = [wp, seq, enc_seed](ContextualStore& store) {
        MiniatureTransformer enc(*wp, MiniatureTransformer::Config{}, enc_seed);
        ContextualStore::Entry entry;
        entry.pieces = seq.tokens;
        entry.vectors = enc.hiddenStates(seq.tokens, -1);
        if (!store.contains("adhoc")) store.put("adhoc", std::move(entry));
      };
    }
  }

  LoadedModel lm = loadModel(model_dir, amend);
  TokenSequence seq =
      preprocessComment(adhoc, cfg.preprocess, lm.pipeline.wpOrNull());
  const double score = lm.scorer()(seq);
  const double threshold = lm.storedThreshold();
  std::cout << "score " << formatDouble(score) << "  threshold "
            << formatDouble(threshold) << "  label "
            << (score >= threshold ? "toxic" : "nontoxic") << "\n";
  return 0;
}

int cmdExportContextual(const std::string& tokens_path,
                        const std::string& wp_path,
                        const std::string& encoder_name, uint64_t seed,
                        const std::string& layer, const std::string& out) {
  std::ifstream in(wp_path);
  if (!in) throw FormatError("cannot open '" + wp_path + "'");
  WordPieceVocab wp = WordPieceVocab::load(in, wp_path);
  auto encoder = makeEncoder(encoder_name, wp, seed);

  int layer_index = -1;  // final layer
  if (!layer.empty() && layer != "last") {
    layer_index = std::stoi(layer);
    if (layer_index < 1 || layer_index > encoder->layerCount()) {
      throw ConfigError("--layer: must be 'last' or 1.." +
                        std::to_string(encoder->layerCount()));
    }
  }

  auto seqs = readTokenTable(tokens_path);
  ContextualStore store;
  for (const auto& seq : seqs) {
    ContextualStore::Entry entry;
    entry.pieces = seq.tokens;
    entry.vectors = encoder->hiddenStates(seq.tokens, layer_index);
    if (entry.vectors.rows() == 0) {
      entry.vectors.resize(0, encoder->hiddenDim());
    }
    store.put(seq.comment_id, std::move(entry));
  }
  std::ofstream os(out);
  if (!os) throw FormatError("cannot write '" + out + "'");
  store.save(os);
  {
    nlohmann::json j;
    j["command"] = "export-contextual";
    j["encoder"] = encoder_name;
    j["seed"] = seed;
    j["layer"] = layer.empty() ? "last" : layer;
    j["source_tokens"] = {{tokens_path, fnv64HexFile(tokens_path)}};
    std::ofstream mout(out + ".manifest.json");
    mout << j.dump(2) << '\n';
  }
  std::cout << "exported " << store.size() << " comments (dim "
            << store.dim() << ", layer " << (layer.empty() ? "last" : layer)
            << ") to " << out << "\n";
  return 0;
}

}  // namespace
}  // namespace toxdet

int main(int argc, char** argv) {
  using namespace toxdet;
  CLI::App app{"toxic-comment classification experiments"};
  app.set_version_flag("--version", "toxdet 0.1.0");
  app.require_subcommand(1);

  // ingest
  std::string comments, annotations, out, config_path;
  bool force = false;
  auto* ingest = app.add_subcommand("ingest",
                                    "aggregate annotations into a labeled dataset");
  ingest->add_option("--comments", comments, "comments table (tsv)")->required();
  ingest->add_option("--annotations", annotations, "annotations table (tsv)")
      ->required();
  ingest->add_option("--out", out, "output dataset directory")->required();
  ingest->add_option("--config", config_path, "run config (column mapping)");
  ingest->add_flag("--force", force, "overwrite a non-empty output directory");

  // stats
  std::string stats_dataset, stats_out;
  int stats_max_words = 200;
  bool stats_no_filter = false;
  auto* stats = app.add_subcommand("stats", "corpus statistics table");
  stats->add_option("--dataset", stats_dataset, "labeled dataset directory")
      ->required();
  stats->add_option("--max-words", stats_max_words, "truncation limit");
  stats->add_flag("--no-filter", stats_no_filter,
                  "skip the long-toxic-training-comment filter");
  stats->add_option("--out", stats_out, "also write stats json here");

  // preprocess
  std::string pp_dataset, pp_out, pp_mode = "word", pp_wp;
  int pp_max_words = 200;
  bool pp_force = false;
  auto* preprocess = app.add_subcommand("preprocess", "write token tables");
  preprocess->add_option("--dataset", pp_dataset, "labeled dataset directory")
      ->required();
  preprocess->add_option("--out", pp_out, "output directory")->required();
  preprocess->add_option("--mode", pp_mode, "word | wordpiece");
  preprocess->add_option("--wordpiece-vocab", pp_wp, "word-piece vocab file");
  preprocess->add_option("--max-words", pp_max_words, "truncation limit");
  preprocess->add_flag("--force", pp_force, "overwrite non-empty output");

  // build-vocab
  std::string bv_tokens, bv_out;
  int bv_top_n = 75000;
  auto* build_vocab = app.add_subcommand("build-vocab",
                                         "frequency vocabulary from a token table");
  build_vocab->add_option("--tokens", bv_tokens, "token table (tsv)")->required();
  build_vocab->add_option("--top-n", bv_top_n, "vocabulary size cap");
  build_vocab->add_option("--out", bv_out, "output vocab file")->required();

  // train
  std::string train_config, train_out;
  bool train_force = false;
  auto* train = app.add_subcommand("train", "train a classifier per run config");
  train->add_option("--config", train_config, "run config json")->required();
  train->add_option("--out", train_out, "model output directory");
  train->add_flag("--force", train_force, "overwrite non-empty output");

  // calibrate
  std::string cal_model, cal_dataset;
  auto* calibrate = app.add_subcommand(
      "calibrate", "pick the best-F1 threshold on the dev split");
  calibrate->add_option("--model", cal_model, "model directory")->required();
  calibrate->add_option("--dataset", cal_dataset, "dataset override");

  // evaluate
  std::string ev_model, ev_dataset, ev_split = "test", ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "metrics on a split");
  evaluate->add_option("--model", ev_model, "model directory")->required();
  evaluate->add_option("--dataset", ev_dataset, "dataset override");
  evaluate->add_option("--split", ev_split, "train | dev | test");
  evaluate->add_option("--out", ev_out, "report output directory");

  // attack
  std::string at_model, at_dataset, at_split = "test", at_toxic, at_healthy;
  std::string at_word, at_direction = "both", at_out;
  double at_threshold = -1.0;
  auto* attack = app.add_subcommand("attack", "word-append robustness report");
  attack->add_option("--model", at_model, "model directory")->required();
  attack->add_option("--dataset", at_dataset, "dataset override");
  attack->add_option("--split", at_split, "train | dev | test");
  attack->add_option("--toxic-word", at_toxic, "word appended to non-toxic");
  attack->add_option("--healthy-word", at_healthy, "word appended to toxic");
  attack->add_option("--word", at_word, "word for a single --direction");
  attack->add_option("--direction", at_direction,
                     "nontoxic-to-toxic | toxic-to-nontoxic | both");
  attack->add_option("--threshold", at_threshold, "decision threshold override");
  attack->add_option("--out", at_out, "report output directory");

  // predict
  std::string pr_model, pr_text;
  auto* predict = app.add_subcommand("predict", "score one ad-hoc comment");
  predict->add_option("--model", pr_model, "model directory")->required();
  predict->add_option("--text", pr_text, "comment text")->required();

  // export-contextual
  std::string ex_tokens, ex_wp, ex_encoder = "miniature", ex_layer = "last",
              ex_out;
  uint64_t ex_seed = 13;
  auto* export_ctx = app.add_subcommand(
      "export-contextual", "write a contextual vector store for a token table");
  export_ctx->add_option("--tokens", ex_tokens, "token table (tsv)")->required();
  export_ctx->add_option("--wordpiece-vocab", ex_wp, "word-piece vocab file")
      ->required();
  export_ctx->add_option("--encoder", ex_encoder, "encoder name (miniature)");
  export_ctx->add_option("--seed", ex_seed, "encoder init seed");
  export_ctx->add_option("--layer", ex_layer, "hidden layer: last or 1..N");
  export_ctx->add_option("--out", ex_out, "store file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      return cmdIngest(comments, annotations, out, config_path, force);
    }
    if (stats->parsed()) {
      return cmdStats(stats_dataset, stats_max_words, !stats_no_filter,
                      stats_out);
    }
    if (preprocess->parsed()) {
      return cmdPreprocess(pp_dataset, pp_out, pp_mode, pp_wp, pp_max_words,
                           pp_force);
    }
    if (build_vocab->parsed()) {
      return cmdBuildVocab(bv_tokens, bv_top_n, bv_out);
    }
    if (train->parsed()) return cmdTrain(train_config, train_out, train_force);
    if (calibrate->parsed()) return cmdCalibrate(cal_model, cal_dataset);
    if (evaluate->parsed()) {
      return cmdEvaluate(ev_model, ev_dataset, ev_split, ev_out);
    }
    if (attack->parsed()) {
      return cmdAttack(at_model, at_dataset, at_split, at_toxic, at_healthy,
                       at_word, at_direction, at_threshold, at_out);
    }
    if (predict->parsed()) return cmdPredict(pr_model, pr_text);
    if (export_ctx->parsed()) {
      return cmdExportContextual(ex_tokens, ex_wp, ex_encoder, ex_seed,
                                 ex_layer, ex_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

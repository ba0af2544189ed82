#include "toxdet/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "toxdet/error.hpp"

namespace toxdet {

using nlohmann::json;

void RepresentationConfig::validate() const {
  if (kind == "onehot") {
    if (onehot_unit != "word" && onehot_unit != "wordpiece") {
      throw ConfigError("representation.onehot_unit: must be word or wordpiece");
    }
    if (vocab_top_n < 1) {
      throw ConfigError("representation.vocab_top_n: must be >= 1");
    }
  } else if (kind == "static") {
    if (embedding_file.empty()) {
      throw ConfigError("representation.embedding_file: required for static");
    }
  } else if (kind == "subword") {
    if (subword_words_file.empty() || subword_ngrams_file.empty()) {
      throw ConfigError(
          "representation.subword_words_file/subword_ngrams_file: required");
    }
    if (min_ngram < 1 || max_ngram < min_ngram) {
      throw ConfigError("representation.min_ngram/max_ngram: bad range");
    }
  } else if (kind == "contextual") {
    if (contextual_store_file.empty()) {
      throw ConfigError(
          "representation.contextual_store_file: required for contextual");
    }
  } else if (kind == "concat") {
    if (parts.size() < 2) {
      throw ConfigError("representation.parts: concat needs >= 2 parts");
    }
    for (const auto& p : parts) {
      if (p.kind == "onehot" || p.kind == "concat") {
        throw ConfigError("representation.parts: '" + p.kind +
                          "' cannot be a concat part");
      }
      p.validate();
      if (p.kind == "contextual" && !p.word_level) {
        throw ConfigError(
            "representation.parts: contextual parts must set word_level for "
            "word-aligned concatenation");
      }
    }
  } else {
    throw ConfigError("representation.kind: unknown value '" + kind + "'");
  }
}

bool RepresentationConfig::needsWordpieces() const {
  if (kind == "onehot" && onehot_unit == "wordpiece") return true;
  if (kind == "contextual") return true;
  for (const auto& p : parts) {
    if (p.needsWordpieces()) return true;
  }
  return false;
}

void RunConfig::validate() const {
  if (task != "binary" && task != "regression") {
    throw ConfigError("task: must be binary or regression");
  }
  if (model_type != "classifier" && model_type != "finetune") {
    throw ConfigError("model_type: must be classifier or finetune");
  }
  representation.validate();
  if (model_type == "classifier") {
    ModelConfig m = model;
    m.head = taskHead();
    m.input = representation.kind == "onehot" ? InputKind::onehot_trainable
                                              : InputKind::fixed_features;
    m.validate();
    train.validate();
  } else {
    finetune.validate();
    if (encoder.empty()) {
      throw ConfigError("encoder: required for finetune runs");
    }
  }
  if (representation.needsWordpieces() && wordpiece_vocab_file.empty()) {
    throw ConfigError(
        "wordpiece_vocab_file: required by the selected representation");
  }
}

Head RunConfig::taskHead() const {
  return task == "binary" ? Head::binary : Head::regression;
}

namespace {

json toJson(const RepresentationConfig& r) {
  json j;
  j["kind"] = r.kind;
  if (r.kind == "onehot") {
    j["onehot_unit"] = r.onehot_unit;
    j["vocab_top_n"] = r.vocab_top_n;
  } else if (r.kind == "static") {
    j["embedding_file"] = r.embedding_file;
  } else if (r.kind == "subword") {
    j["subword_words_file"] = r.subword_words_file;
    j["subword_ngrams_file"] = r.subword_ngrams_file;
    j["min_ngram"] = r.min_ngram;
    j["max_ngram"] = r.max_ngram;
  } else if (r.kind == "contextual") {
    j["contextual_store_file"] = r.contextual_store_file;
    j["word_level"] = r.word_level;
    j["layer"] = r.layer;
  } else if (r.kind == "concat") {
    j["parts"] = json::array();
    for (const auto& p : r.parts) j["parts"].push_back(toJson(p));
  }
  return j;
}

RepresentationConfig representationFromJson(const json& j) {
  RepresentationConfig r;
  r.kind = j.value("kind", "onehot");
  r.onehot_unit = j.value("onehot_unit", r.onehot_unit);
  r.vocab_top_n = j.value("vocab_top_n", r.vocab_top_n);
  r.embedding_file = j.value("embedding_file", r.embedding_file);
  r.subword_words_file = j.value("subword_words_file", r.subword_words_file);
  r.subword_ngrams_file = j.value("subword_ngrams_file", r.subword_ngrams_file);
  r.min_ngram = j.value("min_ngram", r.min_ngram);
  r.max_ngram = j.value("max_ngram", r.max_ngram);
  r.contextual_store_file =
      j.value("contextual_store_file", r.contextual_store_file);
  r.word_level = j.value("word_level", r.word_level);
  r.layer = j.value("layer", r.layer);
  if (j.contains("parts")) {
    for (const auto& p : j.at("parts")) {
      r.parts.push_back(representationFromJson(p));
    }
  }
  return r;
}

json toJson(const ModelConfig& m) {
  json j;
  j["architecture"] = std::string(archName(m.architecture));
  j["input"] = std::string(inputKindName(m.input));
  j["trainable_embedding_dim"] = m.trainable_embedding_dim;
  if (m.conv_layers) {
    j["conv_layers"] = {{"n_layers", m.conv_layers->n_layers},
                        {"kernel", m.conv_layers->kernel},
                        {"channels", m.conv_layers->channels}};
  }
  if (m.recurrent_layers) {
    j["recurrent_layers"] = {{"n_layers", m.recurrent_layers->n_layers},
                             {"units", m.recurrent_layers->units}};
  }
  j["dense_units_1"] = m.dense_units_1;
  j["dense_units_2"] = m.dense_units_2;
  if (m.dropout_rate) j["dropout_rate"] = *m.dropout_rate;
  j["l2_coefficient"] = m.l2_coefficient;
  j["head"] = std::string(headName(m.head));
  j["recurrent_summary"] = std::string(summaryName(m.recurrent_summary));
  return j;
}

ModelConfig modelFromJson(const json& j) {
  ModelConfig m;
  if (j.contains("architecture")) {
    m.architecture = archFromName(j.at("architecture").get<std::string>());
  }
  if (j.contains("input")) {
    m.input = inputKindFromName(j.at("input").get<std::string>());
  }
  m.trainable_embedding_dim =
      j.value("trainable_embedding_dim", m.trainable_embedding_dim);
  if (j.contains("conv_layers")) {
    const auto& c = j.at("conv_layers");
    m.conv_layers = ConvSpec{c.value("n_layers", 1), c.value("kernel", 4),
                             c.value("channels", 128)};
  }
  if (j.contains("recurrent_layers")) {
    const auto& r = j.at("recurrent_layers");
    m.recurrent_layers = RecurrentSpec{r.value("n_layers", 1),
                                       r.value("units", 128)};
  }
  m.dense_units_1 = j.value("dense_units_1", m.dense_units_1);
  m.dense_units_2 = j.value("dense_units_2", m.dense_units_2);
  if (j.contains("dropout_rate")) {
    const auto& d = j.at("dropout_rate");
    // `true` enables dropout at the conventional 0.5
    if (d.is_boolean()) {
      if (d.get<bool>()) m.dropout_rate = 0.5;
    } else {
      m.dropout_rate = d.get<double>();
    }
  }
  m.l2_coefficient = j.value("l2_coefficient", m.l2_coefficient);
  if (j.contains("head")) m.head = headFromName(j.at("head").get<std::string>());
  if (j.contains("recurrent_summary")) {
    m.recurrent_summary =
        summaryFromName(j.at("recurrent_summary").get<std::string>());
  }
  return m;
}

}  // namespace

std::string runConfigToJson(const RunConfig& c) {
  json j;
  j["paths"] = {{"comments_file", c.comments_file},
                {"annotations_file", c.annotations_file},
                {"dataset_dir", c.dataset_dir},
                {"wordpiece_vocab_file", c.wordpiece_vocab_file},
                {"output_dir", c.output_dir}};
  j["columns"] = {{"comment_id", c.columns.comment_id},
                  {"text", c.columns.text},
                  {"split", c.columns.split},
                  {"worker_id", c.columns.worker_id},
                  {"raw_label", c.columns.raw_label}};
  j["preprocess"] = {{"mode", std::string(tokenModeName(c.preprocess.mode))},
                     {"lowercase", c.preprocess.lowercase},
                     {"max_words", c.preprocess.max_words}};
  j["representation"] = toJson(c.representation);
  j["task"] = c.task;
  j["model_type"] = c.model_type;
  j["encoder"] = c.encoder;
  j["model"] = toJson(c.model);
  // per-run randomness comes from the top-level seed alone
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience}};
  j["finetune"] = {{"max_sequence_length", c.finetune.max_sequence_length},
                   {"batch_size", c.finetune.batch_size},
                   {"learning_rate", c.finetune.learning_rate},
                   {"epochs", c.finetune.epochs}};
  j["attack"] = {{"toxic_word", c.attack.toxic_word},
                 {"healthy_word", c.attack.healthy_word},
                 {"regression_threshold", c.attack.regression_threshold}};
  j["seed"] = c.seed;
  return j.dump(2);
}

RunConfig runConfigFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  RunConfig c;
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    c.comments_file = p.value("comments_file", "");
    c.annotations_file = p.value("annotations_file", "");
    c.dataset_dir = p.value("dataset_dir", "");
    c.wordpiece_vocab_file = p.value("wordpiece_vocab_file", "");
    c.output_dir = p.value("output_dir", "");
  }
  if (j.contains("columns")) {
    const auto& m = j.at("columns");
    c.columns.comment_id = m.value("comment_id", c.columns.comment_id);
    c.columns.text = m.value("text", c.columns.text);
    c.columns.split = m.value("split", c.columns.split);
    c.columns.worker_id = m.value("worker_id", c.columns.worker_id);
    c.columns.raw_label = m.value("raw_label", c.columns.raw_label);
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    if (p.contains("mode")) {
      c.preprocess.mode = tokenModeFromName(p.at("mode").get<std::string>());
    }
    c.preprocess.lowercase = p.value("lowercase", c.preprocess.lowercase);
    c.preprocess.max_words = p.value("max_words", c.preprocess.max_words);
  }
  if (j.contains("representation")) {
    c.representation = representationFromJson(j.at("representation"));
  }
  c.task = j.value("task", c.task);
  c.model_type = j.value("model_type", c.model_type);
  c.encoder = j.value("encoder", c.encoder);
  if (j.contains("model")) c.model = modelFromJson(j.at("model"));
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
    c.train.patience = t.value("patience", c.train.patience);
  }
  if (j.contains("finetune")) {
    const auto& f = j.at("finetune");
    c.finetune.max_sequence_length =
        f.value("max_sequence_length", c.finetune.max_sequence_length);
    c.finetune.batch_size = f.value("batch_size", c.finetune.batch_size);
    c.finetune.learning_rate = f.value("learning_rate", c.finetune.learning_rate);
    c.finetune.epochs = f.value("epochs", c.finetune.epochs);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    c.attack.toxic_word = a.value("toxic_word", c.attack.toxic_word);
    c.attack.healthy_word = a.value("healthy_word", c.attack.healthy_word);
    c.attack.regression_threshold =
        a.value("regression_threshold", c.attack.regression_threshold);
  }
  c.seed = j.value("seed", c.seed);
  return c;
}

namespace {

void overridePathFromEnv(std::string& field, const char* var) {
  if (const char* v = std::getenv(var); v != nullptr && *v != '\0') {
    field = v;
  }
}

}  // namespace

RunConfig loadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig c = runConfigFromJson(buf.str());
  // Paths only; hyperparameters always come from the file.
  overridePathFromEnv(c.comments_file, "TOXDET_PATH_COMMENTS_FILE");
  overridePathFromEnv(c.annotations_file, "TOXDET_PATH_ANNOTATIONS_FILE");
  overridePathFromEnv(c.dataset_dir, "TOXDET_PATH_DATASET_DIR");
  overridePathFromEnv(c.wordpiece_vocab_file, "TOXDET_PATH_WORDPIECE_VOCAB_FILE");
  overridePathFromEnv(c.output_dir, "TOXDET_PATH_OUTPUT_DIR");
  return c;
}

std::string fnv64Hex(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::string fnv64HexFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open file for hashing: '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv64Hex(buf.str());
}

std::string configHash(const RunConfig& config) {
  return fnv64Hex(runConfigToJson(config) + "#" + std::to_string(config.seed));
}

}  // namespace toxdet

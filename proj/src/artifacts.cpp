#include "toxdet/artifacts.hpp"

#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "toxdet/error.hpp"
#include "toxdet/tsv.hpp"

namespace toxdet {

using nlohmann::json;

std::string formatDouble(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace {

std::ofstream openOut(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write '" + file.string() + "'");
  }
  return out;
}

std::ifstream openIn(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + file.string() + "'");
  }
  return in;
}

constexpr const char* kSplitFiles[3] = {"train.tsv", "dev.tsv", "test.tsv"};

}  // namespace

void writeLabeledDataset(const fs::path& dir, const LabeledDataset& dataset) {
  fs::create_directories(dir);
  for (Split s : kSplits) {
    auto out = openOut(dir / kSplitFiles[static_cast<int>(s)]);
    out << "comment_id\tsplit\tbinary_label\ttoxicity_score\ttext\n";
    for (const auto& c : dataset.comments) {
      if (c.split != s) continue;
      out << joinTabs({c.comment_id, std::string(splitName(c.split)),
                       std::string(labelName(c.binary_label)),
                       formatDouble(c.toxicity_score),
                       escapePlaceholders(c.text)})
          << '\n';
    }
  }
}

LabeledDataset readLabeledDataset(const fs::path& dir) {
  LabeledDataset dataset;
  for (Split s : kSplits) {
    const fs::path file = dir / kSplitFiles[static_cast<int>(s)];
    auto in = openIn(file);
    TsvReader reader(in, file.string());
    const int id_col = reader.requireColumn("comment_id");
    const int split_col = reader.requireColumn("split");
    const int label_col = reader.requireColumn("binary_label");
    const int score_col = reader.requireColumn("toxicity_score");
    const int text_col = reader.requireColumn("text");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      LabeledComment c;
      c.comment_id = fields[id_col];
      c.split = splitFromName(fields[split_col]);
      c.binary_label = labelFromName(fields[label_col]);
      const auto& score = fields[score_col];
      auto res = std::from_chars(score.data(), score.data() + score.size(),
                                 c.toxicity_score);
      if (res.ec != std::errc{} || res.ptr != score.data() + score.size()) {
        throw FormatError(file.string() + ":" + std::to_string(reader.line()) +
                          ": bad toxicity_score");
      }
      c.text = unescapePlaceholders(fields[text_col]);
      dataset.comments.push_back(std::move(c));
    }
  }
  return dataset;
}

namespace {

json splitStatsJson(const SplitStats& s) {
  return {{"n_comments", s.n_comments},
          {"n_toxic", s.n_toxic},
          {"n_nontoxic", s.n_nontoxic},
          {"total_word_count", s.total_word_count},
          {"n_unique_words", s.n_unique_words}};
}

}  // namespace

void writeStatsJson(const fs::path& file, const CorpusStats& stats) {
  json j;
  for (Split s : kSplits) {
    j[std::string(splitName(s))] = splitStatsJson(stats.forSplit(s));
  }
  auto out = openOut(file);
  out << j.dump(2) << '\n';
}

std::string statsTable(const CorpusStats& stats) {
  std::ostringstream out;
  out << "                          train          dev         test\n";
  auto row = [&](const char* name, auto get) {
    out << name;
    for (Split s : kSplits) {
      std::string v = std::to_string(get(stats.forSplit(s)));
      out << std::string(13 - std::min<size_t>(12, v.size()), ' ') << v;
    }
    out << '\n';
  };
  row("comments        ", [](const SplitStats& s) { return s.n_comments; });
  row("toxic           ", [](const SplitStats& s) { return s.n_toxic; });
  row("non-toxic       ", [](const SplitStats& s) { return s.n_nontoxic; });
  row("word count      ", [](const SplitStats& s) { return s.total_word_count; });
  row("unique words    ", [](const SplitStats& s) { return s.n_unique_words; });
  return out.str();
}

void writeTokenTable(const fs::path& file,
                     const std::vector<TokenSequence>& seqs) {
  auto out = openOut(file);
  out << "comment_id\ttokens\n";
  for (const auto& seq : seqs) {
    std::string joined;
    for (size_t i = 0; i < seq.tokens.size(); ++i) {
      if (i) joined += ' ';
      joined += seq.tokens[i];
    }
    out << joinTabs({seq.comment_id, joined}) << '\n';
  }
}

std::vector<TokenSequence> readTokenTable(const fs::path& file) {
  auto in = openIn(file);
  TsvReader reader(in, file.string());
  const int id_col = reader.requireColumn("comment_id");
  const int tok_col = reader.requireColumn("tokens");
  std::vector<TokenSequence> seqs;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    TokenSequence seq;
    seq.comment_id = fields[id_col];
    seq.tokens = tokenizeWords(fields[tok_col]);
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

namespace {

std::string nowUtc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json historyJson(const std::vector<EpochRecord>& history) {
  json arr = json::array();
  for (const auto& e : history) {
    arr.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"dev_metric", e.dev_metric}});
  }
  return arr;
}

}  // namespace

void writeManifest(const fs::path& model_dir, const ModelManifest& manifest) {
  json j;
  j["format_version"] = manifest.format_version;
  j["software"] = manifest.software;
  j["created_utc"] =
      manifest.created_utc.empty() ? nowUtc() : manifest.created_utc;
  j["seed"] = manifest.config.seed;
  j["config"] = json::parse(runConfigToJson(manifest.config));
  j["config_hash"] = configHash(manifest.config);
  j["input_hashes"] = manifest.input_hashes;
  j["input_dim"] = manifest.input_dim;
  j["parameter_count"] = manifest.parameter_count;
  j["history"] = historyJson(manifest.history);
  j["dev_metric"] = manifest.dev_metric;
  if (manifest.calibrated_threshold) {
    j["calibration"] = {{"threshold", *manifest.calibrated_threshold},
                        {"dev_f1", *manifest.calibrated_dev_f1}};
  }
  fs::create_directories(model_dir);
  auto out = openOut(model_dir / "manifest.json");
  out << j.dump(2) << '\n';
}

ModelManifest readManifest(const fs::path& model_dir) {
  auto in = openIn(model_dir / "manifest.json");
  std::ostringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
  ModelManifest m;
  m.format_version = j.value("format_version", 1);
  m.software = j.value("software", "");
  m.created_utc = j.value("created_utc", "");
  m.config = runConfigFromJson(j.at("config").dump());
  m.config_hash = j.value("config_hash", "");
  if (configHash(m.config) != m.config_hash) {
    throw IntegrityError("manifest config hash mismatch in '" +
                         model_dir.string() +
                         "' (file tampered or incompatible version)");
  }
  if (j.contains("input_hashes")) {
    for (const auto& [k, v] : j.at("input_hashes").items()) {
      m.input_hashes[k] = v.get<std::string>();
    }
  }
  m.input_dim = j.value("input_dim", 0L);
  m.parameter_count = j.value("parameter_count", 0L);
  if (j.contains("history")) {
    for (const auto& e : j.at("history")) {
      m.history.push_back({e.value("epoch", 0), e.value("train_loss", 0.0),
                           e.value("dev_metric", 0.0)});
    }
  }
  m.dev_metric = j.value("dev_metric", 0.0);
  if (j.contains("calibration")) {
    m.calibrated_threshold = j.at("calibration").value("threshold", 0.5);
    m.calibrated_dev_f1 = j.at("calibration").value("dev_f1", 0.0);
  }
  return m;
}

void updateCalibration(const fs::path& model_dir, double threshold,
                       double dev_f1) {
  ModelManifest m = readManifest(model_dir);
  m.calibrated_threshold = threshold;
  m.calibrated_dev_f1 = dev_f1;
  writeManifest(model_dir, m);
}

namespace {

constexpr char kParamsMagic[8] = {'T', 'O', 'X', 'D', 'P', 'A', 'R', '1'};

template <typename T>
void writePod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T readPod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError("params file truncated");
  return v;
}

}  // namespace

void saveParams(const fs::path& file,
                const std::vector<const ad::Param*>& params) {
  auto out = openOut(file);
  out.write(kParamsMagic, sizeof(kParamsMagic));
  writePod<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const auto* p : params) {
    writePod<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    writePod<uint64_t>(out, static_cast<uint64_t>(p->value.rows()));
    writePod<uint64_t>(out, static_cast<uint64_t>(p->value.cols()));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
}

void loadParams(const fs::path& file, const std::vector<ad::Param*>& params) {
  auto in = openIn(file);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw FormatError("'" + file.string() + "' is not a parameter blob");
  }
  const auto count = readPod<uint32_t>(in);
  if (count != params.size()) {
    throw IntegrityError("parameter blob has " + std::to_string(count) +
                         " tensors, model expects " +
                         std::to_string(params.size()));
  }
  for (ad::Param* p : params) {
    const auto name_len = readPod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = readPod<uint64_t>(in);
    const auto cols = readPod<uint64_t>(in);
    if (name != p->name || rows != static_cast<uint64_t>(p->value.rows()) ||
        cols != static_cast<uint64_t>(p->value.cols())) {
      throw IntegrityError("parameter blob entry '" + name +
                           "' does not match model parameter '" + p->name + "'");
    }
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    if (!in) throw FormatError("params file truncated at '" + name + "'");
  }
}

void writeMetricsJson(const fs::path& file, const MetricsReport& report,
                      const std::string& model_hash, const std::string& split,
                      const std::string& dataset_dir) {
  json j;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["rmse"] = report.rmse;
  j["mae"] = report.mae;
  j["threshold"] = report.threshold;
  j["n_evaluated"] = report.n_evaluated;
  j["confusion"] = {{"tp", report.counts.tp},
                    {"fp", report.counts.fp},
                    {"fn", report.counts.fn},
                    {"tn", report.counts.tn}};
  j["model_config_hash"] = model_hash;
  if (!split.empty()) j["split"] = split;
  if (!dataset_dir.empty()) j["dataset_dir"] = dataset_dir;
  auto out = openOut(file);
  out << j.dump(2) << '\n';
}

std::string metricsTable(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << "n=" << report.n_evaluated << "  threshold=" << report.threshold
      << "\n"
      << "precision " << report.precision << "  recall " << report.recall
      << "  F1 " << report.f1 << "\n"
      << "rmse " << report.rmse << "  mae " << report.mae << "\n"
      << "confusion tp=" << report.counts.tp << " fp=" << report.counts.fp
      << " fn=" << report.counts.fn << " tn=" << report.counts.tn << "\n";
  return out.str();
}

namespace {

json rateJson(const std::optional<double>& rate) {
  if (rate) return *rate;
  return nullptr;
}

std::string rateText(const std::optional<double>& rate) {
  if (!rate) return "undefined";
  std::ostringstream out;
  out.precision(4);
  out << *rate << "%";
  return out.str();
}

}  // namespace

void writeAttackJson(const fs::path& file, const AttackReport& report) {
  json j;
  j["model_id"] = report.model_id;
  j["decision_threshold"] = report.decision_threshold;
  j["toxic_word"] = report.toxic_word;
  j["healthy_word"] = report.healthy_word;
  j["nontoxic_to_toxic"] = {{"correct", report.n_correct_nontoxic},
                            {"flipped", report.n_flipped_to_toxic},
                            {"rate_percent", rateJson(report.rate_nontoxic_to_toxic)}};
  j["toxic_to_nontoxic"] = {{"correct", report.n_correct_toxic},
                            {"flipped", report.n_flipped_to_nontoxic},
                            {"rate_percent", rateJson(report.rate_toxic_to_nontoxic)}};
  auto out = openOut(file);
  out << j.dump(2) << '\n';
}

std::string attackTable(const AttackReport& report) {
  std::ostringstream out;
  out << "word-append attack (threshold " << report.decision_threshold << ")\n"
      << "  non-toxic -> toxic  (+\"" << report.toxic_word
      << "\"): " << rateText(report.rate_nontoxic_to_toxic) << "  ("
      << report.n_flipped_to_toxic << "/" << report.n_correct_nontoxic << ")\n"
      << "  toxic -> non-toxic  (+\"" << report.healthy_word
      << "\"): " << rateText(report.rate_toxic_to_nontoxic) << "  ("
      << report.n_flipped_to_nontoxic << "/" << report.n_correct_toxic << ")\n";
  return out.str();
}

void prepareOutputDir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw IntegrityError("output path '" + dir.string() +
                           "' exists and is not a directory");
    }
    if (!fs::is_empty(dir) && !force) {
      throw IntegrityError("output directory '" + dir.string() +
                           "' is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir);
}

}  // namespace toxdet

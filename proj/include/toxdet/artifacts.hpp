#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toxdet/attack.hpp"
#include "toxdet/classifier.hpp"
#include "toxdet/corpus.hpp"
#include "toxdet/metrics.hpp"
#include "toxdet/runconfig.hpp"

namespace toxdet {

namespace fs = std::filesystem;

std::string formatDouble(double v);  // shortest round-trip decimal

// ---- labeled dataset directory ---------------------------------------------
// One table per split (comment_id, split, binary_label, toxicity_score, text);
// text re-escapes hard whitespace with the corpus placeholder tokens.

void writeLabeledDataset(const fs::path& dir, const LabeledDataset& dataset);
LabeledDataset readLabeledDataset(const fs::path& dir);

void writeStatsJson(const fs::path& file, const CorpusStats& stats);
std::string statsTable(const CorpusStats& stats);  // human-readable

// ---- preprocessed token tables ----------------------------------------------

void writeTokenTable(const fs::path& file,
                     const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> readTokenTable(const fs::path& file);

// ---- model directory ---------------------------------------------------------

struct ModelManifest {
  int format_version = 1;
  std::string software = "toxdet 0.1.0";
  std::string created_utc;
  RunConfig config;
  std::string config_hash;
  std::map<std::string, std::string> input_hashes;  // path -> fnv64
  long input_dim = 0;
  long parameter_count = 0;
  std::vector<EpochRecord> history;
  double dev_metric = 0.0;
  std::optional<double> calibrated_threshold;
  std::optional<double> calibrated_dev_f1;
};

void writeManifest(const fs::path& model_dir, const ModelManifest& manifest);
// Verifies the stored config hash against a recomputation; throws
// IntegrityError on mismatch.
ModelManifest readManifest(const fs::path& model_dir);
// Rewrites the manifest with calibration results; the config hash is
// unchanged (calibration is outside the hashed core).
void updateCalibration(const fs::path& model_dir, double threshold,
                       double dev_f1);

void saveParams(const fs::path& file,
                const std::vector<const ad::Param*>& params);
// Loads values into the already-constructed parameter set; names and shapes
// must match exactly.
void loadParams(const fs::path& file, const std::vector<ad::Param*>& params);

// ---- reports -----------------------------------------------------------------

void writeMetricsJson(const fs::path& file, const MetricsReport& report,
                      const std::string& model_hash,
                      const std::string& split = "",
                      const std::string& dataset_dir = "");
std::string metricsTable(const MetricsReport& report);

void writeAttackJson(const fs::path& file, const AttackReport& report);
std::string attackTable(const AttackReport& report);

// Refuses to reuse a non-empty directory unless force is set (or it was
// produced by the same artifact kind and is being overwritten explicitly).
void prepareOutputDir(const fs::path& dir, bool force);

}  // namespace toxdet

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace toxdet {

enum class Split { train = 0, dev = 1, test = 2 };
constexpr std::array<Split, 3> kSplits = {Split::train, Split::dev, Split::test};

std::string_view splitName(Split s);
Split splitFromName(std::string_view name);  // throws FormatError

enum class BinaryLabel { toxic, nontoxic };
std::string_view labelName(BinaryLabel l);
BinaryLabel labelFromName(std::string_view name);

struct RawComment {
  std::string comment_id;
  std::string text;
  Split split = Split::train;
};

// One crowd-worker judgment. raw_label is on the five-point scale
// -2 (very toxic), -1 (toxic), 0 (neither), +1 (healthy), +2 (very healthy).
struct Annotation {
  std::string comment_id;
  std::string worker_id;
  int raw_label = 0;
};

struct LabelSummary {
  int n_total = 0;
  int n_toxic_votes = 0;    // raw_label in {-2,-1}
  int n_healthy_votes = 0;  // raw_label in {+1,+2}
  double mean_raw = 0.0;
};

struct LabeledComment {
  std::string comment_id;
  std::string text;
  Split split = Split::train;
  BinaryLabel binary_label = BinaryLabel::nontoxic;
  double toxicity_score = 0.0;  // in [0,1], higher = more toxic
};

struct LabeledDataset {
  std::vector<LabeledComment> comments;  // input file order

  std::vector<const LabeledComment*> split(Split s) const;
  size_t splitSize(Split s) const;
};

struct SplitStats {
  long n_comments = 0;
  long n_toxic = 0;
  long n_nontoxic = 0;
  long total_word_count = 0;
  long n_unique_words = 0;
};

struct CorpusStats {
  std::array<SplitStats, 3> per_split;  // indexed by Split

  SplitStats& forSplit(Split s) { return per_split[static_cast<int>(s)]; }
  const SplitStats& forSplit(Split s) const {
    return per_split[static_cast<int>(s)];
  }
};

// Header names of the two input tables. Defaults match the public Detox
// distribution; override through the run config when reading other layouts.
struct ColumnMapping {
  std::string comment_id = "rev_id";
  std::string text = "comment";
  std::string split = "split";
  std::string worker_id = "worker_id";
  std::string raw_label = "toxicity_score";
};

// The distributed corpus escapes hard whitespace inside the text column.
// Unescaping consumes one adjacent space on each side of the placeholder so
// "a NEWLINE_TOKEN b" becomes "a\nb".
std::string unescapePlaceholders(std::string_view text);
// Inverse mapping used when writing our own tab-separated tables.
std::string escapePlaceholders(std::string_view text);

std::vector<RawComment> parseComments(std::istream& in,
                                      const ColumnMapping& cols = {},
                                      std::string_view source_name = "<stream>");

std::vector<Annotation> parseAnnotations(std::istream& in,
                                         const ColumnMapping& cols = {},
                                         std::string_view source_name = "<stream>");

// Counts and mean over the raw labels of one comment. Throws on empty input.
LabelSummary summarizeLabels(std::span<const int> raw_labels);

// Majority-vote rule: toxic iff toxic-side votes outnumber healthy-side votes
// and exceed 2. Ties and low-vote comments fall to nontoxic.
BinaryLabel binaryLabel(const LabelSummary& s);

// Normalized average of raw labels mapped so that 1 is unanimous very-toxic
// and 0 unanimous very-healthy: (2 - mean_raw) / 4.
double toxicityScore(const LabelSummary& s);

LabeledDataset buildDataset(const std::vector<RawComment>& comments,
                            const std::vector<Annotation>& annotations);

struct PreprocessConfig;  // preprocess.hpp

// Per-split counts over preprocessed word tokens (normalize, tokenize,
// truncate under `config`). Callers wanting the standard reporting view apply
// filterTraining first.
CorpusStats datasetStats(const LabeledDataset& dataset,
                         const PreprocessConfig& config);

}  // namespace toxdet

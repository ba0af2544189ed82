#include "toxdet/corpus.hpp"

#include <charconv>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "toxdet/error.hpp"
#include "toxdet/preprocess.hpp"
#include "toxdet/tsv.hpp"

namespace toxdet {

std::string_view splitName(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Split splitFromName(std::string_view name) {
  for (Split s : kSplits) {
    if (name == splitName(s)) return s;
  }
  throw FormatError("unknown split value '" + std::string(name) +
                    "', expected train/dev/test");
}

std::string_view labelName(BinaryLabel l) {
  return l == BinaryLabel::toxic ? "toxic" : "nontoxic";
}

BinaryLabel labelFromName(std::string_view name) {
  if (name == "toxic") return BinaryLabel::toxic;
  if (name == "nontoxic") return BinaryLabel::nontoxic;
  throw FormatError("unknown label '" + std::string(name) +
                    "', expected toxic/nontoxic");
}

namespace {

struct Placeholder {
  std::string_view token;
  char replacement;
};

constexpr Placeholder kPlaceholders[] = {
    {"NEWLINE_TOKEN", '\n'},
    {"TAB_TOKEN", '\t'},
};

}  // namespace

std::string unescapePlaceholders(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    for (const auto& ph : kPlaceholders) {
      if (text.compare(i, ph.token.size(), ph.token) == 0) {
        // The corpus writer padded placeholders with spaces; fold one
        // adjacent space per side back into the control character.
        if (!out.empty() && out.back() == ' ') out.pop_back();
        out += ph.replacement;
        i += ph.token.size();
        if (i < text.size() && text[i] == ' ') ++i;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out += text[i];
      ++i;
    }
  }
  return out;
}

std::string escapePlaceholders(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  for (char c : text) {
    if (c == '\n') {
      out += " NEWLINE_TOKEN ";
    } else if (c == '\t') {
      out += " TAB_TOKEN ";
    } else {
      out += c;
    }
  }
  return out;
}

std::vector<RawComment> parseComments(std::istream& in,
                                      const ColumnMapping& cols,
                                      std::string_view source_name) {
  TsvReader reader(in, std::string(source_name));
  const int id_col = reader.requireColumn(cols.comment_id);
  const int text_col = reader.requireColumn(cols.text);
  const int split_col = reader.requireColumn(cols.split);

  std::vector<RawComment> out;
  std::unordered_set<std::string> seen;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    RawComment c;
    c.comment_id = fields[id_col];
    if (c.comment_id.empty()) {
      throw FormatError(reader.source() + ":" + std::to_string(reader.line()) +
                        ": empty comment_id");
    }
    if (!seen.insert(c.comment_id).second) {
      throw IntegrityError(reader.source() + ":" +
                           std::to_string(reader.line()) +
                           ": duplicate comment_id '" + c.comment_id + "'");
    }
    c.text = unescapePlaceholders(fields[text_col]);
    try {
      c.split = splitFromName(fields[split_col]);
    } catch (const FormatError& e) {
      throw FormatError(reader.source() + ":" + std::to_string(reader.line()) +
                        ": " + e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

int parseRawLabel(std::string_view s, const TsvReader& reader) {
  // The Detox annotation table stores the score as a decimal ("-2.0");
  // accept an integral value written either way.
  double value = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError(reader.source() + ":" + std::to_string(reader.line()) +
                      ": raw label '" + std::string(s) + "' is not a number");
  }
  int label = static_cast<int>(value);
  if (static_cast<double>(label) != value) {
    throw FormatError(reader.source() + ":" + std::to_string(reader.line()) +
                      ": raw label '" + std::string(s) + "' is not an integer");
  }
  if (label < -2 || label > 2) {
    throw RangeError(reader.source() + ":" + std::to_string(reader.line()) +
                     ": raw label " + std::to_string(label) +
                     " outside the -2..2 scale");
  }
  return label;
}

}  // namespace

std::vector<Annotation> parseAnnotations(std::istream& in,
                                         const ColumnMapping& cols,
                                         std::string_view source_name) {
  TsvReader reader(in, std::string(source_name));
  const int id_col = reader.requireColumn(cols.comment_id);
  const int worker_col = reader.requireColumn(cols.worker_id);
  const int label_col = reader.requireColumn(cols.raw_label);

  std::vector<Annotation> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    Annotation a;
    a.comment_id = fields[id_col];
    if (a.comment_id.empty()) {
      throw FormatError(reader.source() + ":" + std::to_string(reader.line()) +
                        ": empty comment_id");
    }
    a.worker_id = fields[worker_col];
    a.raw_label = parseRawLabel(fields[label_col], reader);
    out.push_back(std::move(a));
  }
  return out;
}

LabelSummary summarizeLabels(std::span<const int> raw_labels) {
  if (raw_labels.empty()) {
    throw RangeError("summarizeLabels: empty annotation list");
  }
  LabelSummary s;
  long sum = 0;
  for (int label : raw_labels) {
    if (label < -2 || label > 2) {
      throw RangeError("summarizeLabels: raw label " + std::to_string(label) +
                       " outside the -2..2 scale");
    }
    ++s.n_total;
    if (label < 0) ++s.n_toxic_votes;
    if (label > 0) ++s.n_healthy_votes;
    sum += label;
  }
  s.mean_raw = static_cast<double>(sum) / s.n_total;
  return s;
}

BinaryLabel binaryLabel(const LabelSummary& s) {
  const bool majority = s.n_toxic_votes > s.n_healthy_votes;
  const bool enough = s.n_toxic_votes > 2;
  return (majority && enough) ? BinaryLabel::toxic : BinaryLabel::nontoxic;
}

double toxicityScore(const LabelSummary& s) {
  return (2.0 - s.mean_raw) / 4.0;
}

std::vector<const LabeledComment*> LabeledDataset::split(Split s) const {
  std::vector<const LabeledComment*> out;
  for (const auto& c : comments) {
    if (c.split == s) out.push_back(&c);
  }
  return out;
}

size_t LabeledDataset::splitSize(Split s) const {
  size_t n = 0;
  for (const auto& c : comments) {
    if (c.split == s) ++n;
  }
  return n;
}

LabeledDataset buildDataset(const std::vector<RawComment>& comments,
                            const std::vector<Annotation>& annotations) {
  std::unordered_map<std::string, std::vector<int>> labels_by_id;
  labels_by_id.reserve(comments.size());
  for (const auto& c : comments) {
    labels_by_id.emplace(c.comment_id, std::vector<int>{});
  }
  for (const auto& a : annotations) {
    auto it = labels_by_id.find(a.comment_id);
    if (it == labels_by_id.end()) {
      throw IntegrityError("annotation references unknown comment_id '" +
                           a.comment_id + "'");
    }
    it->second.push_back(a.raw_label);
  }

  LabeledDataset dataset;
  dataset.comments.reserve(comments.size());
  for (const auto& c : comments) {
    const auto& labels = labels_by_id.at(c.comment_id);
    if (labels.empty()) {
      throw IntegrityError("comment '" + c.comment_id +
                           "' has zero annotations");
    }
    LabelSummary summary = summarizeLabels(labels);
    LabeledComment lc;
    lc.comment_id = c.comment_id;
    lc.text = c.text;
    lc.split = c.split;
    lc.binary_label = binaryLabel(summary);
    lc.toxicity_score = toxicityScore(summary);
    dataset.comments.push_back(std::move(lc));
  }
  return dataset;
}

CorpusStats datasetStats(const LabeledDataset& dataset,
                         const PreprocessConfig& config) {
  PreprocessConfig word_config = config;
  word_config.mode = TokenMode::word_nopunct;

  CorpusStats stats;
  std::array<std::unordered_set<std::string>, 3> unique;
  for (const auto& c : dataset.comments) {
    SplitStats& s = stats.forSplit(c.split);
    ++s.n_comments;
    if (c.binary_label == BinaryLabel::toxic) {
      ++s.n_toxic;
    } else {
      ++s.n_nontoxic;
    }
    auto tokens = truncateTokens(tokenizeWords(normalizeText(c.text, word_config)),
                                 word_config.max_words);
    s.total_word_count += static_cast<long>(tokens.size());
    auto& set = unique[static_cast<int>(c.split)];
    for (auto& t : tokens) set.insert(std::move(t));
  }
  for (Split s : kSplits) {
    stats.forSplit(s).n_unique_words =
        static_cast<long>(unique[static_cast<int>(s)].size());
  }
  return stats;
}

}  // namespace toxdet

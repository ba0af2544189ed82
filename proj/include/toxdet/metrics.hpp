#pragma once

#include <optional>
#include <span>
#include <string>

#include "toxdet/corpus.hpp"

namespace toxdet {

// Toxic is the positive class throughout.
struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
};

ConfusionCounts confusion(std::span<const BinaryLabel> predicted,
                          std::span<const BinaryLabel> truth);

// All three are 0 when their denominator is 0.
double precisionOf(const ConfusionCounts& c);
double recallOf(const ConfusionCounts& c);
// 2*tp / (2*tp + fp + fn).
double f1Score(const ConfusionCounts& c);

struct RegressionErrors {
  double rmse = 0.0;
  double mae = 0.0;
};

RegressionErrors regressionErrors(std::span<const double> scores,
                                  std::span<const double> targets);

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double threshold = 0.5;
  long n_evaluated = 0;
  ConfusionCounts counts;
};

// Thresholds scores at `threshold` (score >= threshold -> toxic), then fills
// classification metrics against binary labels and rmse/mae against the
// regression targets.
MetricsReport evaluateScores(std::span<const double> scores,
                             std::span<const BinaryLabel> binary_truth,
                             std::span<const double> regression_targets,
                             double threshold);

struct Calibration {
  double threshold = 0.0;
  double f1 = 0.0;
};

// Best-F1 decision threshold on dev scores. Candidates are 0, 1, and the
// midpoints between consecutive distinct sorted scores; F1 is piecewise
// constant between distinct scores so this sweep is exhaustive. Ties go to
// the smallest threshold.
Calibration calibrateThreshold(std::span<const double> scores,
                               std::span<const BinaryLabel> labels);

}  // namespace toxdet

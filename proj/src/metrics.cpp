#include "toxdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "toxdet/error.hpp"

namespace toxdet {

ConfusionCounts confusion(std::span<const BinaryLabel> predicted,
                          std::span<const BinaryLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw AlignmentError("confusion: " + std::to_string(predicted.size()) +
                         " predictions vs " + std::to_string(truth.size()) +
                         " labels");
  }
  if (predicted.empty()) {
    throw RangeError("confusion: empty input");
  }
  ConfusionCounts c;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_toxic = predicted[i] == BinaryLabel::toxic;
    const bool true_toxic = truth[i] == BinaryLabel::toxic;
    if (pred_toxic && true_toxic) ++c.tp;
    if (pred_toxic && !true_toxic) ++c.fp;
    if (!pred_toxic && true_toxic) ++c.fn;
    if (!pred_toxic && !true_toxic) ++c.tn;
  }
  return c;
}

double precisionOf(const ConfusionCounts& c) {
  const long denom = c.tp + c.fp;
  return denom == 0 ? 0.0 : static_cast<double>(c.tp) / denom;
}

double recallOf(const ConfusionCounts& c) {
  const long denom = c.tp + c.fn;
  return denom == 0 ? 0.0 : static_cast<double>(c.tp) / denom;
}

double f1Score(const ConfusionCounts& c) {
  const long denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / denom;
}

RegressionErrors regressionErrors(std::span<const double> scores,
                                  std::span<const double> targets) {
  if (scores.size() != targets.size()) {
    throw AlignmentError("regressionErrors: " + std::to_string(scores.size()) +
                         " scores vs " + std::to_string(targets.size()) +
                         " targets");
  }
  if (scores.empty()) {
    throw RangeError("regressionErrors: empty input");
  }
  double sq = 0.0, abs = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double d = scores[i] - targets[i];
    sq += d * d;
    abs += std::abs(d);
  }
  const double n = static_cast<double>(scores.size());
  return {std::sqrt(sq / n), abs / n};
}

MetricsReport evaluateScores(std::span<const double> scores,
                             std::span<const BinaryLabel> binary_truth,
                             std::span<const double> regression_targets,
                             double threshold) {
  std::vector<BinaryLabel> predicted;
  predicted.reserve(scores.size());
  for (double s : scores) {
    predicted.push_back(s >= threshold ? BinaryLabel::toxic
                                       : BinaryLabel::nontoxic);
  }
  MetricsReport report;
  report.counts = confusion(predicted, binary_truth);
  report.precision = precisionOf(report.counts);
  report.recall = recallOf(report.counts);
  report.f1 = f1Score(report.counts);
  auto err = regressionErrors(scores, regression_targets);
  report.rmse = err.rmse;
  report.mae = err.mae;
  report.threshold = threshold;
  report.n_evaluated = static_cast<long>(scores.size());
  return report;
}

Calibration calibrateThreshold(std::span<const double> scores,
                               std::span<const BinaryLabel> labels) {
  if (scores.size() != labels.size()) {
    throw AlignmentError("calibrateThreshold: size mismatch");
  }
  if (scores.empty()) {
    throw RangeError("calibrateThreshold: empty input");
  }

  // Sort score/label pairs descending so the examples classified toxic at a
  // given cut are a prefix; prefix sums give tp/fp per candidate in O(n).
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });

  long total_toxic = 0;
  for (auto l : labels) {
    if (l == BinaryLabel::toxic) ++total_toxic;
  }

  const long n = static_cast<long>(scores.size());
  auto f1_with_prefix = [&](long prefix_len, long prefix_toxic) {
    const long tp = prefix_toxic;
    const long fp = prefix_len - prefix_toxic;
    const long fn = total_toxic - prefix_toxic;
    const long denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  };

  // Candidate thresholds, ascending: 0, midpoints between consecutive
  // distinct scores, 1. A candidate t classifies the prefix of examples
  // with score >= t.
  struct Candidate {
    double threshold;
    long prefix_len;  // examples classified toxic
  };
  std::vector<Candidate> candidates;
  candidates.push_back({0.0, n});  // everything toxic (scores live in [0,1])

  // Walk the descending order and emit one candidate per distinct score gap.
  std::vector<double> sorted(scores.size());
  for (size_t i = 0; i < order.size(); ++i) sorted[i] = scores[order[i]];
  for (long i = n - 1; i > 0; --i) {
    if (sorted[static_cast<size_t>(i)] < sorted[static_cast<size_t>(i - 1)]) {
      const double mid = 0.5 * (sorted[static_cast<size_t>(i)] +
                                sorted[static_cast<size_t>(i - 1)]);
      candidates.push_back({mid, i});
    }
  }
  {
    // threshold 1: only scores >= 1 stay toxic
    long ge_one = 0;
    while (ge_one < n && sorted[static_cast<size_t>(ge_one)] >= 1.0) ++ge_one;
    candidates.push_back({1.0, ge_one});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return a.threshold < b.threshold;
            });

  // Toxic count per prefix length.
  std::vector<long> prefix_toxic(static_cast<size_t>(n) + 1, 0);
  for (long i = 0; i < n; ++i) {
    prefix_toxic[static_cast<size_t>(i) + 1] =
        prefix_toxic[static_cast<size_t>(i)] +
        (labels[order[static_cast<size_t>(i)]] == BinaryLabel::toxic ? 1 : 0);
  }

  Calibration best{candidates.front().threshold,
                   f1_with_prefix(candidates.front().prefix_len,
                                  prefix_toxic[static_cast<size_t>(
                                      candidates.front().prefix_len)])};
  for (const auto& cand : candidates) {
    const double f1 = f1_with_prefix(
        cand.prefix_len, prefix_toxic[static_cast<size_t>(cand.prefix_len)]);
    if (f1 > best.f1) {
      best = {cand.threshold, f1};
    }
  }
  return best;
}

}  // namespace toxdet

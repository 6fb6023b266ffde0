#pragma once

// Binary classification metrics. Label 1 is the positive class; a score
// predicts positive iff score >= threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace habitflow {

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

struct ThresholdMetrics {
  double threshold = 0.5;
  Confusion counts;
  double mcc = 0.0;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double npv = 0.0;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

namespace detail {

inline void check_scored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

inline bool has_both_classes(std::span<const int> labels) {
  bool pos = false;
  bool neg = false;
  for (int l : labels) {
    pos = pos || l == 1;
    neg = neg || l == 0;
  }
  return pos && neg;
}

inline void require_both_classes(std::span<const int> labels) {
  if (!has_both_classes(labels)) {
    throw std::invalid_argument("both classes must be present");
  }
}

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace detail

inline bool has_both_classes(std::span<const int> labels) {
  return detail::has_both_classes(labels);
}

inline double mcc(const Confusion& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (den == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(den);
}

inline Confusion confusion_at(std::span<const double> scores, std::span<const int> labels,
                              double threshold) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

/// Metrics derived from a confusion table. Ratios with an empty denominator
/// are reported as 0.
inline ThresholdMetrics metrics_from_confusion(const Confusion& c, double threshold) {
  using detail::ratio_or_zero;
  ThresholdMetrics m;
  m.threshold = threshold;
  m.counts = c;
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  m.mcc = mcc(c);
  m.accuracy = ratio_or_zero(tp + tn, tp + fp + tn + fn);
  m.tpr = ratio_or_zero(tp, tp + fn);
  m.fpr = ratio_or_zero(fp, fp + tn);
  m.precision = ratio_or_zero(tp, tp + fp);
  m.f1 = ratio_or_zero(2.0 * tp, 2.0 * tp + fp + fn);
  m.npv = ratio_or_zero(tn, tn + fn);
  return m;
}

inline ThresholdMetrics compute_threshold_metrics(std::span<const double> scores,
                                                  std::span<const int> labels,
                                                  double threshold) {
  detail::check_scored(scores, labels);
  detail::require_both_classes(labels);
  if (!std::isfinite(threshold)) throw std::invalid_argument("non-finite threshold");
  return metrics_from_confusion(confusion_at(scores, labels, threshold), threshold);
}

namespace detail {

struct RocCount {
  long fp = 0;
  long tp = 0;
  double threshold = 0.0;
};

// Cumulative (fp, tp) after admitting each distinct score, highest first.
inline std::vector<RocCount> roc_counts(std::span<const double> scores,
                                        std::span<const int> labels) {
  check_scored(scores, labels);
  require_both_classes(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocCount> pts;
  pts.push_back({0, 0, std::numeric_limits<double>::infinity()});
  long tp = 0;
  long fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      labels[order[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    pts.push_back({fp, tp, s});
  }
  return pts;
}

}  // namespace detail

/// ROC vertices from (0,0) to (1,1), one per distinct score, sweeping the
/// threshold downward. Tied scores move along a diagonal segment.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                       std::span<const int> labels) {
  const auto counts = detail::roc_counts(scores, labels);
  const double n_neg = static_cast<double>(counts.back().fp);
  const double n_pos = static_cast<double>(counts.back().tp);
  std::vector<RocPoint> pts;
  pts.reserve(counts.size());
  for (const auto& c : counts) {
    pts.push_back({c.fp / n_neg, c.tp / n_pos, c.threshold});
  }
  return pts;
}

/// Trapezoidal area under the ROC curve. Accumulated on integer counts so
/// it equals the tie-corrected pairwise ranking probability.
inline double compute_auc(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = detail::roc_counts(scores, labels);
  double twice_area = 0.0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    twice_area += static_cast<double>(counts[i].fp - counts[i - 1].fp) *
                  static_cast<double>(counts[i].tp + counts[i - 1].tp);
  }
  const double n_neg = static_cast<double>(counts.back().fp);
  const double n_pos = static_cast<double>(counts.back().tp);
  return twice_area / (2.0 * n_pos * n_neg);
}

}  // namespace habitflow

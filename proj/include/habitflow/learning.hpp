#pragma once

// L2-penalized logistic regression fit by damped Newton iteration, and
// decision-threshold selection.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/features.hpp"
#include "habitflow/metrics.hpp"

namespace habitflow {

struct LearnerConfig {
  int max_iterations = 500;
  double convergence_tol = 1e-8;
  double l2_penalty = 1e-6;
  bool standardize = true;

  void validate() const {
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be > 0");
    if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) {
      throw std::invalid_argument("l2_penalty must be >= 0");
    }
  }
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(int iterations, double gradient_norm)
      : std::runtime_error("logistic regression did not converge after " +
                           std::to_string(iterations) +
                           " iterations (gradient norm " + std::to_string(gradient_norm) + ")"),
        gradient_norm_(gradient_norm) {}

  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

/// Probability of label 1 given a raw (unstandardized) feature vector.
struct FittedModel {
  std::vector<std::string> feature_names;
  std::vector<double> means;
  std::vector<double> stddevs;
  std::vector<double> weights;
  double intercept = 0.0;

  double linear_score(std::span<const double> x) const {
    if (x.size() != weights.size()) {
      throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                  " entries, model expects " +
                                  std::to_string(weights.size()));
    }
    double z = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) {
      z += weights[j] * (x[j] - means[j]) / stddevs[j];
    }
    return z;
  }

  double predict_proba(std::span<const double> x) const {
    const double z = linear_score(x);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
};

struct FitTrace {
  std::vector<double> objective;  // penalized loss after each accepted iterate
  double gradient_norm = 0.0;
  int iterations = 0;
};

/// Penalized mean negative log-likelihood over a fixed design. theta[0] is
/// the intercept (not penalized); theta[1..] are the feature weights.
class LogisticObjective {
 public:
  LogisticObjective(Eigen::MatrixXd design, Eigen::VectorXd labels, double l2)
      : x_(std::move(design)), y_(std::move(labels)), l2_(l2) {}

  Eigen::Index dim() const { return x_.cols() + 1; }

  double value(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = scores(theta);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      loss += softplus(z[i]) - y_[i] * z[i];
    }
    const auto w = theta.tail(theta.size() - 1);
    return loss / static_cast<double>(z.size()) + 0.5 * l2_ * w.squaredNorm();
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd r = residuals(theta);
    const double n = static_cast<double>(x_.rows());
    Eigen::VectorXd g(dim());
    g[0] = r.sum() / n;
    g.tail(x_.cols()) = x_.transpose() * r / n + l2_ * theta.tail(x_.cols());
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = scores(theta);
    const double n = static_cast<double>(x_.rows());
    Eigen::MatrixXd aug(x_.rows(), dim());
    aug.col(0).setOnes();
    aug.rightCols(x_.cols()) = x_;
    Eigen::VectorXd wts(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = sigmoid(z[i]);
      wts[i] = p * (1.0 - p);
    }
    Eigen::MatrixXd h = aug.transpose() * wts.asDiagonal() * aug / n;
    for (Eigen::Index j = 1; j < dim(); ++j) h(j, j) += l2_;
    return h;
  }

  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }

 private:
  static double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }

  Eigen::VectorXd scores(const Eigen::VectorXd& theta) const {
    return (x_ * theta.tail(x_.cols())).array() + theta[0];
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd z = scores(theta);
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = sigmoid(z[i]) - y_[i];
    return r;
  }

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double l2_;
};

namespace detail {

inline void check_trainable(const FeatureMatrix& m) {
  if (m.size() < 2) throw std::invalid_argument("fit needs at least two observations");
  bool pos = false;
  bool neg = false;
  for (const auto& o : m.observations) {
    if (o.features.size() != m.width()) {
      throw std::invalid_argument("observation width does not match feature names");
    }
    for (double v : o.features) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }
    pos = pos || o.label == 1;
    neg = neg || o.label == 0;
  }
  if (!pos || !neg) throw std::invalid_argument("training set contains a single class");
}

}  // namespace detail

/// Maximizes the penalized likelihood. Weights start at zero and each Newton
/// step is halved until the objective does not increase.
inline FittedModel fit_logistic(const FeatureMatrix& m, const LearnerConfig& cfg,
                                FitTrace* trace = nullptr) {
  cfg.validate();
  detail::check_trainable(m);
  const auto n = static_cast<Eigen::Index>(m.size());
  const auto p = static_cast<Eigen::Index>(m.width());

  FittedModel model;
  model.feature_names = m.feature_names;
  model.means.assign(p, 0.0);
  model.stddevs.assign(p, 1.0);
  if (cfg.standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double mean = 0.0;
      for (const auto& o : m.observations) mean += o.features[j];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& o : m.observations) var += (o.features[j] - mean) * (o.features[j] - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      model.means[j] = mean;
      model.stddevs[j] = sd > 1e-12 ? sd : 1.0;
    }
  }

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = m.observations[i];
    for (Eigen::Index j = 0; j < p; ++j) {
      x(i, j) = (o.features[j] - model.means[j]) / model.stddevs[j];
    }
    y[i] = o.label;
  }

  const LogisticObjective obj(std::move(x), std::move(y), cfg.l2_penalty);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(obj.dim());
  double f = obj.value(theta);
  Eigen::VectorXd g = obj.gradient(theta);
  if (trace) trace->objective.push_back(f);

  int iter = 0;
  while (g.norm() > cfg.convergence_tol) {
    if (iter == cfg.max_iterations) throw ConvergenceError(iter, g.norm());
    ++iter;
    const Eigen::MatrixXd h = obj.hessian(theta);
    Eigen::VectorXd dir = h.ldlt().solve(-g);
    if (!dir.allFinite() || dir.dot(g) >= 0.0) dir = -g;

    // Near the optimum the predicted decrease drops below what the loss can
    // resolve; the full step is then taken if it stays within rounding.
    const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    const bool at_precision_floor = -0.5 * dir.dot(g) <= resolution;
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const Eigen::VectorXd cand = theta + step * dir;
      const double fc = obj.value(cand);
      if (fc <= f || (at_precision_floor && halving == 0 && fc <= f + resolution)) {
        theta = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw ConvergenceError(iter, g.norm());
    g = obj.gradient(theta);
    if (trace) trace->objective.push_back(f);
  }
  if (trace) {
    trace->gradient_norm = g.norm();
    trace->iterations = iter;
  }

  model.intercept = theta[0];
  model.weights.assign(theta.data() + 1, theta.data() + theta.size());
  return model;
}

inline std::vector<double> predict_all(const FittedModel& model, const FeatureMatrix& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& o : m.observations) out.push_back(model.predict_proba(o.features));
  return out;
}

inline std::vector<int> labels_of(const FeatureMatrix& m) {
  std::vector<int> out;
  out.reserve(m.size());
  for (const auto& o : m.observations) out.push_back(o.label);
  return out;
}

/// Anything that turns a FeatureMatrix into a model with predict_proba.
template <class L>
concept Learner = requires(const L& learner, const FeatureMatrix& m, std::span<const double> x) {
  { learner.fit(m).predict_proba(x) } -> std::convertible_to<double>;
};

class LogisticRegression {
 public:
  LogisticRegression() = default;
  explicit LogisticRegression(LearnerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  FittedModel fit(const FeatureMatrix& m) const { return fit_logistic(m, cfg_); }
  const LearnerConfig& config() const { return cfg_; }

 private:
  LearnerConfig cfg_;
};

static_assert(Learner<LogisticRegression>);

struct ThresholdChoice {
  double threshold = 0.5;
  std::string criterion = "max_mcc";
  double mcc = 0.0;
};

/// Picks the MCC-maximizing threshold. Candidates are the lowest distinct
/// probability (everything predicted positive) and the midpoints between
/// consecutive distinct probabilities. Ties go to the lower threshold.
inline ThresholdChoice choose_threshold(std::span<const double> probs,
                                        std::span<const int> labels) {
  detail::check_scored(probs, labels);
  detail::require_both_classes(labels);
  std::vector<double> uniq(probs.begin(), probs.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates{uniq.front()};
  for (std::size_t i = 1; i < uniq.size(); ++i) {
    candidates.push_back(0.5 * (uniq[i - 1] + uniq[i]));
  }

  ThresholdChoice best;
  best.threshold = candidates.front();
  best.mcc = -std::numeric_limits<double>::infinity();
  for (double c : candidates) {
    const double v = mcc(confusion_at(probs, labels, c));
    if (v > best.mcc) {
      best.mcc = v;
      best.threshold = c;
    }
  }
  return best;
}

/// Flat text: one `name mean stddev weight` line per feature, then
/// `intercept value`.
inline void save_model(const FittedModel& m, std::ostream& os) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    buf << m.feature_names[j] << ' ' << m.means[j] << ' ' << m.stddevs[j] << ' '
        << m.weights[j] << '\n';
  }
  buf << "intercept " << m.intercept << '\n';
  os << buf.str();
}

inline FittedModel load_model(std::istream& is) {
  FittedModel m;
  bool have_intercept = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.size() == 2 && tok[0] == "intercept") {
      m.intercept = std::stod(tok[1]);
      have_intercept = true;
    } else if (tok.size() == 4) {
      m.feature_names.push_back(tok[0]);
      m.means.push_back(std::stod(tok[1]));
      m.stddevs.push_back(std::stod(tok[2]));
      m.weights.push_back(std::stod(tok[3]));
    } else {
      throw std::invalid_argument("malformed model line: " + line);
    }
  }
  if (!have_intercept) throw std::invalid_argument("model file has no intercept line");
  return m;
}

}  // namespace habitflow

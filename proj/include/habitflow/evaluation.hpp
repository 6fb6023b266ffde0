#pragma once

// Participant-grouped nested cross-validation with random search over the
// cognitive parameters, and cross-cohort prediction.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/features.hpp"
#include "habitflow/learning.hpp"
#include "habitflow/metrics.hpp"
#include "habitflow/series.hpp"

namespace habitflow {

/// Independent, reproducible generator for a (seed, stream...) pair.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint32_t> stream) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  words.insert(words.end(), stream.begin(), stream.end());
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;

  std::vector<std::string> members(int fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : assignment) {
      if (f == fold) out.push_back(id);
    }
    return out;
  }
};

/// Seeded shuffle of the sorted participant ids, then round-robin assignment.
inline FoldPlan make_folds(std::vector<std::string> participants, int k, std::uint64_t seed) {
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
  if (k < 2) throw std::invalid_argument("make_folds: k must be at least 2");
  if (static_cast<std::size_t>(k) > participants.size()) {
    throw std::invalid_argument("make_folds: k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(participants.size()) + " participants");
  }
  auto rng = make_stream(seed, {0x464f4c44u});
  std::shuffle(participants.begin(), participants.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    plan.assignment[participants[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

struct SearchSpec {
  int n_steps = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_steps < 1) throw std::invalid_argument("search needs at least one step");
  }
};

/// n_steps parameter vectors, each coordinate drawn uniformly from [0,1).
inline std::vector<CognitiveParams> draw_search(const SearchSpec& spec, std::uint32_t stream) {
  spec.validate();
  auto rng = make_stream(spec.seed, {0x53524348u, stream});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CognitiveParams> out;
  out.reserve(static_cast<std::size_t>(spec.n_steps));
  for (int i = 0; i < spec.n_steps; ++i) {
    const double hdp = u(rng);
    const double hgp = u(rng);
    const double adp = u(rng);
    const double agp_beh = u(rng);
    const double agp_rem = u(rng);
    out.emplace_back(hdp, hgp, adp, agp_beh, agp_rem);
  }
  return out;
}

enum class InnerMode { single, full };

struct EvalConfig {
  int k = 5;
  SearchSpec search;
  StudyMode mode = StudyMode::study2;
  InnerMode inner = InnerMode::single;
};

struct FoldResult {
  int fold = 0;
  std::vector<std::string> test_participants;
  std::size_t n_test = 0;
  std::optional<double> auc;               // absent when the test fold has one class
  std::optional<ThresholdMetrics> metrics;  // likewise
  double threshold = 0.5;
  std::optional<CognitiveParams> params;
  std::optional<double> inner_auc;
  std::optional<FittedModel> model;
};

struct PooledPrediction {
  std::string participant_id;
  int predict_day = 0;
  int label = 0;
  double prob = 0.0;
  int fold = 0;
};

struct EvalReport {
  ModelType model_type = ModelType::survey;
  std::vector<FoldResult> folds;
  std::vector<PooledPrediction> predictions;
  std::optional<double> auc;
  std::optional<ThresholdMetrics> metrics;
  std::vector<RocPoint> roc;
};

struct LandscapeRow {
  int fold = 0;
  int step = 0;
  CognitiveParams params;
  std::optional<double> inner_auc;
};

struct LandscapeReport {
  ModelType model_type = ModelType::survey;
  std::vector<LandscapeRow> rows;
};

struct NestedCvResult {
  EvalReport report;
  LandscapeReport landscape;
};

namespace detail {

using Group = std::vector<const ParticipantSeries*>;

inline FeatureMatrix group_features(ModelType type, const Group& g,
                                    const std::optional<CognitiveParams>& params, StudyMode mode) {
  FeatureMatrix all;
  all.model_type = type;
  all.feature_names = feature_names(type);
  for (const ParticipantSeries* s : g) {
    FeatureMatrix m = build_features(type, *s, params, mode);
    std::move(m.observations.begin(), m.observations.end(), std::back_inserter(all.observations));
  }
  return all;
}

inline FeatureMatrix concat_except(ModelType type, const std::vector<FeatureMatrix>& parts,
                                   std::optional<std::size_t> skip) {
  FeatureMatrix all;
  all.model_type = type;
  all.feature_names = feature_names(type);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (skip && *skip == i) continue;
    all.observations.insert(all.observations.end(), parts[i].observations.begin(),
                            parts[i].observations.end());
  }
  return all;
}

struct Pooled {
  std::vector<double> probs;
  std::vector<int> labels;
};

// Out-of-group predictions: for each rotation r, fit on every other group
// and predict group r. Throws if a fit fails.
template <Learner L>
Pooled rotate_predict(ModelType type, const std::vector<Group>& groups,
                      const std::vector<std::size_t>& rotations,
                      const std::optional<CognitiveParams>& params, StudyMode mode,
                      const L& learner) {
  std::vector<FeatureMatrix> parts;
  parts.reserve(groups.size());
  for (const auto& g : groups) parts.push_back(group_features(type, g, params, mode));
  Pooled out;
  for (std::size_t r : rotations) {
    const FeatureMatrix train = concat_except(type, parts, r);
    const auto model = learner.fit(train);
    for (const auto& o : parts[r].observations) {
      out.probs.push_back(model.predict_proba(o.features));
      out.labels.push_back(o.label);
    }
  }
  return out;
}

inline std::vector<std::string> ids_with_observations(std::span<const ParticipantSeries> cohort) {
  std::vector<std::string> ids;
  for (const auto& s : cohort) {
    for (std::size_t d = 1; d < s.days.size(); ++d) {
      if (s.days[d].behavior) {
        ids.push_back(s.participant_id);
        break;
      }
    }
  }
  return ids;
}

inline void check_unique_ids(std::span<const ParticipantSeries> cohort) {
  std::set<std::string> seen;
  for (const auto& s : cohort) {
    if (!seen.insert(s.participant_id).second) {
      throw std::invalid_argument("duplicate participant id " + s.participant_id);
    }
  }
}

}  // namespace detail

/// Tuned parameters and the threshold chosen on held-out tuning predictions.
struct TuneResult {
  std::optional<CognitiveParams> params;
  std::optional<double> inner_auc;
  double threshold = 0.5;
  std::vector<LandscapeRow> landscape;
};

/// AUC of pooled out-of-group predictions for one parameter setting.
template <Learner L>
std::optional<double> rotation_auc(ModelType type, const std::vector<detail::Group>& groups,
                                   const std::vector<std::size_t>& rotations,
                                   const std::optional<CognitiveParams>& params, StudyMode mode,
                                   const L& learner) {
  detail::Pooled p;
  try {
    p = detail::rotate_predict(type, groups, rotations, params, mode, learner);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!has_both_classes(p.labels)) return std::nullopt;
  return compute_auc(p.probs, p.labels);
}

/// Random search (theory and combined models only) maximizing the rotation
/// AUC; the first best draw wins. The threshold is then chosen on the
/// held-out predictions made with the winning parameters.
template <Learner L>
TuneResult tune(ModelType type, const std::vector<detail::Group>& groups,
                const std::vector<std::size_t>& rotations, const EvalConfig& cfg,
                std::uint32_t stream, int fold_label, const L& learner) {
  TuneResult res;
  if (uses_cognitive_params(type)) {
    const auto draws = draw_search(cfg.search, stream);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const auto auc = rotation_auc(type, groups, rotations, draws[i], cfg.mode, learner);
      res.landscape.push_back({fold_label, static_cast<int>(i), draws[i], auc});
      if (auc && (!res.inner_auc || *auc > *res.inner_auc)) {
        res.inner_auc = auc;
        res.params = draws[i];
      }
    }
    if (!res.params) {
      throw std::runtime_error("random search found no parameter setting with a defined AUC");
    }
  }
  const auto pooled = detail::rotate_predict(type, groups, rotations, res.params, cfg.mode, learner);
  if (!has_both_classes(pooled.labels)) {
    throw std::runtime_error("tuning predictions contain a single class");
  }
  if (!uses_cognitive_params(type)) res.inner_auc = compute_auc(pooled.probs, pooled.labels);
  res.threshold = choose_threshold(pooled.probs, pooled.labels).threshold;
  return res;
}

namespace detail {

inline void finalize_report(EvalReport& r) {
  std::vector<double> probs;
  std::vector<int> labels;
  Confusion total;
  double threshold_sum = 0.0;
  for (const auto& p : r.predictions) {
    probs.push_back(p.prob);
    labels.push_back(p.label);
  }
  for (const auto& f : r.folds) {
    threshold_sum += f.threshold;
    for (const auto& p : r.predictions) {
      if (p.fold != f.fold) continue;
      const bool predicted = p.prob >= f.threshold;
      if (p.label == 1) {
        predicted ? ++total.tp : ++total.fn;
      } else {
        predicted ? ++total.fp : ++total.tn;
      }
    }
  }
  if (has_both_classes(labels)) {
    r.auc = compute_auc(probs, labels);
    r.roc = roc_curve(probs, labels);
    r.metrics = metrics_from_confusion(total, threshold_sum / static_cast<double>(r.folds.size()));
  }
}

template <class Model>
void score_fold(FoldResult& fr, EvalReport& report, const Model& model, const FeatureMatrix& test) {
  std::vector<double> probs;
  std::vector<int> labels;
  for (const auto& o : test.observations) {
    const double p = model.predict_proba(o.features);
    probs.push_back(p);
    labels.push_back(o.label);
    report.predictions.push_back({o.participant_id, o.predict_day, o.label, p, fr.fold});
  }
  fr.n_test = probs.size();
  if (has_both_classes(labels)) {
    fr.auc = compute_auc(probs, labels);
    fr.metrics = compute_threshold_metrics(probs, labels, fr.threshold);
  }
  if constexpr (std::same_as<Model, FittedModel>) fr.model = model;
}

inline std::map<std::string, const ParticipantSeries*> index_cohort(
    std::span<const ParticipantSeries> cohort) {
  detail::check_unique_ids(cohort);
  std::map<std::string, const ParticipantSeries*> by_id;
  for (const auto& s : cohort) {
    validate_series(s);
    by_id[s.participant_id] = &s;
  }
  return by_id;
}

}  // namespace detail

/// Outer loop: each fold is the test set once. Inner loop: one of the
/// remaining folds (the next one, cyclically) tunes parameters and the
/// threshold while the other k-2 train; InnerMode::full rotates through all
/// k-1 instead. The final round model is refit on all k-1 training folds.
template <Learner L = LogisticRegression>
NestedCvResult nested_cv(std::span<const ParticipantSeries> cohort, ModelType type,
                         const EvalConfig& cfg, const L& learner = L{}) {
  const auto by_id = detail::index_cohort(cohort);
  const auto ids = detail::ids_with_observations(cohort);
  if (ids.size() < static_cast<std::size_t>(cfg.k) || cfg.k < 3) {
    throw std::invalid_argument("nested_cv needs k >= 3 and at least k=" + std::to_string(cfg.k) +
                                " participants with observations (have " +
                                std::to_string(ids.size()) + ")");
  }
  const FoldPlan plan = make_folds(ids, cfg.k, cfg.search.seed);

  std::vector<detail::Group> folds(static_cast<std::size_t>(cfg.k));
  for (const auto& [id, f] : plan.assignment) folds[static_cast<std::size_t>(f)].push_back(by_id.at(id));

  NestedCvResult out;
  out.report.model_type = type;
  out.landscape.model_type = type;
  for (int o = 0; o < cfg.k; ++o) {
    std::vector<detail::Group> train;
    std::vector<int> train_fold_ids;
    for (int f = 0; f < cfg.k; ++f) {
      if (f == o) continue;
      train.push_back(folds[static_cast<std::size_t>(f)]);
      train_fold_ids.push_back(f);
    }
    std::vector<std::size_t> rotations;
    if (cfg.inner == InnerMode::full) {
      rotations.resize(train.size());
      std::iota(rotations.begin(), rotations.end(), std::size_t{0});
    } else {
      const int tuning_fold = (o + 1) % cfg.k;
      const auto it = std::find(train_fold_ids.begin(), train_fold_ids.end(), tuning_fold);
      rotations.push_back(static_cast<std::size_t>(it - train_fold_ids.begin()));
    }

    TuneResult tuned = tune(type, train, rotations, cfg, static_cast<std::uint32_t>(o), o, learner);
    out.landscape.rows.insert(out.landscape.rows.end(), tuned.landscape.begin(),
                              tuned.landscape.end());

    std::vector<FeatureMatrix> parts;
    for (const auto& g : train) {
      parts.push_back(detail::group_features(type, g, tuned.params, cfg.mode));
    }
    const auto model = learner.fit(detail::concat_except(type, parts, std::nullopt));
    const FeatureMatrix test =
        detail::group_features(type, folds[static_cast<std::size_t>(o)], tuned.params, cfg.mode);

    FoldResult fr;
    fr.fold = o;
    fr.test_participants = plan.members(o);
    fr.threshold = tuned.threshold;
    fr.params = tuned.params;
    fr.inner_auc = tuned.inner_auc;
    detail::score_fold(fr, out.report, model, test);
    out.report.folds.push_back(std::move(fr));
  }
  detail::finalize_report(out.report);
  return out;
}

struct CrossPredictResult {
  EvalReport report;
  LandscapeReport landscape;
};

/// Tunes by k-fold cross-validation on the whole training cohort, fits one
/// model on all of it and scores the test cohort once.
template <Learner L = LogisticRegression>
CrossPredictResult cross_predict(std::span<const ParticipantSeries> train_cohort,
                                 std::span<const ParticipantSeries> test_cohort, ModelType type,
                                 const EvalConfig& cfg, const L& learner = L{}) {
  const auto train_by_id = detail::index_cohort(train_cohort);
  const auto test_by_id = detail::index_cohort(test_cohort);
  for (const auto& [id, s] : test_by_id) {
    if (train_by_id.count(id)) {
      throw std::invalid_argument("cross_predict: participant " + id + " appears in both cohorts");
    }
  }
  const auto ids = detail::ids_with_observations(train_cohort);
  const FoldPlan plan = make_folds(ids, cfg.k, cfg.search.seed);
  std::vector<detail::Group> folds(static_cast<std::size_t>(cfg.k));
  for (const auto& [id, f] : plan.assignment) folds[static_cast<std::size_t>(f)].push_back(train_by_id.at(id));
  std::vector<std::size_t> rotations(folds.size());
  std::iota(rotations.begin(), rotations.end(), std::size_t{0});

  TuneResult tuned = tune(type, folds, rotations, cfg, 0xC205u, 0, learner);

  const FeatureMatrix train_all = build_features(type, train_cohort, tuned.params, cfg.mode);
  const auto model = learner.fit(train_all);
  const FeatureMatrix test = build_features(type, test_cohort, tuned.params, cfg.mode);

  CrossPredictResult out;
  out.report.model_type = type;
  out.landscape.model_type = type;
  out.landscape.rows = std::move(tuned.landscape);
  FoldResult fr;
  fr.fold = 0;
  for (const auto& [id, s] : test_by_id) fr.test_participants.push_back(id);
  fr.threshold = tuned.threshold;
  fr.params = tuned.params;
  fr.inner_auc = tuned.inner_auc;
  detail::score_fold(fr, out.report, model, test);
  out.report.folds.push_back(std::move(fr));
  detail::finalize_report(out.report);
  return out;
}

}  // namespace habitflow

#pragma once

// Feature sets for one-step-ahead prediction. An observation for predicted
// day d = t+1 may use information from days <= t only. Label 1 marks a day
// without the target behavior.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/habit_dynamics.hpp"
#include "habitflow/series.hpp"

namespace habitflow {

enum class ModelType { survey, past_behavior, theory, combined };

inline constexpr ModelType kAllModelTypes[] = {
    ModelType::survey, ModelType::past_behavior, ModelType::theory,
    ModelType::combined};

inline std::string to_string(ModelType m) {
  switch (m) {
    case ModelType::survey: return "survey";
    case ModelType::past_behavior: return "past_behavior";
    case ModelType::theory: return "theory";
    case ModelType::combined: return "combined";
  }
  return "?";
}

inline ModelType parse_model_type(const std::string& s) {
  for (ModelType m : kAllModelTypes) {
    if (to_string(m) == s) return m;
  }
  if (s == "pb") return ModelType::past_behavior;
  throw std::invalid_argument("unknown model type: " + s);
}

/// True when the model type computes habit/accessibility features and so
/// needs CognitiveParams.
inline bool uses_cognitive_params(ModelType m) {
  return m == ModelType::theory || m == ModelType::combined;
}

struct Observation {
  std::string participant_id;
  int predict_day = 0;
  int label = 0;
  std::vector<double> features;
};

struct FeatureMatrix {
  ModelType model_type = ModelType::survey;
  std::vector<std::string> feature_names;
  std::vector<Observation> observations;

  std::size_t size() const { return observations.size(); }
  std::size_t width() const { return feature_names.size(); }
};

namespace detail {

// Reminder occurrence as a predictor: app notifications and survey e-mails.
inline bool reminder_occurred(const DayRow& r) {
  return r.reminder != 0 || r.has_survey();
}

inline constexpr int kRecentWindowDays = 3;

// Appends lab_today, lab_recent, reminder_today, reminder_recent for day index t.
inline void append_event_features(const ParticipantSeries& s, std::size_t t,
                                  std::vector<double>& out) {
  const std::size_t from = t + 1 >= kRecentWindowDays ? t + 1 - kRecentWindowDays : 0;
  bool lab_recent = false;
  bool rem_recent = false;
  for (std::size_t i = from; i <= t; ++i) {
    lab_recent = lab_recent || s.days[i].lab != 0;
    rem_recent = rem_recent || reminder_occurred(s.days[i]);
  }
  out.push_back(s.days[t].lab != 0 ? 1.0 : 0.0);
  out.push_back(lab_recent ? 1.0 : 0.0);
  out.push_back(reminder_occurred(s.days[t]) ? 1.0 : 0.0);
  out.push_back(rem_recent ? 1.0 : 0.0);
}

inline const std::vector<std::string>& event_feature_names() {
  static const std::vector<std::string> names = {"lab_today", "lab_recent",
                                                 "reminder_today", "reminder_recent"};
  return names;
}

template <class RowFn>
FeatureMatrix build_rows(const ParticipantSeries& s, ModelType type,
                         std::vector<std::string> names, RowFn&& row_for) {
  validate_series(s);
  FeatureMatrix m;
  m.model_type = type;
  m.feature_names = std::move(names);
  for (std::size_t d = 1; d < s.days.size(); ++d) {
    const auto& target = s.days[d].behavior;
    if (!target) continue;
    std::vector<double> f;
    f.reserve(m.feature_names.size());
    if (!row_for(d - 1, f)) continue;
    m.observations.push_back({s.participant_id, s.days[d].day, 1 - *target, std::move(f)});
  }
  return m;
}

}  // namespace detail

inline std::vector<std::string> feature_names(ModelType m) {
  std::vector<std::string> names;
  const auto& ev = detail::event_feature_names();
  switch (m) {
    case ModelType::survey:
      names = {"instrumental", "affective", "srbai"};
      names.insert(names.end(), ev.begin(), ev.end());
      break;
    case ModelType::past_behavior:
      names = {"past_rate"};
      names.insert(names.end(), ev.begin(), ev.end());
      break;
    case ModelType::theory:
      names = {"hs", "acc"};
      break;
    case ModelType::combined:
      names = feature_names(ModelType::past_behavior);
      names.push_back("hs");
      names.push_back("acc");
      break;
  }
  return names;
}

/// Weekly survey values forward-filled to the predicted day. Predictions
/// with no earlier value for some survey column are dropped.
inline FeatureMatrix build_survey_features(const ParticipantSeries& s) {
  struct Filled {
    std::optional<double> inst, aff, srbai;
  };
  std::vector<Filled> filled(s.days.size());
  Filled cur;
  for (std::size_t i = 0; i < s.days.size(); ++i) {
    const DayRow& r = s.days[i];
    if (r.instrumental) cur.inst = r.instrumental;
    if (r.affective) cur.aff = r.affective;
    if (r.srbai) cur.srbai = r.srbai;
    filled[i] = cur;
  }
  return detail::build_rows(
      s, ModelType::survey, feature_names(ModelType::survey),
      [&](std::size_t t, std::vector<double>& f) {
        const Filled& v = filled[t];
        if (!v.inst || !v.aff || !v.srbai) return false;
        f.push_back(*v.inst);
        f.push_back(*v.aff);
        f.push_back(*v.srbai);
        detail::append_event_features(s, t, f);
        return true;
      });
}

/// past_rate for predicted day d: mean of the non-missing behavior on days
/// 1..d-1 (the first row is the enrollment day and is not counted). Falls
/// back to the initial rate when nothing has been observed yet; that rate
/// is 0 in study1 mode and the self-reported rate in study2 mode.
inline FeatureMatrix build_past_behavior_features(const ParticipantSeries& s,
                                                  StudyMode mode) {
  const double initial = mode == StudyMode::study1 ? 0.0 : s.initial_behavior_rate;
  // rate_through[t] covers days 1..t
  std::vector<double> rate_through(s.days.size(), initial);
  double sum = 0.0;
  int count = 0;
  for (std::size_t t = 1; t < s.days.size(); ++t) {
    if (s.days[t].behavior) {
      sum += *s.days[t].behavior;
      ++count;
    }
    if (count > 0) rate_through[t] = sum / count;
  }
  return detail::build_rows(
      s, ModelType::past_behavior, feature_names(ModelType::past_behavior),
      [&](std::size_t t, std::vector<double>& f) {
        f.push_back(rate_through[t]);
        detail::append_event_features(s, t, f);
        return true;
      });
}

/// Habit strength and accessibility after incorporating day t, attached to
/// predicted day t+1. Initial accessibility is 1; initial habit strength
/// comes from the baseline SRBAI when present.
inline FeatureMatrix build_theory_features(const ParticipantSeries& s,
                                           const CognitiveParams& params) {
  const auto states = trajectory(s, params, baseline_hs(s), 1.0);
  return detail::build_rows(s, ModelType::theory, feature_names(ModelType::theory),
                            [&](std::size_t t, std::vector<double>& f) {
                              f.push_back(states[t + 1].hs);
                              f.push_back(states[t + 1].acc);
                              return true;
                            });
}

inline FeatureMatrix build_combined_features(const ParticipantSeries& s,
                                             const CognitiveParams& params,
                                             StudyMode mode) {
  FeatureMatrix pb = build_past_behavior_features(s, mode);
  const FeatureMatrix th = build_theory_features(s, params);
  if (pb.size() != th.size()) {
    throw std::logic_error("combined features: constituent row counts differ");
  }
  pb.model_type = ModelType::combined;
  pb.feature_names = feature_names(ModelType::combined);
  for (std::size_t i = 0; i < pb.size(); ++i) {
    auto& dst = pb.observations[i].features;
    const auto& src = th.observations[i].features;
    dst.insert(dst.end(), src.begin(), src.end());
  }
  return pb;
}

inline FeatureMatrix build_features(ModelType type, const ParticipantSeries& s,
                                    const std::optional<CognitiveParams>& params,
                                    StudyMode mode) {
  if (uses_cognitive_params(type) && !params) {
    throw std::invalid_argument(to_string(type) + " features need CognitiveParams");
  }
  switch (type) {
    case ModelType::survey: return build_survey_features(s);
    case ModelType::past_behavior: return build_past_behavior_features(s, mode);
    case ModelType::theory: return build_theory_features(s, *params);
    case ModelType::combined: return build_combined_features(s, *params, mode);
  }
  throw std::logic_error("unreachable");
}

/// Stacks the per-participant matrices of a cohort, in cohort order.
inline FeatureMatrix build_features(ModelType type,
                                    std::span<const ParticipantSeries> cohort,
                                    const std::optional<CognitiveParams>& params,
                                    StudyMode mode) {
  FeatureMatrix all;
  all.model_type = type;
  all.feature_names = feature_names(type);
  for (const auto& s : cohort) {
    FeatureMatrix m = build_features(type, s, params, mode);
    std::move(m.observations.begin(), m.observations.end(),
              std::back_inserter(all.observations));
  }
  return all;
}

}  // namespace habitflow

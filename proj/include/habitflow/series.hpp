#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/habit_dynamics.hpp"

namespace habitflow {

enum class StudyMode { study1, study2 };

inline StudyMode parse_study_mode(const std::string& s) {
  if (s == "study1") return StudyMode::study1;
  if (s == "study2") return StudyMode::study2;
  throw std::invalid_argument("unknown study mode: " + s);
}

inline std::string to_string(StudyMode m) {
  return m == StudyMode::study1 ? "study1" : "study2";
}

/// One day of a participant's record. Surveys are sparse: a survey was
/// administered on a day iff any of its three values is present.
struct DayRow {
  int day = 0;
  std::optional<int> behavior;
  int reminder = 0;
  int lab = 0;
  std::optional<double> instrumental;
  std::optional<double> affective;
  std::optional<double> srbai;

  bool has_survey() const {
    return instrumental.has_value() || affective.has_value() || srbai.has_value();
  }
};

struct ParticipantSeries {
  std::string participant_id;
  std::vector<DayRow> days;
  double initial_behavior_rate = 0.0;
};

inline void validate_series(const ParticipantSeries& s) {
  if (s.days.empty()) {
    throw std::invalid_argument("participant " + s.participant_id + " has no days");
  }
  for (std::size_t i = 1; i < s.days.size(); ++i) {
    if (s.days[i].day != s.days[i - 1].day + 1) {
      throw std::invalid_argument("participant " + s.participant_id +
                                  ": day indices are not consecutive");
    }
  }
  if (!(s.initial_behavior_rate >= 0.0 && s.initial_behavior_rate <= 1.0)) {
    throw std::invalid_argument("participant " + s.participant_id +
                                ": initial_behavior_rate outside [0,1]");
  }
}

/// Maps the 1-7 SRBAI scale onto [0,1].
inline double scale_srbai(double srbai) {
  if (!(srbai >= 1.0 && srbai <= 7.0)) {
    throw std::invalid_argument("srbai must lie on the 1-7 scale");
  }
  return (srbai - 1.0) / 6.0;
}

/// Reminder seen by the accessibility update: app reminders, lab sessions
/// and survey e-mails all count.
inline int accessibility_reminder(const DayRow& r) {
  return (r.reminder != 0 || r.lab != 0 || r.has_survey()) ? 1 : 0;
}

inline std::vector<DatedEvent> to_day_events(const ParticipantSeries& s) {
  std::vector<DatedEvent> out;
  out.reserve(s.days.size());
  for (const DayRow& r : s.days) {
    DayEvent e;
    e.beh = r.behavior;
    e.rem = accessibility_reminder(r);
    e.lab = r.lab;
    out.push_back({r.day, e});
  }
  return out;
}

/// Initial habit strength from the baseline (first-day) SRBAI, if any.
inline double baseline_hs(const ParticipantSeries& s) {
  if (s.days.empty() || !s.days.front().srbai) return default_initial_hs(std::nullopt);
  return default_initial_hs(scale_srbai(*s.days.front().srbai));
}

inline std::vector<CognitiveState> trajectory(const ParticipantSeries& s,
                                              const CognitiveParams& params,
                                              double hs0, double acc0) {
  validate_series(s);
  const auto events = to_day_events(s);
  return trajectory(std::span<const DatedEvent>(events), params, hs0, acc0);
}

}  // namespace habitflow

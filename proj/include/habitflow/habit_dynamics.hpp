#pragma once

// Habit strength and memory accessibility recurrences.
//
//   HS(t+1)  = HS(t)  - HS(t)*HDP  + (1 - HS(t)) * Beh(t) * Cue(t) * HGP
//   Acc(t+1) = Acc(t) - Acc(t)*ADP + (1 - Acc(t)) * (Beh(t)*AGP_beh + Rem(t)*AGP_rem)
//
// One step is one calendar day.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace habitflow {

class CognitiveParams {
 public:
  CognitiveParams(double hdp, double hgp, double adp, double agp_beh,
                  double agp_rem)
      : hdp_(checked(hdp, "hdp")),
        hgp_(checked(hgp, "hgp")),
        adp_(checked(adp, "adp")),
        agp_beh_(checked(agp_beh, "agp_beh")),
        agp_rem_(checked(agp_rem, "agp_rem")) {}

  double hdp() const { return hdp_; }
  double hgp() const { return hgp_; }
  double adp() const { return adp_; }
  double agp_beh() const { return agp_beh_; }
  double agp_rem() const { return agp_rem_; }

  friend bool operator==(const CognitiveParams&,
                         const CognitiveParams&) = default;

 private:
  static double checked(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument(std::string("CognitiveParams: ") + name +
                                  " must lie in [0,1]");
    }
    return v;
  }

  double hdp_, hgp_, adp_, agp_beh_, agp_rem_;
};

struct CognitiveState {
  double hs = 0.0;
  double acc = 0.0;
  int t = 0;

  friend bool operator==(const CognitiveState&,
                         const CognitiveState&) = default;
};

/// Observed inputs for a single day. `beh` is empty when the day's behavior
/// could not be measured. Lab sessions count as reminders for accessibility.
struct DayEvent {
  std::optional<int> beh;
  int cue = 1;
  int rem = 0;
  int lab = 0;
};

/// A DayEvent tagged with its day index, as consumed by trajectory().
struct DatedEvent {
  int day = 0;
  DayEvent event;
};

namespace detail {

inline void require_fraction(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw std::invalid_argument(std::string(what) + " must be a finite value in [0,1]");
  }
}

inline void require_binary(int v, const char* what) {
  if (v != 0 && v != 1) {
    throw std::invalid_argument(std::string(what) + " must be 0 or 1");
  }
}

inline void validate_event(const DayEvent& e) {
  if (e.beh) require_binary(*e.beh, "DayEvent.beh");
  require_binary(e.cue, "DayEvent.cue");
  require_binary(e.rem, "DayEvent.rem");
  require_binary(e.lab, "DayEvent.lab");
}

inline double habit_update(double hs, int beh, int cue, const CognitiveParams& p) {
  return hs - hs * p.hdp() + (1.0 - hs) * beh * cue * p.hgp();
}

inline double accessibility_update(double acc, int beh, int reminded,
                                   const CognitiveParams& p) {
  const double raw =
      acc - acc * p.adp() + (1.0 - acc) * (beh * p.agp_beh() + reminded * p.agp_rem());
  return std::clamp(raw, 0.0, 1.0);
}

}  // namespace detail

inline double step_habit(double state_hs, const DayEvent& event,
                         const CognitiveParams& params) {
  detail::require_fraction(state_hs, "habit strength");
  detail::validate_event(event);
  if (!event.beh) {
    throw std::invalid_argument("step_habit: behavior is missing");
  }
  return detail::habit_update(state_hs, *event.beh, event.cue, params);
}

/// Raw values above 1 (both gains firing at once) are clamped.
inline double step_accessibility(double state_acc, const DayEvent& event,
                                 const CognitiveParams& params) {
  detail::require_fraction(state_acc, "accessibility");
  detail::validate_event(event);
  if (!event.beh) {
    throw std::invalid_argument("step_accessibility: behavior is missing");
  }
  return detail::accessibility_update(state_acc, *event.beh,
                                      std::max(event.rem, event.lab), params);
}

/// States for t = 0..N where N = events.size(); state t+1 incorporates the
/// events of day t. A day with missing behavior only decays.
inline std::vector<CognitiveState> trajectory(std::span<const DatedEvent> events,
                                              const CognitiveParams& params,
                                              double hs0, double acc0) {
  detail::require_fraction(hs0, "hs0");
  detail::require_fraction(acc0, "acc0");
  if (events.empty()) {
    throw std::invalid_argument("trajectory: empty series");
  }
  std::vector<CognitiveState> states;
  states.reserve(events.size() + 1);
  states.push_back({hs0, acc0, 0});
  double hs = hs0;
  double acc = acc0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && events[i].day != events[i - 1].day + 1) {
      throw std::invalid_argument("trajectory: day indices are not consecutive");
    }
    const DayEvent& e = events[i].event;
    detail::validate_event(e);
    const int beh = e.beh.value_or(0);
    hs = detail::habit_update(hs, beh, e.cue, params);
    acc = detail::accessibility_update(acc, beh, std::max(e.rem, e.lab), params);
    states.push_back({hs, acc, static_cast<int>(i) + 1});
  }
  return states;
}

/// Initial habit strength: the scaled self-report when one exists, otherwise
/// 0 (a cohort recruited for rarely performing the behavior).
inline double default_initial_hs(std::optional<double> self_report) {
  if (!self_report) return 0.0;
  detail::require_fraction(*self_report, "self-reported habit strength");
  return *self_report;
}

/// Long-run habit strength under constant performance with Cue = 1.
inline double habit_fixed_point(const CognitiveParams& p) {
  const double denom = p.hdp() + p.hgp();
  if (denom <= 0.0) {
    throw std::invalid_argument("habit_fixed_point: hdp + hgp must be positive");
  }
  return p.hgp() / denom;
}

}  // namespace habitflow

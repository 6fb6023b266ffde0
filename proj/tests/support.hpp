#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "habitflow/series.hpp"

namespace testing_support {

// Builds a series from a behavior string: '1', '0' or '.' (missing).
inline habitflow::ParticipantSeries series_from(const std::string& id, const std::string& beh,
                                                double initial_rate = 0.0) {
  habitflow::ParticipantSeries s;
  s.participant_id = id;
  s.initial_behavior_rate = initial_rate;
  for (std::size_t i = 0; i < beh.size(); ++i) {
    habitflow::DayRow r;
    r.day = static_cast<int>(i);
    if (beh[i] != '.') r.behavior = beh[i] == '1' ? 1 : 0;
    s.days.push_back(r);
  }
  return s;
}

inline void add_survey(habitflow::ParticipantSeries& s, int day, double inst, double aff,
                       double srbai) {
  auto& r = s.days.at(static_cast<std::size_t>(day));
  r.instrumental = inst;
  r.affective = aff;
  r.srbai = srbai;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace testing_support

#pragma once

// Accelerometer traces to day-level brushing outcomes:
//   50 Hz (x, y, z) -> 1 Hz signal vector magnitude -> threshold episodes ->
//   time-of-day categories -> morning / evening / target indicators.
//
// Timestamps are local wall-clock seconds since 1970-01-01.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/series.hpp"

namespace habitflow::sensor {

struct Sample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct RawTrace {
  std::vector<Sample> samples;
};

struct SvmPoint {
  double window_start = 0.0;
  double magnitude = 0.0;
};

struct SvmSeries {
  std::vector<SvmPoint> points;
};

struct ThresholdConfig {
  double activity_threshold = 0.08;  // g
  double min_duration = 30.0;        // s
  double merge_gap = 10.0;           // s

  void validate() const {
    if (!(activity_threshold >= 0.0) || !std::isfinite(activity_threshold)) {
      throw std::invalid_argument("activity_threshold must be finite and >= 0");
    }
    if (!(min_duration >= 0.0) || !std::isfinite(min_duration)) {
      throw std::invalid_argument("min_duration must be finite and >= 0");
    }
    if (!(merge_gap >= 0.0) || !std::isfinite(merge_gap)) {
      throw std::invalid_argument("merge_gap must be finite and >= 0");
    }
  }
};

inline constexpr int kSamplesPerWindow = 50;
inline constexpr double kSecondsPerDay = 86400.0;

enum class TimeCategory { morning, morning_afternoon, afternoon, afternoon_evening, evening, overnight };

inline std::string to_string(TimeCategory c) {
  switch (c) {
    case TimeCategory::morning: return "morning";
    case TimeCategory::morning_afternoon: return "morning-afternoon";
    case TimeCategory::afternoon: return "afternoon";
    case TimeCategory::afternoon_evening: return "afternoon-evening";
    case TimeCategory::evening: return "evening";
    case TimeCategory::overnight: return "overnight";
  }
  return "?";
}

using Date = std::chrono::sys_days;

inline Date date_of(double timestamp) {
  return Date{std::chrono::days{static_cast<long>(std::floor(timestamp / kSecondsPerDay))}};
}

inline double seconds_into_day(double timestamp) {
  const double d = std::floor(timestamp / kSecondsPerDay);
  return timestamp - d * kSecondsPerDay;
}

/// Half-open hour ranges on the start time:
/// overnight [0,5) morning [5,12) morning-afternoon [12,15) afternoon [15,19)
/// afternoon-evening [19,21) evening [21,24).
inline TimeCategory categorize(double timestamp) {
  const double h = seconds_into_day(timestamp) / 3600.0;
  if (h < 5.0) return TimeCategory::overnight;
  if (h < 12.0) return TimeCategory::morning;
  if (h < 15.0) return TimeCategory::morning_afternoon;
  if (h < 19.0) return TimeCategory::afternoon;
  if (h < 21.0) return TimeCategory::afternoon_evening;
  return TimeCategory::evening;
}

struct BrushEpisode {
  double start = 0.0;
  double end = 0.0;
  TimeCategory category = TimeCategory::morning;
  bool valid = true;
};

enum class Session { morning, evening };

struct TargetRule {
  StudyMode mode = StudyMode::study2;
  Session session = Session::evening;  // study1: the session being trained
};

struct DayOutcome {
  std::string participant_id;
  Date date;
  std::optional<int> morning;
  std::optional<int> evening;
  std::optional<int> target;
};

struct NoiseWindow {
  std::string participant_id;
  Date start;
  Date end;  // inclusive
};

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline Date parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw std::invalid_argument("malformed date: '" + s + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid date: '" + s + "'");
  return Date{ymd};
}

/// Per 1 s window of 50 samples: mean of |sqrt(x^2+y^2+z^2) - 1 g|.
/// A trailing partial window is dropped.
inline SvmSeries to_svm(const RawTrace& trace) {
  const auto& s = trace.samples;
  if (s.empty()) throw std::invalid_argument("to_svm: empty trace");
  if (s.size() < static_cast<std::size_t>(kSamplesPerWindow)) {
    throw std::invalid_argument("to_svm: fewer than 50 samples");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i].t) || !std::isfinite(s[i].x) || !std::isfinite(s[i].y) ||
        !std::isfinite(s[i].z)) {
      throw std::invalid_argument("to_svm: non-finite sample");
    }
    if (i > 0 && !(s[i].t > s[i - 1].t)) {
      throw std::invalid_argument("to_svm: timestamps must be strictly increasing");
    }
  }
  SvmSeries out;
  const std::size_t windows = s.size() / kSamplesPerWindow;
  out.points.reserve(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    double sum = 0.0;
    for (std::size_t i = w * kSamplesPerWindow; i < (w + 1) * kSamplesPerWindow; ++i) {
      sum += std::abs(std::sqrt(s[i].x * s[i].x + s[i].y * s[i].y + s[i].z * s[i].z) - 1.0);
    }
    out.points.push_back({s[w * kSamplesPerWindow].t, sum / kSamplesPerWindow});
  }
  return out;
}

namespace detail {

// Two SVM points are adjacent seconds when their windows are ~1 s apart;
// larger jumps mean the recording had a gap.
inline bool adjacent(const SvmPoint& a, const SvmPoint& b) {
  return b.window_start - a.window_start < 1.5;
}

}  // namespace detail

/// Runs of adjacent seconds at or above the activity threshold. Runs whose
/// gap (next start minus previous end) is below merge_gap are merged, then
/// runs shorter than min_duration are discarded. A run covering points i..j
/// spans [start_i, start_j + 1 s).
inline std::vector<BrushEpisode> extract_episodes(const SvmSeries& series,
                                                  const ThresholdConfig& cfg) {
  cfg.validate();
  const auto& p = series.points;
  if (p.empty()) throw std::invalid_argument("extract_episodes: empty series");

  std::vector<BrushEpisode> runs;
  std::size_t i = 0;
  while (i < p.size()) {
    if (!(p[i].magnitude >= cfg.activity_threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < p.size() && p[j + 1].magnitude >= cfg.activity_threshold &&
           detail::adjacent(p[j], p[j + 1])) {
      ++j;
    }
    runs.push_back({p[i].window_start, p[j].window_start + 1.0, TimeCategory::morning, true});
    i = j + 1;
  }

  std::vector<BrushEpisode> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.start - merged.back().end < cfg.merge_gap) {
      merged.back().end = r.end;
    } else {
      merged.push_back(r);
    }
  }

  std::vector<BrushEpisode> out;
  for (auto& e : merged) {
    if (e.end - e.start < cfg.min_duration) continue;
    e.category = categorize(e.start);
    out.push_back(e);
  }
  return out;
}

/// Morning: any valid episode in `morning`, else in `morning-afternoon`.
/// Evening: any in `evening` or `overnight` of the same date, else in
/// `afternoon-evening`. Target: study1 uses the trained session's indicator;
/// study2 requires both sessions.
inline DayOutcome classify_day(std::span<const BrushEpisode> episodes, Date date,
                               const TargetRule& rule) {
  bool has[6] = {false, false, false, false, false, false};
  for (const auto& e : episodes) {
    if (date_of(e.start) != date) {
      throw std::invalid_argument("classify_day: episode not on " + format_date(date));
    }
    if (!e.valid) continue;
    has[static_cast<int>(categorize(e.start))] = true;
  }
  auto on = [&](TimeCategory c) { return has[static_cast<int>(c)]; };
  const int morning =
      (on(TimeCategory::morning) || on(TimeCategory::morning_afternoon)) ? 1 : 0;
  const int evening = (on(TimeCategory::evening) || on(TimeCategory::overnight) ||
                       on(TimeCategory::afternoon_evening))
                          ? 1
                          : 0;
  DayOutcome out;
  out.date = date;
  out.morning = morning;
  out.evening = evening;
  if (rule.mode == StudyMode::study1) {
    out.target = rule.session == Session::morning ? morning : evening;
  } else {
    out.target = (morning == 1 && evening == 1) ? 1 : 0;
  }
  return out;
}

inline void validate_window(const NoiseWindow& w) {
  if (w.end < w.start) {
    throw std::invalid_argument("noise window for " + w.participant_id + " ends before it starts");
  }
}

/// Days covered by a participant's noise windows lose all three indicators.
inline std::vector<DayOutcome> mark_missing(std::vector<DayOutcome> outcomes,
                                            std::span<const NoiseWindow> windows) {
  for (const auto& w : windows) validate_window(w);
  for (auto& o : outcomes) {
    for (const auto& w : windows) {
      if (w.participant_id == o.participant_id && o.date >= w.start && o.date <= w.end) {
        o.morning.reset();
        o.evening.reset();
        o.target.reset();
        break;
      }
    }
  }
  return outcomes;
}

/// Full pipeline for one participant's trace. Every date from the first to
/// the last sample gets a row; dates without any samples are missing.
inline std::vector<DayOutcome> process_trace(const std::string& participant_id,
                                             const RawTrace& trace, const ThresholdConfig& cfg,
                                             const TargetRule& rule) {
  const SvmSeries svm = to_svm(trace);
  const auto episodes = extract_episodes(svm, cfg);
  const Date first = date_of(trace.samples.front().t);
  const Date last = date_of(trace.samples.back().t);

  std::vector<bool> has_data(static_cast<std::size_t>((last - first).count()) + 1, false);
  for (const auto& pt : svm.points) {
    has_data[static_cast<std::size_t>((date_of(pt.window_start) - first).count())] = true;
  }

  std::vector<DayOutcome> out;
  std::size_t next = 0;
  for (Date d = first; d <= last; d += std::chrono::days{1}) {
    std::vector<BrushEpisode> today;
    while (next < episodes.size() && date_of(episodes[next].start) == d) {
      today.push_back(episodes[next++]);
    }
    DayOutcome o;
    if (has_data[static_cast<std::size_t>((d - first).count())]) {
      o = classify_day(today, d, rule);
    } else {
      o.date = d;
    }
    o.participant_id = participant_id;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace habitflow::sensor

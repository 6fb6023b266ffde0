#pragma once

// Synthetic cohorts with known habit dynamics, and synthetic accelerometer
// traces that the sensor pipeline should decode back to known outcomes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/evaluation.hpp"
#include "habitflow/habit_dynamics.hpp"
#include "habitflow/sensor_pipeline.hpp"
#include "habitflow/series.hpp"

namespace habitflow::sim {

/// P(behavior) = sigmoid(a + b*hs + c*acc)
struct BehaviorLink {
  double a = -3.5;
  double b = 8.0;
  double c = 3.0;

  double probability(double hs, double acc) const {
    return LogisticObjective::sigmoid(a + b * hs + c * acc);
  }
};

/// Reminders every day of week 1, every other day of week 2, none after.
inline std::vector<int> default_reminder_days() {
  std::vector<int> days;
  for (int d = 0; d < 7; ++d) days.push_back(d);
  for (int d = 7; d < 14; d += 2) days.push_back(d);
  return days;
}

struct SimCohortSpec {
  int n_participants = 75;
  int n_days = 21;
  CognitiveParams true_params{0.175, 0.15, 0.3, 0.5, 0.5};
  BehaviorLink link;
  std::vector<int> reminder_days = default_reminder_days();
  std::vector<int> lab_days{0};
  std::vector<int> survey_days{0, 7, 14};
  double survey_noise_sd = 1.0;  // on the 1-7 scale
  double missing_rate = 0.05;
  double initial_hs_max = 0.1;  // true initial habit strength ~ U(0, max)
  std::uint64_t seed = 1;
  std::string id_prefix = "P";
  std::string start_date = "2024-01-01";

  void validate() const {
    if (n_participants < 1) throw std::invalid_argument("n_participants must be >= 1");
    if (n_days < 1) throw std::invalid_argument("n_days must be >= 1");
    if (!std::isfinite(link.a) || !std::isfinite(link.b) || !std::isfinite(link.c)) {
      throw std::invalid_argument("behavior link coefficients must be finite");
    }
    if (!(survey_noise_sd >= 0.0) || !std::isfinite(survey_noise_sd)) {
      throw std::invalid_argument("survey_noise_sd must be finite and >= 0");
    }
    if (!(missing_rate >= 0.0 && missing_rate <= 1.0)) {
      throw std::invalid_argument("missing_rate must lie in [0,1]");
    }
    if (!(initial_hs_max >= 0.0 && initial_hs_max <= 1.0)) {
      throw std::invalid_argument("initial_hs_max must lie in [0,1]");
    }
    sensor::parse_date(start_date);
  }
};

struct TruthRow {
  std::string participant_id;
  int day = 0;
  double hs = 0.0;   // state at the start of the day
  double acc = 0.0;  // likewise
  double p = 0.0;    // probability of the behavior that day
  int behavior = 0;  // drawn behavior, observed or not
};

struct SimCohort {
  std::vector<ParticipantSeries> participants;
  std::vector<TruthRow> truth;
  std::vector<double> initial_hs;  // per participant
};

namespace detail {

inline bool contains(const std::vector<int>& v, int x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

inline std::string participant_id(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i + 1);
  return prefix + buf;
}

}  // namespace detail

/// Forward simulation: each day the behavior is drawn from the link at the
/// current state, then the state advances with the true parameters using
/// the same event mapping the feature builders use. A missing day counts as
/// no behavior for the state, as it does in trajectory(), so the emitted
/// series and the true initial habit strength reproduce the truth log.
inline SimCohort simulate_cohort(const SimCohortSpec& spec) {
  spec.validate();
  SimCohort out;
  const auto& tp = spec.true_params;
  for (int i = 0; i < spec.n_participants; ++i) {
    auto rng = make_stream(spec.seed, {0x50415254u, static_cast<std::uint32_t>(i)});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    ParticipantSeries s;
    s.participant_id = detail::participant_id(spec.id_prefix, i);
    const double hs0 = spec.initial_hs_max * unif(rng);
    const double instrumental = 5.5 + 0.8 * noise(rng);
    const double affective = 4.5 + 1.0 * noise(rng);
    double hs = hs0;
    double acc = 1.0;
    s.initial_behavior_rate = spec.link.probability(hs0, acc);

    auto survey_value = [&](double latent) {
      return std::clamp(latent + spec.survey_noise_sd * noise(rng), 1.0, 7.0);
    };

    for (int d = 0; d < spec.n_days; ++d) {
      DayRow row;
      row.day = d;
      row.reminder = detail::contains(spec.reminder_days, d) ? 1 : 0;
      row.lab = detail::contains(spec.lab_days, d) ? 1 : 0;
      if (detail::contains(spec.survey_days, d)) {
        row.instrumental = survey_value(instrumental);
        row.affective = survey_value(affective);
        row.srbai = survey_value(1.0 + 6.0 * hs);
      }
      const double p = spec.link.probability(hs, acc);
      const int beh = unif(rng) < p ? 1 : 0;
      const bool missing = unif(rng) < spec.missing_rate;
      if (!missing) row.behavior = beh;
      out.truth.push_back({s.participant_id, d, hs, acc, p, beh});

      DayEvent e;
      e.beh = missing ? 0 : beh;
      e.rem = accessibility_reminder(row);
      e.lab = row.lab;
      hs = step_habit(hs, e, tp);
      acc = step_accessibility(acc, e, tp);
      s.days.push_back(std::move(row));
    }
    out.participants.push_back(std::move(s));
    out.initial_hs.push_back(hs0);
  }
  return out;
}

struct SimTraceSpec {
  double episode_duration = 120.0;  // s
  double spike_magnitude = 1.0;     // g, oscillation amplitude
  double oscillation_hz = 5.0;
  double noise_sd = 0.01;  // g, per axis
  double sample_rate = 50.0;
  double padding = 60.0;         // s of idle signal recorded around each episode
  double idle_segment = 120.0;   // s of idle signal recorded every day
  double idle_segment_at = 16.5 * 3600.0;  // seconds into the day
  bool continuous = false;       // record the whole day instead of segments
  std::uint64_t seed = 1;

  void validate() const {
    if (!(episode_duration > 0.0)) throw std::invalid_argument("episode_duration must be > 0");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be >= 0");
    if (sample_rate != 50.0) throw std::invalid_argument("sample_rate must be 50 Hz");
  }
};

/// Episode start times (seconds into the day) planned for one date.
struct DayPlan {
  sensor::Date date;
  std::vector<double> episode_starts;
};

/// 50 Hz gravity-plus-noise signal with a strong oscillation during each
/// planned episode. Samples sit on a 0.02 s grid anchored at midnight.
inline sensor::RawTrace simulate_trace(const SimTraceSpec& spec, const std::vector<DayPlan>& plan) {
  spec.validate();
  constexpr long kTicksPerDay = 86400L * 50L;
  const double dt = 1.0 / spec.sample_rate;
  const long episode_ticks = std::lround(spec.episode_duration * spec.sample_rate);
  const long pad_ticks = std::lround(spec.padding * spec.sample_rate);

  struct Interval {
    long begin, end;  // ticks since epoch, half-open
  };
  std::vector<Interval> episodes;
  std::vector<Interval> recorded;
  for (const auto& day : plan) {
    const long day_tick = static_cast<long>(day.date.time_since_epoch().count()) * kTicksPerDay;
    for (double start : day.episode_starts) {
      if (!(start >= 0.0) || start + spec.episode_duration > 86400.0) {
        throw std::invalid_argument("episode must lie within its day");
      }
      const long b = day_tick + std::lround(start * spec.sample_rate);
      episodes.push_back({b, b + episode_ticks});
    }
    if (spec.continuous) {
      recorded.push_back({day_tick, day_tick + kTicksPerDay});
    } else {
      const long idle = day_tick + std::lround(spec.idle_segment_at * spec.sample_rate);
      recorded.push_back({idle, idle + std::lround(spec.idle_segment * spec.sample_rate)});
    }
  }
  std::sort(episodes.begin(), episodes.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < episodes.size(); ++i) {
    if (episodes[i].begin < episodes[i - 1].end) {
      throw std::invalid_argument("simulate_trace: overlapping episodes");
    }
  }
  if (!spec.continuous) {
    for (const auto& e : episodes) recorded.push_back({e.begin - pad_ticks, e.end + pad_ticks});
  }
  std::sort(recorded.begin(), recorded.end(),
            [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
  std::vector<Interval> segments;
  for (const auto& r : recorded) {
    if (!segments.empty() && r.begin <= segments.back().end) {
      segments.back().end = std::max(segments.back().end, r.end);
    } else {
      segments.push_back(r);
    }
  }

  auto rng = make_stream(spec.seed, {0x54524345u});
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  sensor::RawTrace trace;
  std::size_t ep = 0;
  const double omega = 2.0 * std::numbers::pi * spec.oscillation_hz;
  for (const auto& seg : segments) {
    for (long tick = seg.begin; tick < seg.end; ++tick) {
      while (ep < episodes.size() && episodes[ep].end <= tick) ++ep;
      const bool active = ep < episodes.size() && tick >= episodes[ep].begin;
      const double t = static_cast<double>(tick) * dt;
      sensor::Sample s{t, noise(rng), noise(rng), 1.0 + noise(rng)};
      if (active) {
        const double phase = omega * static_cast<double>(tick - episodes[ep].begin) * dt;
        s.x += spec.spike_magnitude * std::sin(phase);
        s.y += 0.5 * spec.spike_magnitude * std::sin(phase + 1.0);
      }
      trace.samples.push_back(s);
    }
  }
  return trace;
}

/// Episode start times realizing a given morning/evening outcome. Morning
/// brushing lands in morning or (fallback) morning-afternoon; evening in
/// evening, overnight or (fallback) afternoon-evening. Optional distractor
/// episodes go to the afternoon, which counts for neither.
inline std::vector<double> plan_episodes(bool morning, bool evening, bool distractor,
                                         std::mt19937_64& rng) {
  // Windows keep a margin from the category edges so that detected starts,
  // which may shift by up to a second, stay in the intended category.
  struct Window {
    double from_h, to_h;
  };
  static constexpr Window kMorning[] = {{5.5, 11.5}, {12.25, 14.5}};
  static constexpr Window kEvening[] = {{21.25, 23.5}, {0.25, 4.5}, {19.25, 20.5}};
  static constexpr Window kAfternoon{15.25, 18.5};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](const Window& w) { return std::floor((w.from_h + (w.to_h - w.from_h) * u(rng)) * 3600.0); };

  std::vector<double> starts;
  if (morning) starts.push_back(pick(kMorning[std::min<std::size_t>(1, static_cast<std::size_t>(u(rng) * 2))]));
  if (evening) starts.push_back(pick(kEvening[std::min<std::size_t>(2, static_cast<std::size_t>(u(rng) * 3))]));
  if (distractor) starts.push_back(pick(kAfternoon));
  std::sort(starts.begin(), starts.end());
  return starts;
}

}  // namespace habitflow::sim

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Detail lines start with "  ".

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "habitflow/evaluation.hpp"
#include "habitflow/io.hpp"
#include "habitflow/sensor_pipeline.hpp"
#include "habitflow/simulator.hpp"

using namespace habitflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back((ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { details.push_back("     " + what); }
};

int failures = 0;

void report(int n, const std::string& title, const Outcome& o) {
  fmt::print("{} criterion {}: {}\n", o.pass ? "PASS" : "FAIL", n, title);
  for (const auto& d : o.details) fmt::print("  {}\n", d);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

sim::SimCohortSpec default_spec(std::uint64_t seed) {
  sim::SimCohortSpec spec;
  spec.seed = seed;
  return spec;
}

EvalConfig default_eval(std::uint64_t seed, InnerMode inner = InnerMode::single) {
  EvalConfig cfg;
  cfg.k = 5;
  cfg.search.n_steps = 1000;
  cfg.search.seed = seed;
  cfg.mode = StudyMode::study2;
  cfg.inner = inner;
  return cfg;
}

std::string report_csvs(const std::vector<EvalReport>& reports,
                        const std::vector<LandscapeReport>& landscapes) {
  std::ostringstream os;
  io::write_eval_header(os);
  for (const auto& r : reports) io::write_eval_rows(os, r);
  io::write_roc(os, reports);
  io::write_predictions(os, reports);
  io::write_selected_params(os, reports);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const auto& f : reports[i].folds) io::write_landscape(os, landscapes[i], f.fold);
  }
  return os.str();
}

// ------------------------------------------------------------ 1: dynamics

Outcome criterion_dynamics() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> gain(0.01, 1.0);
  std::bernoulli_distribution coin(0.5);
  constexpr int kTrials = 10000;
  constexpr int kSteps = 50;
  int out_of_bounds = 0;
  double worst_decay = 0.0;
  double worst_fixed = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const CognitiveParams p(u(rng), u(rng), u(rng), u(rng), u(rng));
    const double hs0 = u(rng);
    const double acc0 = u(rng);
    std::vector<DatedEvent> events(kSteps);
    for (int d = 0; d < kSteps; ++d) {
      events[d].day = d;
      events[d].event.beh = coin(rng) ? 1 : 0;
      events[d].event.cue = coin(rng) ? 1 : 0;
      events[d].event.rem = coin(rng) ? 1 : 0;
      events[d].event.lab = coin(rng) ? 1 : 0;
    }
    for (const auto& s : trajectory(events, p, hs0, acc0)) {
      if (!(s.hs >= 0.0 && s.hs <= 1.0 && s.acc >= 0.0 && s.acc <= 1.0)) ++out_of_bounds;
    }

    // no behavior: hs_t = hs0 (1 - hdp)^t
    for (auto& e : events) e.event.beh = 0;
    const auto decay = trajectory(events, p, hs0, acc0);
    for (int t = 0; t <= kSteps; ++t) {
      const double expect = hs0 * std::pow(1.0 - p.hdp(), t);
      worst_decay = std::max(worst_decay, std::abs(decay[t].hs - expect));
    }

    // constant behavior with the cue present: hs -> hgp / (hdp + hgp)
    const CognitiveParams q(gain(rng), gain(rng), u(rng), u(rng), u(rng));
    double hs = u(rng);
    const DayEvent always{1, 1, 0, 0};
    for (int t = 0; t < 5000; ++t) hs = step_habit(hs, always, q);
    worst_fixed = std::max(worst_fixed, std::abs(hs - q.hgp() / (q.hdp() + q.hgp())));
  }
  const double elapsed = seconds_since(t0);
  o.check(out_of_bounds == 0, fmt::format("{} random runs of {} steps, {} states outside [0,1]",
                                          kTrials, kSteps, out_of_bounds));
  o.check(worst_decay <= 1e-12, fmt::format("pure decay max error {:.3e} (<= 1e-12)", worst_decay));
  o.check(worst_fixed <= 1e-6, fmt::format("fixed point max error {:.3e} (<= 1e-6)", worst_fixed));
  o.check(elapsed < 5.0, fmt::format("runtime {:.2f} s (< 5 s)", elapsed));
  return o;
}

// ------------------------------------------------------------ 2: metrics

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

struct HandTable {
  std::vector<double> scores;
  std::vector<int> labels;
  double threshold;
  // hand-computed values
  long tp, fp, tn, fn;
  double auc, mcc, accuracy, tpr, fpr, precision, f1, npv;
};

Outcome criterion_metrics() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_int_distribution<int> level(0, 12);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = level(rng) / 12.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(compute_auc(s, y) - pairwise_auc(s, y)));
  }
  o.check(worst <= 1e-12, fmt::format("1000 random sets, max |trapezoid - pairwise| = {:.3e}", worst));

  const std::vector<HandTable> tables = {
      // TP 4, FP 2, TN 3, FN 1; 18 of 25 positive-negative pairs ordered
      {{0.9, 0.8, 0.7, 0.6, 0.55, 0.5, 0.4, 0.3, 0.2, 0.1},
       {1, 1, 0, 1, 0, 1, 0, 0, 1, 0},
       0.5, 4, 2, 3, 1,
       18.0 / 25.0, 10.0 / std::sqrt(600.0), 7.0 / 10.0, 4.0 / 5.0, 2.0 / 5.0, 4.0 / 6.0, 8.0 / 11.0,
       3.0 / 4.0},
      // TP 2, FP 1, TN 5, FN 2; 17 wins and 3 ties among 24 pairs
      {{0.8, 0.8, 0.6, 0.4, 0.4, 0.3, 0.3, 0.2, 0.2, 0.1},
       {1, 0, 1, 1, 0, 0, 1, 0, 0, 0},
       0.5, 2, 1, 5, 2,
       18.5 / 24.0, 8.0 / std::sqrt(3.0 * 4.0 * 6.0 * 7.0), 7.0 / 10.0, 2.0 / 4.0, 1.0 / 6.0,
       2.0 / 3.0, 4.0 / 7.0, 5.0 / 7.0},
  };
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& h = tables[i];
    const auto m = compute_threshold_metrics(h.scores, h.labels, h.threshold);
    const double auc = compute_auc(h.scores, h.labels);
    const bool counts = m.counts.tp == h.tp && m.counts.fp == h.fp && m.counts.tn == h.tn &&
                        m.counts.fn == h.fn;
    const bool exact = auc == h.auc && m.mcc == h.mcc && m.accuracy == h.accuracy &&
                       m.tpr == h.tpr && m.fpr == h.fpr && m.precision == h.precision &&
                       m.f1 == h.f1 && m.npv == h.npv;
    o.check(counts && exact,
            fmt::format("fixture {}: auc {} mcc {} acc {} tpr {} fpr {} prec {} f1 {} npv {}", i + 1, auc,
                        m.mcc, m.accuracy, m.tpr, m.fpr, m.precision, m.f1, m.npv));
  }
  return o;
}

// ------------------------------------------------------------ 3: learner

Outcome criterion_learner() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::normal_distribution<double> z(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 30 + static_cast<int>(rng() % 50);
    const int p = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = z(rng);
      y[i] = static_cast<double>(rng() % 2);
    }
    const LogisticObjective obj(x, y, 1e-3);
    Eigen::VectorXd theta(obj.dim());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = z(rng);
    const Eigen::VectorXd g = obj.gradient(theta);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = 1e-5;
      Eigen::VectorXd a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      const double fd = (obj.value(a) - obj.value(b)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
  }
  o.check(worst <= 1e-6, fmt::format("100 random problems, max relative gradient error {:.3e}", worst));

  double worst_logit = 0.0;
  for (int positives : {3, 10, 25, 37}) {
    FeatureMatrix m;
    m.feature_names = {"constant", "also_constant"};
    for (int i = 0; i < 40; ++i) m.observations.push_back({"p", i, i < positives ? 1 : 0, {2.5, -1.0}});
    const auto model = fit_logistic(m, LearnerConfig{});
    const double rate = positives / 40.0;
    worst_logit = std::max(worst_logit, std::abs(model.intercept - std::log(rate / (1.0 - rate))));
    for (double w : model.weights) worst_logit = std::max(worst_logit, std::abs(w));
  }
  o.check(worst_logit <= 1e-6,
          fmt::format("intercept-only fits recover base-rate log-odds, max error {:.3e}", worst_logit));
  return o;
}

// ------------------------------------------------------------ 4: leakage

std::vector<std::string> numbered(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(fmt::format("S{:03d}", i));
  return out;
}

Outcome criterion_leakage() {
  Outcome o;
  for (const auto& [n, k, per] : {std::tuple{36, 9, 4}, std::tuple{75, 5, 15}}) {
    const auto plan = make_folds(numbered(n), k, 1);
    std::map<int, int> sizes;
    for (const auto& [id, f] : plan.assignment) ++sizes[f];
    bool even = static_cast<int>(sizes.size()) == k;
    for (const auto& [f, c] : sizes) even = even && c == per;
    o.check(even && plan.assignment.size() == static_cast<std::size_t>(n),
            fmt::format("{} participants, k={} -> {} folds of {}", n, k, k, per));
  }

  const auto cohort = sim::simulate_cohort(default_spec(4));
  auto cfg = default_eval(4);
  cfg.search.n_steps = 40;
  int compared = 0;
  bool untouched = true;
  bool disjoint = true;
  for (ModelType type : kAllModelTypes) {
    const auto base = nested_cv(cohort.participants, type, cfg);
    std::set<std::pair<std::string, int>> seen;
    for (const auto& p : base.report.predictions) disjoint = disjoint && seen.insert({p.participant_id, p.predict_day}).second;
    for (const auto& fold : base.report.folds) {
      const std::set<std::string> held(fold.test_participants.begin(), fold.test_participants.end());
      auto mutated = cohort.participants;
      for (auto& s : mutated) {
        if (!held.count(s.participant_id)) continue;
        for (auto& d : s.days) {
          d.behavior = d.behavior ? std::optional<int>(1 - *d.behavior) : std::optional<int>(0);
          d.reminder = 1 - d.reminder;
          if (d.srbai) d.srbai = 8.0 - *d.srbai;
        }
      }
      const auto again = nested_cv(mutated, type, cfg);
      const auto& f2 = again.report.folds[static_cast<std::size_t>(fold.fold)];
      const bool same = f2.test_participants == fold.test_participants && f2.params == fold.params &&
                        f2.inner_auc == fold.inner_auc && f2.threshold == fold.threshold &&
                        f2.model->means == fold.model->means &&
                        f2.model->stddevs == fold.model->stddevs &&
                        f2.model->weights == fold.model->weights &&
                        f2.model->intercept == fold.model->intercept;
      untouched = untouched && same;
      ++compared;
      for (const auto& g : base.report.folds) {
        if (g.fold == fold.fold) continue;
        for (const auto& id : g.test_participants) disjoint = disjoint && !held.count(id);
      }
    }
  }
  o.check(untouched, fmt::format("{} fold mutations left tuning, standardization, weights and thresholds unchanged",
                                 compared));
  o.check(disjoint, "each participant is tested in exactly one outer fold");
  return o;
}

// ------------------------------------------------- 5: parameter recovery

Outcome criterion_recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto spec = default_spec(1);
  const auto cohort = sim::simulate_cohort(spec);
  const auto cfg = default_eval(1, InnerMode::full);
  const auto result = nested_cv(cohort.participants, ModelType::theory, cfg);

  // rebuild each outer fold's training groups to score the true parameters
  const auto ids = detail::ids_with_observations(cohort.participants);
  const auto plan = make_folds(ids, cfg.k, cfg.search.seed);
  std::map<std::string, const ParticipantSeries*> by_id;
  for (const auto& s : cohort.participants) by_id[s.participant_id] = &s;
  std::vector<detail::Group> folds(static_cast<std::size_t>(cfg.k));
  for (const auto& [id, f] : plan.assignment) folds[static_cast<std::size_t>(f)].push_back(by_id.at(id));

  double worst_gap = 0.0;
  for (const auto& fr : result.report.folds) {
    std::vector<detail::Group> train;
    for (int f = 0; f < cfg.k; ++f) {
      if (f != fr.fold) train.push_back(folds[static_cast<std::size_t>(f)]);
    }
    std::vector<std::size_t> rotations(train.size());
    std::iota(rotations.begin(), rotations.end(), std::size_t{0});
    const auto truth_auc =
        rotation_auc(ModelType::theory, train, rotations, spec.true_params, cfg.mode, LogisticRegression{});
    const double gap = std::abs(*fr.inner_auc - *truth_auc);
    worst_gap = std::max(worst_gap, gap);
    o.note(fmt::format("fold {}: selected hdp {:.3f} hgp {:.3f} inner auc {:.4f}, truth {:.4f}, gap {:.4f}",
                       fr.fold, fr.params->hdp(), fr.params->hgp(), *fr.inner_auc, *truth_auc, gap));
  }
  o.check(worst_gap <= 0.02, fmt::format("selected vs true inner AUC, max gap {:.4f} (<= 0.02)", worst_gap));

  std::vector<LandscapeRow> rows;
  for (const auto& r : result.landscape.rows) {
    if (r.inner_auc) rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const LandscapeRow& a, const LandscapeRow& b) { return *a.inner_auc > *b.inner_auc; });
  rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(rows.size() / 10), rows.end());
  auto median = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(get(r.params));
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med_hdp = median([](const CognitiveParams& p) { return p.hdp(); });
  const double med_hgp = median([](const CognitiveParams& p) { return p.hgp(); });
  o.check(std::abs(med_hdp - spec.true_params.hdp()) <= 0.15,
          fmt::format("top-decile median hdp {:.3f} vs truth {:.3f} (within 0.15), {} draws", med_hdp,
                      spec.true_params.hdp(), rows.size()));
  o.check(std::abs(med_hgp - spec.true_params.hgp()) <= 0.15,
          fmt::format("top-decile median hgp {:.3f} vs truth {:.3f} (within 0.15)", med_hgp,
                      spec.true_params.hgp()));
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 300.0, fmt::format("runtime {:.1f} s (< 300 s)", elapsed));
  return o;
}

// ------------------------------------------------ 6 and 7: model ranking

struct SeedRun {
  std::map<ModelType, double> auc;
  std::vector<EvalReport> reports;
  std::vector<LandscapeReport> landscapes;
};

SeedRun evaluate_all(std::uint64_t seed) {
  const auto cohort = sim::simulate_cohort(default_spec(seed));
  SeedRun run;
  for (ModelType type : kAllModelTypes) {
    auto r = nested_cv(cohort.participants, type, default_eval(seed));
    run.auc[type] = *r.report.auc;
    run.reports.push_back(std::move(r.report));
    run.landscapes.push_back(std::move(r.landscape));
  }
  return run;
}

Outcome criterion_ranking(const std::vector<SeedRun>& runs) {
  Outcome o;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& a = runs[i].auc;
    const double th = a.at(ModelType::theory), pb = a.at(ModelType::past_behavior),
                 sv = a.at(ModelType::survey);
    o.check(th > pb && pb > sv && th - sv >= 0.05,
            fmt::format("seed {}: theory {:.4f} > past_behavior {:.4f} > survey {:.4f}, theory - survey {:.4f} (>= 0.05)",
                        i + 1, th, pb, sv, th - sv));
  }
  return o;
}

Outcome criterion_redundancy(const std::vector<SeedRun>& runs) {
  Outcome o;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& a = runs[i].auc;
    const double gain = a.at(ModelType::combined) - a.at(ModelType::theory);
    o.check(gain < 0.02, fmt::format("seed {}: combined {:.4f} - theory {:.4f} = {:.4f} (< 0.02)", i + 1,
                                     a.at(ModelType::combined), a.at(ModelType::theory), gain));
  }
  return o;
}

// ------------------------------------------------- 8: generalization gap

struct GapRun {
  double within = 0.0;
  double cross = 0.0;
  std::string csv;
};

GapRun generalization(ModelType type, std::uint64_t seed) {
  auto spec_a = default_spec(seed);
  spec_a.id_prefix = "A";
  auto spec_b = default_spec(seed + 100);
  spec_b.id_prefix = "B";
  spec_b.true_params = CognitiveParams(0.05, 0.30, 0.3, 0.5, 0.5);
  const auto a = sim::simulate_cohort(spec_a);
  const auto b = sim::simulate_cohort(spec_b);
  const auto cfg = default_eval(seed, InnerMode::full);
  const auto within = nested_cv(b.participants, type, cfg);
  const auto cross = cross_predict(a.participants, b.participants, type, cfg);
  return {*within.report.auc, *cross.report.auc, report_csvs({cross.report}, {cross.landscape})};
}

Outcome criterion_generalization(std::string& csv_out) {
  Outcome o;
  double theory_drop = 0.0, pb_drop = 0.0;
  const int seeds = 3;
  for (int s = 1; s <= seeds; ++s) {
    const auto th = generalization(ModelType::theory, static_cast<std::uint64_t>(s));
    const auto pb = generalization(ModelType::past_behavior, static_cast<std::uint64_t>(s));
    if (s == 1) csv_out = th.csv + pb.csv;
    theory_drop += (th.within - th.cross) / seeds;
    pb_drop += (pb.within - pb.cross) / seeds;
    o.note(fmt::format("seed {}: theory within {:.4f} cross {:.4f} drop {:+.4f}; "
                       "past_behavior within {:.4f} cross {:.4f} drop {:+.4f}",
                       s, th.within, th.cross, th.within - th.cross, pb.within, pb.cross,
                       pb.within - pb.cross));
  }
  o.check(theory_drop > pb_drop, fmt::format("mean drop over {} seeds: theory {:+.4f} > past_behavior {:+.4f}",
                                             seeds, theory_drop, pb_drop));
  return o;
}

// ------------------------------------------------------ 9: sensor round trip

Outcome criterion_sensor(std::string& csv_out) {
  Outcome o;
  std::mt19937_64 rng(909);
  std::bernoulli_distribution coin(0.5);
  const auto start = sensor::parse_date("2024-05-06");
  constexpr int kParticipants = 10;
  constexpr int kDays = 5;
  int agree = 0, total = 0, agree_study1 = 0;
  bool fallback_seen = false, late_seen = false;
  std::vector<sensor::DayOutcome> all;
  for (int p = 0; p < kParticipants; ++p) {
    const std::string id = fmt::format("W{:02d}", p);
    std::vector<sim::DayPlan> plan;
    std::vector<std::pair<bool, bool>> intended;
    for (int d = 0; d < kDays; ++d) {
      bool morning = coin(rng), evening = coin(rng);
      std::vector<double> starts;
      if (p == 0 && d == 0) {
        // 13:30 only: morning-afternoon fallback; 22:15: evening
        starts = {13.5 * 3600.0, 22.25 * 3600.0};
        morning = evening = true;
      } else if (p == 1 && d == 1) {
        starts = {13.5 * 3600.0};
        morning = true;
        evening = false;
      } else {
        starts = sim::plan_episodes(morning, evening, coin(rng), rng);
      }
      plan.push_back({start + std::chrono::days{d}, starts});
      intended.emplace_back(morning, evening);
    }
    sim::SimTraceSpec ts;
    ts.seed = static_cast<std::uint64_t>(p) + 1;
    ts.continuous = p == 0;  // one participant recorded around the clock
    const auto trace = sim::simulate_trace(ts, plan);
    const auto rows2 = sensor::process_trace(id, trace, sensor::ThresholdConfig{}, sensor::TargetRule{});
    const auto rows1 = sensor::process_trace(
        id, trace, sensor::ThresholdConfig{},
        sensor::TargetRule{StudyMode::study1, sensor::Session::morning});
    for (int d = 0; d < kDays; ++d) {
      const auto [m, e] = intended[static_cast<std::size_t>(d)];
      const auto& r = rows2.at(static_cast<std::size_t>(d));
      const bool ok = r.date == plan[d].date && r.morning == (m ? 1 : 0) && r.evening == (e ? 1 : 0) &&
                      r.target == (m && e ? 1 : 0);
      agree += ok;
      agree_study1 += rows1.at(static_cast<std::size_t>(d)).target == (m ? 1 : 0);
      ++total;
      if (p == 0 && d == 0) late_seen = ok;
      if (p == 1 && d == 1) fallback_seen = ok;
    }
    all.insert(all.end(), rows2.begin(), rows2.end());
  }
  o.check(agree == total, fmt::format("{}/{} participant-days reproduce intended outcomes", agree, total));
  o.check(agree_study1 == total, fmt::format("{}/{} match under the single-session target rule", agree_study1, total));
  o.check(fallback_seen, "13:30 episode counts as morning (morning-afternoon fallback)");
  o.check(late_seen, "22:15 episode counts as evening");
  std::ostringstream os;
  io::write_day_outcomes(os, all);
  csv_out = os.str();
  return o;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report(1, "dynamics bounds and closed forms", criterion_dynamics());
  report(2, "metric oracles", criterion_metrics());
  report(3, "learner correctness", criterion_learner());
  report(4, "no leakage and published fold plans", criterion_leakage());
  report(5, "parameter recovery on the default cohort", criterion_recovery());

  std::vector<SeedRun> runs;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) runs.push_back(evaluate_all(seed));
  report(6, "model ranking theory > past_behavior > survey", criterion_ranking(runs));
  report(7, "combined model adds < 0.02 AUC over theory", criterion_redundancy(runs));

  std::string gap_csv;
  report(8, "theory model loses more AUC across cohorts", criterion_generalization(gap_csv));

  std::string sensor_csv;
  report(9, "sensor round trip", criterion_sensor(sensor_csv));

  {
    Outcome o;
    const auto again = evaluate_all(1);
    o.check(report_csvs(runs[0].reports, runs[0].landscapes) == report_csvs(again.reports, again.landscapes),
            "nested CV reports (eval, roc, predictions, params, landscapes) byte-identical");
    std::string gap_again;
    {
      const auto th = generalization(ModelType::theory, 1);
      const auto pb = generalization(ModelType::past_behavior, 1);
      gap_again = th.csv + pb.csv;
    }
    o.check(gap_csv == gap_again, "cross-prediction reports byte-identical");
    std::string sensor_again;
    criterion_sensor(sensor_again);
    o.check(sensor_csv == sensor_again, "preprocessed day outcomes byte-identical");

    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / "habitflow_acceptance";
    fs::remove_all(base);
    const auto cohort = sim::simulate_cohort(default_spec(1));
    io::write_dataset(base / "a", cohort, "2024-01-01");
    io::write_dataset(base / "b", sim::simulate_cohort(default_spec(1)), "2024-01-01");
    bool same = true;
    for (const auto& e : fs::directory_iterator(base / "a")) {
      std::ifstream x(e.path(), std::ios::binary), y(base / "b" / e.path().filename(), std::ios::binary);
      std::stringstream sx, sy;
      sx << x.rdbuf();
      sy << y.rdbuf();
      same = same && sx.str() == sy.str();
    }
    fs::remove_all(base);
    o.check(same, "simulated dataset files byte-identical");
    report(10, "determinism", o);
  }

  fmt::print("{} of 10 criteria passed ({:.0f} s)\n", 10 - failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}

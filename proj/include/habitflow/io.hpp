#pragma once

// CSV readers and writers for every file the pipeline exchanges. Missing
// values are empty fields. Fields never contain commas or quotes.

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "habitflow/evaluation.hpp"
#include "habitflow/features.hpp"
#include "habitflow/sensor_pipeline.hpp"
#include "habitflow/series.hpp"
#include "habitflow/simulator.hpp"

namespace habitflow::io {

namespace fs = std::filesystem;

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(std::istream& is, const std::string& what) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw CsvError(what + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != t.header.size()) {
      throw CsvError(fmt::format("{}:{}: expected {} fields, found {}", what, lineno,
                                 t.header.size(), fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw CsvError("cannot open " + path.string());
  return read_csv(is, path.string());
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CsvError("cannot parse '" + s + "' as a number in " + what);
  }
}

inline int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CsvError("cannot parse '" + s + "' as an integer in " + what);
  }
}

inline std::optional<double> parse_optional_double(const std::string& s, const std::string& what) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, what);
}

inline std::optional<int> parse_optional_binary(const std::string& s, const std::string& what) {
  if (s.empty()) return std::nullopt;
  const int v = parse_int(s, what);
  if (v != 0 && v != 1) throw CsvError(what + ": expected 0 or 1, got " + s);
  return v;
}

inline std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }
inline std::string opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : ""; }
inline std::string fixed6(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : "";
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CsvError("cannot write " + path.string());
  return os;
}

// ---------------------------------------------------------------- traces

inline sensor::RawTrace read_trace(std::istream& is, const std::string& what) {
  const CsvTable t = read_csv(is, what);
  const std::size_t ct = t.column("t"), cx = t.column("x"), cy = t.column("y"), cz = t.column("z");
  sensor::RawTrace trace;
  trace.samples.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    trace.samples.push_back({parse_double(r[ct], what), parse_double(r[cx], what),
                             parse_double(r[cy], what), parse_double(r[cz], what)});
  }
  return trace;
}

inline sensor::RawTrace read_trace(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw CsvError("cannot open " + path.string());
  return read_trace(is, path.string());
}

inline void write_trace(std::ostream& os, const sensor::RawTrace& trace) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t,x,y,z\n");
  for (const auto& s : trace.samples) {
    fmt::format_to(std::back_inserter(buf), "{:.2f},{:.5f},{:.5f},{:.5f}\n", s.t, s.x, s.y, s.z);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

// ------------------------------------------------------- day outcomes

inline void write_day_outcomes(std::ostream& os, const std::vector<sensor::DayOutcome>& rows) {
  os << "participant_id,date,morning,evening,target\n";
  for (const auto& r : rows) {
    os << r.participant_id << ',' << sensor::format_date(r.date) << ',' << opt(r.morning) << ','
       << opt(r.evening) << ',' << opt(r.target) << '\n';
  }
}

inline std::vector<sensor::DayOutcome> read_day_outcomes(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const auto what = path.string();
  const std::size_t cp = t.column("participant_id"), cd = t.column("date"),
                    cm = t.column("morning"), ce = t.column("evening"), ct = t.column("target");
  std::vector<sensor::DayOutcome> out;
  for (const auto& r : t.rows) {
    sensor::DayOutcome o;
    o.participant_id = r[cp];
    o.date = sensor::parse_date(r[cd]);
    o.morning = parse_optional_binary(r[cm], what);
    o.evening = parse_optional_binary(r[ce], what);
    o.target = parse_optional_binary(r[ct], what);
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<sensor::NoiseWindow> read_noise_windows(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t cp = t.column("participant_id"), cs = t.column("start_date"),
                    ce = t.column("end_date");
  std::vector<sensor::NoiseWindow> out;
  for (const auto& r : t.rows) {
    sensor::NoiseWindow w{r[cp], sensor::parse_date(r[cs]), sensor::parse_date(r[ce])};
    sensor::validate_window(w);
    out.push_back(std::move(w));
  }
  return out;
}

// ------------------------------------------------------------ datasets
//
// A dataset directory holds days.csv (sensor output), surveys.csv,
// events.csv and optionally baseline.csv (participant_id,initial_rate).
// Day index 0 is each participant's first date in days.csv.

inline std::vector<ParticipantSeries> read_dataset(const fs::path& dir) {
  const auto outcomes = read_day_outcomes(dir / "days.csv");
  std::map<std::string, ParticipantSeries> by_id;
  std::map<std::string, sensor::Date> first_date;
  for (const auto& o : outcomes) {
    auto [it, inserted] = first_date.emplace(o.participant_id, o.date);
    if (!inserted && o.date < it->second) it->second = o.date;
  }
  auto row_for = [&](const std::string& id, int day) -> DayRow& {
    if (day < 0) throw CsvError("negative day index for participant " + id);
    if (!first_date.count(id)) throw CsvError("participant " + id + " has no rows in days.csv");
    auto& s = by_id[id];
    s.participant_id = id;
    while (static_cast<int>(s.days.size()) <= day) {
      DayRow r;
      r.day = static_cast<int>(s.days.size());
      s.days.push_back(r);
    }
    return s.days[static_cast<std::size_t>(day)];
  };
  for (const auto& o : outcomes) {
    const int day = static_cast<int>((o.date - first_date.at(o.participant_id)).count());
    row_for(o.participant_id, day).behavior = o.target;
  }

  const auto surveys_path = dir / "surveys.csv";
  if (fs::exists(surveys_path)) {
    const CsvTable t = read_csv(surveys_path);
    const auto what = surveys_path.string();
    const std::size_t cp = t.column("participant_id"), cd = t.column("day"),
                      ci = t.column("instrumental"), ca = t.column("affective"),
                      cs = t.column("srbai");
    for (const auto& r : t.rows) {
      DayRow& row = row_for(r[cp], parse_int(r[cd], what));
      row.instrumental = parse_optional_double(r[ci], what);
      row.affective = parse_optional_double(r[ca], what);
      row.srbai = parse_optional_double(r[cs], what);
    }
  }
  const auto events_path = dir / "events.csv";
  if (fs::exists(events_path)) {
    const CsvTable t = read_csv(events_path);
    const auto what = events_path.string();
    const std::size_t cp = t.column("participant_id"), cd = t.column("day"),
                      cr = t.column("reminder"), cl = t.column("lab");
    for (const auto& r : t.rows) {
      DayRow& row = row_for(r[cp], parse_int(r[cd], what));
      row.reminder = parse_optional_binary(r[cr], what).value_or(0);
      row.lab = parse_optional_binary(r[cl], what).value_or(0);
    }
  }
  const auto baseline_path = dir / "baseline.csv";
  if (fs::exists(baseline_path)) {
    const CsvTable t = read_csv(baseline_path);
    const std::size_t cp = t.column("participant_id"), cr = t.column("initial_rate");
    for (const auto& r : t.rows) {
      if (!by_id.count(r[cp])) continue;
      by_id[r[cp]].initial_behavior_rate = parse_double(r[cr], baseline_path.string());
    }
  }

  std::vector<ParticipantSeries> out;
  for (auto& [id, s] : by_id) {
    validate_series(s);
    out.push_back(std::move(s));
  }
  return out;
}

/// Writes a simulated cohort as a dataset directory plus its ground-truth log.
inline void write_dataset(const fs::path& dir, const sim::SimCohort& cohort,
                          const std::string& start_date) {
  fs::create_directories(dir);
  const sensor::Date start = sensor::parse_date(start_date);
  {
    auto os = open_out(dir / "days.csv");
    std::vector<sensor::DayOutcome> rows;
    for (const auto& s : cohort.participants) {
      for (const auto& d : s.days) {
        sensor::DayOutcome o;
        o.participant_id = s.participant_id;
        o.date = start + std::chrono::days{d.day};
        if (d.behavior) {
          // The habitual morning session always happens; the trained evening
          // session is the target. This reads the same under both study rules.
          o.morning = 1;
          o.evening = *d.behavior;
          o.target = *d.behavior;
        }
        rows.push_back(std::move(o));
      }
    }
    write_day_outcomes(os, rows);
  }
  {
    auto os = open_out(dir / "surveys.csv");
    os << "participant_id,day,instrumental,affective,srbai\n";
    for (const auto& s : cohort.participants) {
      for (const auto& d : s.days) {
        if (!d.has_survey()) continue;
        os << s.participant_id << ',' << d.day << ',' << opt(d.instrumental) << ','
           << opt(d.affective) << ',' << opt(d.srbai) << '\n';
      }
    }
  }
  {
    auto os = open_out(dir / "events.csv");
    os << "participant_id,day,reminder,lab\n";
    for (const auto& s : cohort.participants) {
      for (const auto& d : s.days) {
        if (d.reminder == 0 && d.lab == 0) continue;
        os << s.participant_id << ',' << d.day << ',' << d.reminder << ',' << d.lab << '\n';
      }
    }
  }
  {
    auto os = open_out(dir / "baseline.csv");
    os << "participant_id,initial_rate\n";
    for (const auto& s : cohort.participants) {
      os << s.participant_id << ',' << fmt::format("{}", s.initial_behavior_rate) << '\n';
    }
  }
  {
    auto os = open_out(dir / "truth_days.csv");
    os << "participant_id,day,hs,acc,p,behavior\n";
    for (const auto& r : cohort.truth) {
      os << fmt::format("{},{},{},{},{},{}\n", r.participant_id, r.day, r.hs, r.acc, r.p,
                        r.behavior);
    }
  }
  {
    auto os = open_out(dir / "truth_participants.csv");
    os << "participant_id,initial_hs\n";
    for (std::size_t i = 0; i < cohort.participants.size(); ++i) {
      os << fmt::format("{},{}\n", cohort.participants[i].participant_id, cohort.initial_hs[i]);
    }
  }
}

// ----------------------------------------------------------- features

inline void write_feature_matrix(std::ostream& os, const FeatureMatrix& m) {
  os << "participant_id,predict_day,label";
  for (const auto& n : m.feature_names) os << ',' << n;
  os << '\n';
  for (const auto& o : m.observations) {
    os << o.participant_id << ',' << o.predict_day << ',' << o.label;
    for (double v : o.features) os << ',' << fmt::format("{}", v);
    os << '\n';
  }
}

// ------------------------------------------------------------ reports

inline void write_eval_header(std::ostream& os) {
  os << "model_type,fold,n,auc,mcc,accuracy,tpr,fpr,precision,f1,npv,threshold\n";
}

inline void write_eval_rows(std::ostream& os, const EvalReport& r) {
  auto row = [&](const std::string& fold, std::size_t n, const std::optional<double>& auc,
                 const std::optional<ThresholdMetrics>& m, std::optional<double> thr) {
    os << to_string(r.model_type) << ',' << fold << ',' << n << ',' << fixed6(auc);
    if (m) {
      os << fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", m->mcc, m->accuracy,
                        m->tpr, m->fpr, m->precision, m->f1, m->npv);
    } else {
      os << ",,,,,,,";
    }
    os << ',' << fixed6(thr) << '\n';
  };
  for (const auto& f : r.folds) {
    row(std::to_string(f.fold), f.n_test, f.auc, f.metrics, f.threshold);
  }
  row("pooled", r.predictions.size(), r.auc, r.metrics,
      r.metrics ? std::optional<double>(r.metrics->threshold) : std::nullopt);
}

inline void write_roc(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "model_type,fpr,tpr\n";
  for (const auto& r : reports) {
    for (const auto& p : r.roc) {
      os << fmt::format("{},{:.6f},{:.6f}\n", to_string(r.model_type), p.fpr, p.tpr);
    }
  }
}

inline void write_predictions(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "model_type,fold,participant_id,predict_day,label,prob\n";
  for (const auto& r : reports) {
    for (const auto& p : r.predictions) {
      os << fmt::format("{},{},{},{},{},{:.10f}\n", to_string(r.model_type), p.fold,
                        p.participant_id, p.predict_day, p.label, p.prob);
    }
  }
}

inline void write_selected_params(std::ostream& os, const std::vector<EvalReport>& reports) {
  os << "model_type,fold,hdp,hgp,adp,agp_beh,agp_rem,inner_auc,threshold\n";
  for (const auto& r : reports) {
    for (const auto& f : r.folds) {
      os << to_string(r.model_type) << ',' << f.fold << ',';
      if (f.params) {
        os << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", f.params->hdp(), f.params->hgp(),
                          f.params->adp(), f.params->agp_beh(), f.params->agp_rem());
      } else {
        os << ",,,,";
      }
      os << ',' << fixed6(f.inner_auc) << ',' << fmt::format("{:.6f}", f.threshold) << '\n';
    }
  }
}

/// One landscape table (hdp,hgp,adp,agp_beh,agp_rem,inner_auc) per fold.
inline void write_landscape(std::ostream& os, const LandscapeReport& l, int fold) {
  os << "hdp,hgp,adp,agp_beh,agp_rem,inner_auc\n";
  for (const auto& row : l.rows) {
    if (row.fold != fold) continue;
    const auto& p = row.params;
    os << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},", p.hdp(), p.hgp(), p.adp(),
                      p.agp_beh(), p.agp_rem())
       << fixed6(row.inner_auc) << '\n';
  }
}

}  // namespace habitflow::io

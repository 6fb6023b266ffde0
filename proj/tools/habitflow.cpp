// habitflow: simulate, preprocess, featurize, evaluate, cross-predict, report.
//
// Option precedence: command line, then --config file, then HABITFLOW_*
// environment variables, then built-in defaults. Exit status is 0 when every
// requested output was written and read back, 1 on data or runtime errors
// and 2 on usage errors.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "habitflow/evaluation.hpp"
#include "habitflow/features.hpp"
#include "habitflow/io.hpp"
#include "habitflow/sensor_pipeline.hpp"
#include "habitflow/simulator.hpp"

namespace fs = std::filesystem;
using namespace habitflow;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int k = 5;
  int search_steps = 1000;
  std::vector<std::string> model_types{"survey", "past_behavior", "theory", "combined"};
  std::string study_mode = "study2";
  std::string session = "evening";
  std::string inner_mode = "single";
};

struct ParamFlags {
  double hdp = 0.175, hgp = 0.15, adp = 0.3, agp_beh = 0.5, agp_rem = 0.5;
  CognitiveParams get() const { return CognitiveParams{hdp, hgp, adp, agp_beh, agp_rem}; }
};

void add_param_flags(CLI::App* cmd, ParamFlags& p, const std::string& what) {
  cmd->add_option("--hdp", p.hdp, "habit decay " + what)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--hgp", p.hgp, "habit gain " + what)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--adp", p.adp, "accessibility decay " + what)->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--agp-beh", p.agp_beh, "accessibility gain from behavior " + what)
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--agp-rem", p.agp_rem, "accessibility gain from reminders " + what)
      ->check(CLI::Range(0.0, 1.0));
}

// ------------------------------------------------------------- hashing

std::string hex(const unsigned char* d, unsigned n) {
  std::string out;
  for (unsigned i = 0; i < n; ++i) out += fmt::format("{:02x}", d[i]);
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string finish() {
    unsigned char d[EVP_MAX_MD_SIZE];
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx_, d, &n);
    return hex(d, n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string sha256_text(const std::string& s) {
  Sha256 h;
  h.update(s.data(), s.size());
  return h.finish();
}

std::string sha256_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read back " + p.string());
  Sha256 h;
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) h.update(buf, static_cast<std::size_t>(is.gcount()));
  return h.finish();
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ------------------------------------------------------------- manifest

// Collects inputs and outputs of one run, then writes the resolved config
// and a manifest next to the outputs.
class RunRecord {
 public:
  RunRecord(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

  void input_file(const std::string& label, const fs::path& p) {
    inputs_.emplace_back(label, sha256_file(p));
  }
  void input_dir(const std::string& label, const fs::path& dir) {
    for (const auto& f : csv_files(dir)) input_file(label + "/" + f.filename().string(), f);
  }
  void output(const fs::path& p) {
    if (!fs::exists(p) || fs::file_size(p) == 0) throw std::runtime_error("output missing: " + p.string());
    outputs_.emplace_back(p.filename().string(), sha256_file(p));
  }

  void finish(const fs::path& config_path, const fs::path& manifest_path, const std::string& config) {
    {
      auto os = io::open_out(config_path);
      os << config;
    }
    auto os = io::open_out(manifest_path);
    os << "command=" << command_ << '\n';
    os << "seed=" << seed_ << '\n';
    os << "config_sha256=" << sha256_text(config) << '\n';
    for (const auto& [name, h] : inputs_) os << "input " << h << ' ' << name << '\n';
    for (const auto& [name, h] : outputs_) os << "output " << h << ' ' << name << '\n';
    if (!os) throw std::runtime_error("cannot write " + manifest_path.string());
  }

 private:
  std::string command_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

template <class Fn>
void write_file(const fs::path& p, RunRecord& rec, Fn&& body) {
  {
    auto os = io::open_out(p);
    body(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + p.string());
  }
  rec.output(p);
}

std::vector<ModelType> model_types(const Globals& g) {
  std::vector<ModelType> out;
  for (const auto& s : g.model_types) {
    if (s == "all") return {std::begin(kAllModelTypes), std::end(kAllModelTypes)};
    const ModelType m = parse_model_type(s);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw std::invalid_argument("no model types requested");
  return out;
}

EvalConfig eval_config(const Globals& g) {
  EvalConfig cfg;
  cfg.k = g.k;
  cfg.search.n_steps = g.search_steps;
  cfg.search.seed = g.seed;
  cfg.mode = parse_study_mode(g.study_mode);
  if (g.inner_mode == "full") {
    cfg.inner = InnerMode::full;
  } else if (g.inner_mode != "single") {
    throw std::invalid_argument("inner mode must be single or full");
  }
  return cfg;
}

void write_reports(const fs::path& out, RunRecord& rec, const std::vector<EvalReport>& reports,
                   const std::vector<LandscapeReport>& landscapes) {
  fs::create_directories(out);
  write_file(out / "eval.csv", rec, [&](std::ostream& os) {
    io::write_eval_header(os);
    for (const auto& r : reports) io::write_eval_rows(os, r);
  });
  write_file(out / "roc.csv", rec, [&](std::ostream& os) { io::write_roc(os, reports); });
  write_file(out / "predictions.csv", rec, [&](std::ostream& os) { io::write_predictions(os, reports); });
  write_file(out / "selected_params.csv", rec,
             [&](std::ostream& os) { io::write_selected_params(os, reports); });
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (landscapes[i].rows.empty()) continue;
    for (const auto& f : reports[i].folds) {
      const auto name = fmt::format("landscape_{}_fold{}.csv", to_string(reports[i].model_type), f.fold);
      write_file(out / name, rec, [&](std::ostream& os) { io::write_landscape(os, landscapes[i], f.fold); });
    }
  }
}

// ------------------------------------------------------------- commands

struct SimulateArgs {
  fs::path out;
  sim::SimCohortSpec spec;
  ParamFlags params;
};

int cmd_simulate(const Globals& g, SimulateArgs a, const std::string& config) {
  a.spec.seed = g.seed;
  a.spec.true_params = a.params.get();
  const auto cohort = sim::simulate_cohort(a.spec);
  io::write_dataset(a.out, cohort, a.spec.start_date);
  RunRecord rec("simulate", g.seed);
  for (const auto& f : csv_files(a.out)) rec.output(f);
  rec.finish(a.out / "config.ini", a.out / "manifest.txt", config);
  fmt::print("simulated {} participants x {} days into {}\n", a.spec.n_participants, a.spec.n_days,
             a.out.string());
  return 0;
}

struct TraceArgs {
  fs::path out;
  std::string participant = "T001";
  int days = 3;
  std::string start_date = "2024-01-01";
  double distractor_rate = 0.3;
  sim::SimTraceSpec spec;
};

// One raw trace with randomly planned sessions plus the intended outcomes.
int cmd_simulate_trace(const Globals& g, TraceArgs a, const std::string& config) {
  if (a.days < 1) throw std::invalid_argument("--days must be >= 1");
  a.spec.seed = g.seed;
  auto rng = make_stream(g.seed, {0x504C414Eu});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto start = sensor::parse_date(a.start_date);
  const sensor::TargetRule rule{parse_study_mode(g.study_mode),
                          g.session == "morning" ? sensor::Session::morning : sensor::Session::evening};
  std::vector<sim::DayPlan> plan;
  std::vector<sensor::DayOutcome> intended;
  for (int d = 0; d < a.days; ++d) {
    const bool morning = u(rng) < 0.7;
    const bool evening = u(rng) < 0.5;
    const bool distractor = u(rng) < a.distractor_rate;
    const auto date = start + std::chrono::days{d};
    auto starts = sim::plan_episodes(morning, evening, distractor, rng);
    std::vector<sensor::BrushEpisode> eps;
    for (double s : starts) {
      const double t = static_cast<double>(date.time_since_epoch().count()) * sensor::kSecondsPerDay + s;
      eps.push_back({t, t + a.spec.episode_duration, sensor::categorize(t), true});
    }
    auto o = sensor::classify_day(eps, date, rule);
    o.participant_id = a.participant;
    intended.push_back(std::move(o));
    plan.push_back({date, std::move(starts)});
  }
  const auto trace = sim::simulate_trace(a.spec, plan);
  fs::create_directories(a.out);
  RunRecord rec("simulate-trace", g.seed);
  write_file(a.out / (a.participant + ".csv"), rec, [&](std::ostream& os) { io::write_trace(os, trace); });
  write_file(a.out.parent_path() / (a.out.filename().string() + "_intended.csv"), rec,
             [&](std::ostream& os) { io::write_day_outcomes(os, intended); });
  rec.finish(a.out.parent_path() / (a.out.filename().string() + "_config.ini"),
             a.out.parent_path() / (a.out.filename().string() + "_manifest.txt"), config);
  return 0;
}

struct PreprocessArgs {
  fs::path raw_dir;
  fs::path noise;
  fs::path out;
  sensor::ThresholdConfig thresholds;
};

int cmd_preprocess(const Globals& g, const PreprocessArgs& a, const std::string& config) {
  if (!fs::is_directory(a.raw_dir)) throw std::invalid_argument("not a directory: " + a.raw_dir.string());
  const auto files = csv_files(a.raw_dir);
  if (files.empty()) throw std::invalid_argument("no trace CSVs in " + a.raw_dir.string());
  a.thresholds.validate();
  const sensor::TargetRule rule{parse_study_mode(g.study_mode),
                                g.session == "morning" ? sensor::Session::morning : sensor::Session::evening};
  std::vector<sensor::NoiseWindow> noise;
  RunRecord rec("preprocess", g.seed);
  if (!a.noise.empty()) {
    noise = io::read_noise_windows(a.noise);
    rec.input_file("noise/" + a.noise.filename().string(), a.noise);
  }

  std::vector<sensor::DayOutcome> rows;
  int failures = 0;
  for (const auto& f : files) {
    const auto id = f.stem().string();
    try {
      const auto trace = io::read_trace(f);
      auto out = sensor::process_trace(id, trace, a.thresholds, rule);
      out = sensor::mark_missing(std::move(out), noise);
      rows.insert(rows.end(), out.begin(), out.end());
      rec.input_file("raw/" + f.filename().string(), f);
    } catch (const std::exception& e) {
      ++failures;
      fmt::print(stderr, "preprocess: {}: {}\n", f.string(), e.what());
    }
  }
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  write_file(a.out, rec, [&](std::ostream& os) { io::write_day_outcomes(os, rows); });
  const auto stem = a.out.parent_path() / a.out.stem();
  rec.finish(stem.string() + ".config.ini", stem.string() + ".manifest.txt", config);
  if (failures > 0) {
    fmt::print(stderr, "preprocess: {} of {} files failed\n", failures, files.size());
    return 1;
  }
  return 0;
}

struct FeaturizeArgs {
  fs::path data;
  fs::path out;
  ParamFlags params;
};

int cmd_featurize(const Globals& g, const FeaturizeArgs& a, const std::string& config) {
  const auto cohort = io::read_dataset(a.data);
  const StudyMode mode = parse_study_mode(g.study_mode);
  fs::create_directories(a.out);
  RunRecord rec("featurize", g.seed);
  rec.input_dir("data", a.data);
  for (ModelType m : model_types(g)) {
    const auto fm = build_features(m, cohort, a.params.get(), mode);
    write_file(a.out / fmt::format("features_{}.csv", to_string(m)), rec,
               [&](std::ostream& os) { io::write_feature_matrix(os, fm); });
  }
  rec.finish(a.out / "config.ini", a.out / "manifest.txt", config);
  return 0;
}

struct EvaluateArgs {
  fs::path data;
  fs::path out;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a, const std::string& config) {
  const auto cohort = io::read_dataset(a.data);
  const auto cfg = eval_config(g);
  RunRecord rec("evaluate", g.seed);
  rec.input_dir("data", a.data);
  std::vector<EvalReport> reports;
  std::vector<LandscapeReport> landscapes;
  for (ModelType m : model_types(g)) {
    auto r = nested_cv(cohort, m, cfg);
    fmt::print("{:<14} pooled auc {}\n", to_string(m), io::fixed6(r.report.auc));
    reports.push_back(std::move(r.report));
    landscapes.push_back(std::move(r.landscape));
  }
  write_reports(a.out, rec, reports, landscapes);
  rec.finish(a.out / "config.ini", a.out / "manifest.txt", config);
  return 0;
}

struct CrossArgs {
  fs::path train;
  fs::path test;
  fs::path out;
};

int cmd_cross_predict(const Globals& g, const CrossArgs& a, const std::string& config) {
  const auto train = io::read_dataset(a.train);
  const auto test = io::read_dataset(a.test);
  const auto cfg = eval_config(g);
  RunRecord rec("cross-predict", g.seed);
  rec.input_dir("train", a.train);
  rec.input_dir("test", a.test);
  std::vector<EvalReport> reports;
  std::vector<LandscapeReport> landscapes;
  for (ModelType m : model_types(g)) {
    auto r = cross_predict(train, test, m, cfg);
    fmt::print("{:<14} cross-study auc {}\n", to_string(m), io::fixed6(r.report.auc));
    reports.push_back(std::move(r.report));
    landscapes.push_back(std::move(r.landscape));
  }
  write_reports(a.out, rec, reports, landscapes);
  rec.finish(a.out / "config.ini", a.out / "manifest.txt", config);
  return 0;
}

struct ReportArgs {
  fs::path in;
  fs::path out;
};

// Pooled rows of one or more eval.csv files, sorted by AUC.
int cmd_report(const Globals& g, const ReportArgs& a, const std::string& config) {
  const auto t = io::read_csv(a.in / "eval.csv");
  const std::size_t cm = t.column("model_type"), cf = t.column("fold"), cn = t.column("n"),
                    ca = t.column("auc"), cc = t.column("mcc"), ct = t.column("threshold");
  struct Row {
    std::string model, n, auc, mcc, threshold;
  };
  std::vector<Row> rows;
  for (const auto& r : t.rows) {
    if (r[cf] == "pooled") rows.push_back({r[cm], r[cn], r[ca], r[cc], r[ct]});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    const double ax = x.auc.empty() ? -1.0 : std::stod(x.auc);
    const double ay = y.auc.empty() ? -1.0 : std::stod(y.auc);
    return ax > ay;
  });
  std::ostringstream text;
  text << fmt::format("{:<14} {:>6} {:>9} {:>9} {:>9}\n", "model", "n", "auc", "mcc", "threshold");
  for (const auto& r : rows) {
    text << fmt::format("{:<14} {:>6} {:>9} {:>9} {:>9}\n", r.model, r.n, r.auc, r.mcc, r.threshold);
  }
  std::cout << text.str();
  if (!a.out.empty()) {
    RunRecord rec("report", g.seed);
    rec.input_file("in/eval.csv", a.in / "eval.csv");
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    write_file(a.out, rec, [&](std::ostream& os) { os << text.str(); });
    const auto stem = a.out.parent_path() / a.out.stem();
    rec.finish(stem.string() + ".config.ini", stem.string() + ".manifest.txt", config);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"habitflow: habit-model simulation, sensor preprocessing and next-day prediction"};
  app.set_config("--config", "", "key = value configuration file");
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "seed for every random stream")->envname("HABITFLOW_SEED");
  app.add_option("--k", g.k, "outer folds")->envname("HABITFLOW_K")->check(CLI::PositiveNumber);
  app.add_option("--search-steps", g.search_steps, "random-search draws per tuning")
      ->envname("HABITFLOW_SEARCH_STEPS")
      ->check(CLI::PositiveNumber);
  app.add_option("--model-types", g.model_types, "survey,past_behavior,theory,combined or all")
      ->envname("HABITFLOW_MODEL_TYPES")
      ->delimiter(',');
  app.add_option("--study-mode", g.study_mode, "target coding and initial-rate convention")
      ->envname("HABITFLOW_STUDY_MODE")
      ->check(CLI::IsMember({"study1", "study2"}));
  app.add_option("--session", g.session, "trained session under study1")
      ->envname("HABITFLOW_SESSION")
      ->check(CLI::IsMember({"morning", "evening"}));
  app.add_option("--inner-mode", g.inner_mode, "single inner tuning fold or full rotation")
      ->envname("HABITFLOW_INNER_MODE")
      ->check(CLI::IsMember({"single", "full"}));

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "simulate a cohort dataset with its truth log");
  simulate->add_option("--out", sim_args.out, "output directory")->required();
  simulate->add_option("--participants", sim_args.spec.n_participants)->check(CLI::PositiveNumber);
  simulate->add_option("--days", sim_args.spec.n_days)->check(CLI::PositiveNumber);
  add_param_flags(simulate, sim_args.params, "(true value)");
  simulate->add_option("--link-a", sim_args.spec.link.a, "behavior link intercept");
  simulate->add_option("--link-b", sim_args.spec.link.b, "behavior link habit weight");
  simulate->add_option("--link-c", sim_args.spec.link.c, "behavior link accessibility weight");
  simulate->add_option("--survey-noise-sd", sim_args.spec.survey_noise_sd);
  simulate->add_option("--missing-rate", sim_args.spec.missing_rate);
  simulate->add_option("--initial-hs-max", sim_args.spec.initial_hs_max);
  simulate->add_option("--survey-days", sim_args.spec.survey_days)->delimiter(',');
  simulate->add_option("--reminder-days", sim_args.spec.reminder_days)->delimiter(',');
  simulate->add_option("--lab-days", sim_args.spec.lab_days)->delimiter(',');
  simulate->add_option("--id-prefix", sim_args.spec.id_prefix);
  simulate->add_option("--start-date", sim_args.spec.start_date);

  TraceArgs trace_args;
  auto* sim_trace = app.add_subcommand("simulate-trace", "simulate one raw accelerometer trace");
  sim_trace->add_option("--out", trace_args.out, "directory receiving <participant>.csv")->required();
  sim_trace->add_option("--participant", trace_args.participant);
  sim_trace->add_option("--days", trace_args.days)->check(CLI::PositiveNumber);
  sim_trace->add_option("--start-date", trace_args.start_date);
  sim_trace->add_option("--distractor-rate", trace_args.distractor_rate)->check(CLI::Range(0.0, 1.0));
  sim_trace->add_option("--episode-duration", trace_args.spec.episode_duration);
  sim_trace->add_option("--padding", trace_args.spec.padding);
  sim_trace->add_option("--idle-segment", trace_args.spec.idle_segment);
  sim_trace->add_option("--noise-sd", trace_args.spec.noise_sd);
  sim_trace->add_flag("--continuous", trace_args.spec.continuous, "record whole days");

  PreprocessArgs pre_args;
  auto* preprocess = app.add_subcommand("preprocess", "raw traces to day-level outcomes");
  preprocess->add_option("--raw-dir", pre_args.raw_dir, "directory of <participant>.csv traces")->required();
  preprocess->add_option("--noise", pre_args.noise, "participant_id,start_date,end_date windows");
  preprocess->add_option("--out", pre_args.out, "day-level CSV")->required();
  preprocess->add_option("--activity-threshold", pre_args.thresholds.activity_threshold, "g");
  preprocess->add_option("--min-duration", pre_args.thresholds.min_duration, "s");
  preprocess->add_option("--merge-gap", pre_args.thresholds.merge_gap, "s");

  FeaturizeArgs feat_args;
  auto* featurize = app.add_subcommand("featurize", "write one feature matrix per model type");
  featurize->add_option("--data", feat_args.data, "dataset directory")->required();
  featurize->add_option("--out", feat_args.out, "output directory")->required();
  add_param_flags(featurize, feat_args.params, "(theory features)");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "nested cross-validation per model type");
  evaluate->add_option("--data", eval_args.data, "dataset directory")->required();
  evaluate->add_option("--out", eval_args.out, "output directory")->required();

  CrossArgs cross_args;
  auto* cross = app.add_subcommand("cross-predict", "tune and fit on one cohort, score another");
  cross->add_option("--train", cross_args.train, "training dataset directory")->required();
  cross->add_option("--test", cross_args.test, "test dataset directory")->required();
  cross->add_option("--out", cross_args.out, "output directory")->required();

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "summarize an evaluation directory");
  report->add_option("--in", report_args.in, "directory holding eval.csv")->required();
  report->add_option("--out", report_args.out, "also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  // Keep global keys and those of the subcommand that ran.
  std::string config;
  {
    const std::string active = app.get_subcommands().front()->get_name() + ".";
    std::istringstream all(app.config_to_str(true, false));
    for (std::string line; std::getline(all, line);) {
      const auto eq = line.find('=');
      const auto dot = line.find('.');
      const bool scoped = dot != std::string::npos && (eq == std::string::npos || dot < eq);
      if (!scoped || line.rfind(active, 0) == 0) config += line + '\n';
    }
  }
  try {
    if (*simulate) return cmd_simulate(g, sim_args, config);
    if (*sim_trace) return cmd_simulate_trace(g, trace_args, config);
    if (*preprocess) return cmd_preprocess(g, pre_args, config);
    if (*featurize) return cmd_featurize(g, feat_args, config);
    if (*evaluate) return cmd_evaluate(g, eval_args, config);
    if (*cross) return cmd_cross_predict(g, cross_args, config);
    if (*report) return cmd_report(g, report_args, config);
  } catch (const std::exception& e) {
    fmt::print(stderr, "habitflow: {}\n", e.what());
    return 1;
  }
  return 2;
}

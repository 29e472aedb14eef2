// twostage command-line tool: simulate, fit, predict, evaluate, report.
// Uses only the C interface of libtwostage.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twostage/twostage.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code(tws_status s) {
  switch (s) {
    case TWS_OK: return 0;
    case TWS_E_PRECONDITION:
    case TWS_E_DOMAIN: return kExitUsage;
    case TWS_E_DATA:
    case TWS_E_IO: return kExitData;
    default: return kExitNumerical;
  }
}

struct Failure {
  int code;
};

void check(tws_status s, const std::string& context) {
  if (s == TWS_OK) return;
  std::fprintf(stderr, "twostage: %s: %s error: %s\n", context.c_str(), tws_status_name(s), tws_last_error());
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "twostage: %s\n", msg.c_str());
  throw Failure{kExitUsage};
}

std::uint64_t default_seed() {
  const char* env = std::getenv("TWOSTAGE_SEED");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end) usage_error(std::string("TWOSTAGE_SEED is not an unsigned integer: ") + env);
  return v;
}

void write_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) {
      std::fprintf(stderr, "twostage: cannot write %s\n", path.c_str());
      throw Failure{kExitData};
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    std::fprintf(stderr, "twostage: cannot write %s\n", path.c_str());
    throw Failure{kExitData};
  }
}

tws_model parse_model(const std::string& name) {
  tws_model m;
  if (tws_model_parse(name.c_str(), &m) != TWS_OK) usage_error("unknown model '" + name + "'");
  return m;
}

void print_warnings(const tws_cascade* c) {
  for (std::size_t i = 0; i < tws_cascade_warning_count(c); ++i)
    std::fprintf(stderr, "twostage: warning: %s\n", tws_cascade_warning(c, i));
}

struct SimulateArgs {
  tws_sim_options opts{};
  std::string out;
  std::string marks = "constant";
  double mark_followers = 1.0, mark_mu = 0.0, mark_sigma = 1.0;
  std::vector<double> grid{24, 36, 48, 72};
  std::vector<double> sweep;
};

int run_simulate(SimulateArgs& a, bool seed_given) {
  if (!seed_given) a.opts.seed = default_seed();
  if (a.marks == "constant") {
    a.opts.marks = TWS_MARKS_CONSTANT;
    a.opts.mark_a = a.mark_followers;
  } else if (a.marks == "lognormal") {
    a.opts.marks = TWS_MARKS_LOGNORMAL;
    a.opts.mark_a = a.mark_mu;
    a.opts.mark_b = a.mark_sigma;
  } else {
    usage_error("--marks must be constant or lognormal");
  }
  a.opts.t_obs_grid = a.grid.data();
  a.opts.t_obs_grid_len = a.grid.size();
  if (a.sweep.empty())
    check(tws_simulate_suite(&a.opts, a.out.c_str()), "simulate");
  else
    check(tws_simulate_sweep(&a.opts, a.sweep.data(), a.sweep.size(), a.out.c_str()), "simulate");
  std::printf("wrote %zu cascade(s) and manifest.txt to %s\n", a.opts.count * (a.sweep.empty() ? 1 : a.sweep.size()),
              a.out.c_str());
  return 0;
}

struct FitArgs {
  std::string cascade, out, model = "proposed";
  double t_obs = 0.0;
  int restarts = 0, tc_grid = 0;
  double rpp_epsilon = 0.1;
};

int run_fit(const FitArgs& a) {
  tws_cascade* c = nullptr;
  check(tws_cascade_load(a.cascade.c_str(), &c), a.cascade);
  print_warnings(c);
  const double t_obs = a.t_obs > 0 ? a.t_obs : 0.5 * tws_cascade_t_max(c);
  tws_fit_options fo;
  tws_fit_options_defaults(&fo, t_obs);
  if (a.restarts > 0) fo.restarts = a.restarts;
  if (a.tc_grid > 0) fo.tc_grid_points = a.tc_grid;
  fo.rpp_epsilon = a.rpp_epsilon;
  tws_fit* f = nullptr;
  const tws_status s = tws_fit_run(c, parse_model(a.model), &fo, &f);
  tws_cascade_free(c);
  check(s, "fit");
  const tws_status w = tws_fit_save(f, a.out.c_str());
  tws_params p;
  tws_fit_params(f, &p);
  std::printf("%s fit at t_obs=%g: loglik=%.6g aic=%.6g\n", tws_model_name(tws_fit_model(f)), t_obs,
              tws_fit_loglik(f), tws_fit_aic(f));
  tws_fit_free(f);
  check(w, a.out);
  return 0;
}

struct PredictArgs {
  std::string cascade, fit, model, out, series;
  double t_obs = 0.0, t_max = 0.0, bin_width = 1.0, step = 0.05;
  bool check_discretization = false, stage2_only = false, exclude_seed = false;
};

int run_predict(const PredictArgs& a) {
  if (a.fit.empty() == a.model.empty()) usage_error("predict needs exactly one of --fit or --model");
  tws_cascade* c = nullptr;
  check(tws_cascade_load(a.cascade.c_str(), &c), a.cascade);
  print_warnings(c);
  tws_fit* f = nullptr;
  tws_status s;
  if (!a.fit.empty()) {
    s = tws_fit_load(a.fit.c_str(), &f);
  } else {
    tws_fit_options fo;
    tws_fit_options_defaults(&fo, a.t_obs > 0 ? a.t_obs : 0.5 * tws_cascade_t_max(c));
    s = tws_fit_run(c, parse_model(a.model), &fo, &f);
  }
  if (s != TWS_OK) tws_cascade_free(c);
  check(s, a.fit.empty() ? "fit" : a.fit);

  tws_forecast_options po;
  tws_forecast_options_defaults(&po, a.t_max > 0 ? a.t_max : tws_cascade_t_max(c));
  po.bin_width = a.bin_width;
  po.step = a.step;
  po.check_discretization = a.check_discretization;
  po.stage2_only_feedback = a.stage2_only;
  po.dp_includes_seed = !a.exclude_seed;
  tws_forecast* fc = nullptr;
  s = tws_forecast_run(c, f, &po, &fc);
  tws_fit_free(f);
  if (s != TWS_OK) tws_cascade_free(c);
  check(s, "predict");

  char* csv = nullptr;
  s = tws_forecast_series_csv(fc, c, &csv);
  tws_cascade_free(c);
  if (s == TWS_OK) s = tws_forecast_save(fc, a.out.c_str());
  const std::size_t bins = tws_forecast_bin_count(fc);
  double t_end = 0.0, last = 0.0;
  if (bins) tws_forecast_bin(fc, bins - 1, &t_end, &last);
  tws_forecast_free(fc);
  if (s != TWS_OK) tws_string_free(csv);
  check(s, a.out);
  std::string text = csv;
  tws_string_free(csv);
  if (!a.series.empty()) write_file(a.series, text);
  std::printf("forecast: %zu bins, N(%g) = %.6g\n", bins, t_end, last);
  return 0;
}

struct EvaluateArgs {
  std::string manifest, out;
  std::vector<std::string> models{"proposed", "tideh", "rpp", "lr"};
  double split = 0.5, min_t_max = 36.0, bin_width = 1.0;
  std::size_t min_posts = 300;
  bool recovery = false, exclude_seed = false;
  int restarts = 0, tc_grid = 0;
};

int run_evaluate(const EvaluateArgs& a, int jobs) {
  std::vector<tws_model> models;
  for (const auto& m : a.models) models.push_back(parse_model(m));
  tws_eval_options eo;
  tws_eval_options_defaults(&eo);
  eo.models = models.data();
  eo.n_models = models.size();
  eo.split = a.split;
  eo.min_posts = a.min_posts;
  eo.min_t_max = a.min_t_max;
  eo.bin_width = a.bin_width;
  eo.recovery = a.recovery;
  eo.jobs = jobs;
  eo.dp_includes_seed = !a.exclude_seed;
  if (a.restarts > 0) eo.fit.restarts = a.restarts;
  if (a.tc_grid > 0) eo.fit.tc_grid_points = a.tc_grid;
  tws_report* r = nullptr;
  check(tws_evaluate(a.manifest.c_str(), &eo, &r), "evaluate");
  char* summary = nullptr;
  tws_status s = tws_report_save(r, a.out.c_str());
  if (s == TWS_OK) s = tws_report_summary(r, &summary);
  tws_report_free(r);
  check(s, a.out);
  std::fputs(summary, stdout);
  tws_string_free(summary);
  return 0;
}

int run_report(const std::string& path, const std::string& out_dir) {
  tws_report* r = nullptr;
  check(tws_report_load(path.c_str(), &r), path);
  char* summary = nullptr;
  tws_status s = tws_report_summary(r, &summary);
  if (s == TWS_OK && !out_dir.empty()) s = tws_report_write_series(r, out_dir.c_str());
  tws_report_free(r);
  if (s != TWS_OK) tws_string_free(summary);
  check(s, "report");
  std::fputs(summary, stdout);
  tws_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage self-exciting cascades: simulate, fit, forecast and evaluate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tws_version());
  int jobs = 1;
  app.add_option("--jobs,-j", jobs, "worker threads across cascades")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  tws_sim_options_defaults(&sim.opts);
  sim.opts.seed_followers = 1000;
  auto* simulate = app.add_subcommand("simulate", "simulate cascades and write a manifest");
  simulate->add_option("--a1", sim.opts.truth.a1, "stage-1 amplitude");
  simulate->add_option("--a2", sim.opts.truth.a2, "stage-2 amplitude");
  simulate->add_option("--tau1", sim.opts.truth.tau1, "stage-1 decay (hours)");
  simulate->add_option("--tau2", sim.opts.truth.tau2, "stage-2 decay (hours)");
  simulate->add_option("--tc", sim.opts.truth.tc, "correction time (hours)");
  simulate->add_option("--r", sim.opts.truth.r, "circadian amplitude");
  simulate->add_option("--theta0", sim.opts.truth.theta0, "circadian phase (hours)");
  simulate->add_option("--n", sim.opts.count, "cascades per group");
  simulate->add_option("--t-end", sim.opts.t_end, "simulation horizon (hours)");
  auto* seed_opt = simulate->add_option("--seed", sim.opts.seed, "RNG seed (default $TWOSTAGE_SEED or 0)");
  simulate->add_option("--seed-followers", sim.opts.seed_followers, "followers of the original post");
  simulate->add_option("--marks", sim.marks, "constant or lognormal");
  simulate->add_option("--followers", sim.mark_followers, "followers per post for constant marks");
  simulate->add_option("--mark-mu", sim.mark_mu, "log-normal location");
  simulate->add_option("--mark-sigma", sim.mark_sigma, "log-normal scale");
  simulate->add_option("--t-obs-grid", sim.grid, "observation times recorded in the manifest");
  simulate->add_option("--sweep-a2", sim.sweep, "one group per a2 value");
  simulate->add_option("--max-events", sim.opts.max_events, "runaway cap per cascade");
  simulate->add_option("--out,-o", sim.out, "output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to the observed prefix of a cascade");
  fit_cmd->add_option("--cascade,-c", fit.cascade, "cascade file")->required();
  fit_cmd->add_option("--t-obs", fit.t_obs, "end of the observation window (default t_max / 2)");
  fit_cmd->add_option("--model,-m", fit.model, "proposed, tideh or rpp");
  fit_cmd->add_option("--restarts", fit.restarts, "optimizer restarts");
  fit_cmd->add_option("--tc-grid", fit.tc_grid, "coarse grid points for tc");
  fit_cmd->add_option("--rpp-epsilon", fit.rpp_epsilon, "RPP reinforcement floor");
  fit_cmd->add_option("--out,-o", fit.out, "fit file")->required();

  PredictArgs pred;
  auto* predict = app.add_subcommand("predict", "forecast cumulative counts beyond t_obs");
  predict->add_option("--cascade,-c", pred.cascade, "cascade file")->required();
  predict->add_option("--fit,-f", pred.fit, "fit file");
  predict->add_option("--model,-m", pred.model, "fit this model first instead of loading --fit");
  predict->add_option("--t-obs", pred.t_obs, "observation window when fitting (default t_max / 2)");
  predict->add_option("--t-max", pred.t_max, "forecast horizon (default cascade t_max)");
  predict->add_option("--bin-width", pred.bin_width, "hours per bin");
  predict->add_option("--step", pred.step, "Volterra grid step (hours)");
  predict->add_flag("--check-discretization", pred.check_discretization, "fail if halving the step changes the result");
  predict->add_flag("--stage2-only-feedback", pred.stage2_only, "only stage-2 forecasts feed back");
  predict->add_flag("--exclude-seed", pred.exclude_seed, "leave the original post out of the follower average");
  predict->add_option("--series", pred.series, "CSV of predicted and actual counts");
  predict->add_option("--out,-o", pred.out, "forecast file")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "benchmark or recovery run over a manifest");
  evaluate->add_option("--manifest", ev.manifest, "manifest file")->required();
  evaluate->add_option("--models", ev.models, "models to compare")->delimiter(',');
  evaluate->add_option("--split", ev.split, "fraction of t_max used for fitting");
  evaluate->add_option("--min-posts", ev.min_posts, "skip cascades with fewer posts");
  evaluate->add_option("--min-t-max", ev.min_t_max, "skip cascades observed for less (hours)");
  evaluate->add_option("--bin-width", ev.bin_width, "hours per bin");
  evaluate->add_flag("--recovery", ev.recovery, "parameter recovery against manifest truth");
  evaluate->add_flag("--exclude-seed", ev.exclude_seed, "leave the original post out of the follower average");
  evaluate->add_option("--restarts", ev.restarts, "optimizer restarts");
  evaluate->add_option("--tc-grid", ev.tc_grid, "coarse grid points for tc");
  evaluate->add_option("--out,-o", ev.out, "report file")->required();

  std::string report_path, series_dir;
  auto* report = app.add_subcommand("report", "summarize a report and emit CSV series");
  report->add_option("report", report_path, "report file")->required();
  report->add_option("--series-dir", series_dir, "directory for table.csv, recovery.csv, overlays.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim, seed_opt->count() > 0);
    if (*fit_cmd) return run_fit(fit);
    if (*predict) return run_predict(pred);
    if (*evaluate) return run_evaluate(ev, jobs);
    if (*report) return run_report(report_path, series_dir);
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitUsage;
}

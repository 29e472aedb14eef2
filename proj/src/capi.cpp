#include "twostage/twostage.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "twostage/error.hpp"
#include "twostage/evaluation.hpp"
#include "twostage/forecast.hpp"
#include "twostage/inference.hpp"
#include "twostage/io.hpp"
#include "twostage/report.hpp"
#include "twostage/simulator.hpp"

using namespace twostage;

struct tws_cascade {
  Cascade value;
  std::vector<std::string> warnings;
};

struct tws_fit {
  FitResult value;
};

struct tws_forecast {
  ForecastSeries value;
};

struct tws_report {
  EvalReport value;
};

namespace {

thread_local std::string last_error;

tws_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::precondition: return TWS_E_PRECONDITION;
    case ErrorKind::domain: return TWS_E_DOMAIN;
    case ErrorKind::data: return TWS_E_DATA;
    case ErrorKind::io: return TWS_E_IO;
    case ErrorKind::numerical: return TWS_E_NUMERICAL;
    case ErrorKind::fit_failure: return TWS_E_FIT;
    case ErrorKind::runaway: return TWS_E_RUNAWAY;
  }
  return TWS_E_INTERNAL;
}

template <class F>
tws_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TWS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TWS_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TWS_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return TWS_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::precondition, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ModelId model_of(tws_model m) {
  switch (m) {
    case TWS_MODEL_PROPOSED: return ModelId::proposed;
    case TWS_MODEL_TIDEH: return ModelId::tideh;
    case TWS_MODEL_RPP: return ModelId::rpp;
    case TWS_MODEL_LR: return ModelId::lr;
  }
  fail(ErrorKind::precondition, "unknown model id " + std::to_string(static_cast<int>(m)));
}

tws_model model_of(ModelId m) {
  switch (m) {
    case ModelId::proposed: return TWS_MODEL_PROPOSED;
    case ModelId::tideh: return TWS_MODEL_TIDEH;
    case ModelId::rpp: return TWS_MODEL_RPP;
    case ModelId::lr: return TWS_MODEL_LR;
  }
  return TWS_MODEL_PROPOSED;
}

TwoStageParams params_of(const tws_params& p) {
  TwoStageParams out;
  out.a1 = p.a1;
  out.tau1 = p.tau1;
  out.a2 = p.a2;
  out.tau2 = p.tau2;
  out.circadian.r = p.r;
  out.circadian.theta0 = p.theta0;
  out.tc = p.tc;
  return out;
}

KernelParams kernel_of(const tws_kernel& k) { return {k.c0, k.s0, k.gamma}; }

FitConfig config_of(const tws_fit_options& o) {
  FitConfig cfg = FitConfig::for_observation(o.t_obs);
  if (o.tau_low > 0) cfg.tau_low = o.tau_low;
  if (o.tau_high > 0) cfg.tau_high = o.tau_high;
  if (o.tc_low > 0) cfg.tc_low = o.tc_low;
  if (o.tc_high > 0) cfg.tc_high = o.tc_high;
  if (o.tc_grid_points > 0) cfg.tc_grid_points = o.tc_grid_points;
  if (o.restarts > 0) cfg.restarts = o.restarts;
  cfg.kernel = kernel_of(o.kernel);
  return cfg;
}

SimConfig sim_config_of(const tws_sim_options& o) {
  SimConfig cfg;
  cfg.params = params_of(o.truth);
  cfg.kernel = kernel_of(o.kernel);
  cfg.t_end = o.t_end;
  cfg.seed_followers = o.seed_followers;
  if (o.marks == TWS_MARKS_LOGNORMAL)
    cfg.mark_model = LogNormalMarks{o.mark_a, o.mark_b};
  else
    cfg.mark_model = ConstantMarks{std::llround(o.mark_a)};
  cfg.rng_seed = o.seed;
  cfg.max_events = o.max_events;
  return cfg;
}

std::vector<double> grid_of(const tws_sim_options& o) {
  if (o.t_obs_grid_len == 0) return {};
  need(o.t_obs_grid, "t_obs_grid");
  return {o.t_obs_grid, o.t_obs_grid + o.t_obs_grid_len};
}

}  // namespace

extern "C" {

TWS_API const char* tws_last_error(void) { return last_error.c_str(); }

TWS_API const char* tws_status_name(tws_status status) {
  switch (status) {
    case TWS_OK: return "ok";
    case TWS_E_PRECONDITION: return "precondition";
    case TWS_E_DOMAIN: return "domain";
    case TWS_E_DATA: return "data";
    case TWS_E_IO: return "io";
    case TWS_E_NUMERICAL: return "numerical";
    case TWS_E_FIT: return "fit_failure";
    case TWS_E_RUNAWAY: return "runaway";
    case TWS_E_INTERNAL: return "internal";
  }
  return "unknown";
}

TWS_API const char* tws_version(void) { return "1.0.0"; }

TWS_API void tws_string_free(char* s) { std::free(s); }

TWS_API void tws_kernel_defaults(tws_kernel* out) {
  if (!out) return;
  const KernelParams k;
  *out = {k.c0, k.s0, k.gamma};
}

TWS_API tws_status tws_model_parse(const char* name, tws_model* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    *out = model_of(parse_model_id(name));
  });
}

TWS_API const char* tws_model_name(tws_model model) {
  switch (model) {
    case TWS_MODEL_PROPOSED: return "proposed";
    case TWS_MODEL_TIDEH: return "tideh";
    case TWS_MODEL_RPP: return "rpp";
    case TWS_MODEL_LR: return "lr";
  }
  return "unknown";
}

TWS_API tws_status tws_cascade_load(const char* path, tws_cascade** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<tws_cascade>();
    c->value = load_cascade(path, &c->warnings);
    *out = c.release();
  });
}

TWS_API void tws_cascade_free(tws_cascade* c) { delete c; }
TWS_API const char* tws_cascade_id(const tws_cascade* c) { return c ? c->value.id.c_str() : ""; }
TWS_API size_t tws_cascade_event_count(const tws_cascade* c) { return c ? c->value.events.size() : 0; }
TWS_API double tws_cascade_t_max(const tws_cascade* c) { return c ? c->value.t_max : 0.0; }
TWS_API size_t tws_cascade_count_until(const tws_cascade* c, double t) { return c ? c->value.count_until(t) : 0; }
TWS_API size_t tws_cascade_warning_count(const tws_cascade* c) { return c ? c->warnings.size() : 0; }

TWS_API const char* tws_cascade_warning(const tws_cascade* c, size_t i) {
  return c && i < c->warnings.size() ? c->warnings[i].c_str() : "";
}

TWS_API void tws_sim_options_defaults(tws_sim_options* out) {
  if (!out) return;
  const SimConfig cfg;
  *out = {};
  out->truth = {0.0006, 12.0, 0.0018, 16.0, 0.0, 0.0, 16.0};
  tws_kernel_defaults(&out->kernel);
  out->t_end = cfg.t_end;
  out->seed_followers = cfg.seed_followers;
  out->marks = TWS_MARKS_CONSTANT;
  out->mark_a = 1.0;
  out->mark_b = 1.0;
  out->seed = 0;
  out->count = 1;
  out->max_events = cfg.max_events;
}

TWS_API tws_status tws_simulate_suite(const tws_sim_options* opts, const char* out_dir) {
  return guarded([&] {
    need(opts, "opts");
    need(out_dir, "out_dir");
    const SimConfig cfg = sim_config_of(*opts);
    generate_recovery_suite(cfg.params, opts->count, grid_of(*opts), cfg, out_dir);
  });
}

TWS_API tws_status tws_simulate_sweep(const tws_sim_options* opts, const double* a2_values, size_t n_values,
                                      const char* out_dir) {
  return guarded([&] {
    need(opts, "opts");
    need(out_dir, "out_dir");
    require(n_values > 0, ErrorKind::precondition, "sweep needs at least one a2 value");
    need(a2_values, "a2_values");
    const SimConfig cfg = sim_config_of(*opts);
    generate_sweep_suite(cfg.params, {a2_values, a2_values + n_values}, opts->count, grid_of(*opts), cfg, out_dir);
  });
}

TWS_API void tws_fit_options_defaults(tws_fit_options* out, double t_obs) {
  if (!out) return;
  *out = {};
  out->t_obs = t_obs;
  const FitConfig cfg;
  out->tc_grid_points = cfg.tc_grid_points;
  out->restarts = cfg.restarts;
  out->rpp_epsilon = 0.1;
  tws_kernel_defaults(&out->kernel);
}

TWS_API tws_status tws_fit_run(const tws_cascade* c, tws_model model, const tws_fit_options* opts,
                               tws_fit** out) {
  return guarded([&] {
    need(c, "cascade");
    need(opts, "opts");
    need(out, "out");
    *out = nullptr;
    auto f = std::make_unique<tws_fit>();
    f->value = fit_model(c->value, model_of(model), config_of(*opts), opts->rpp_epsilon);
    *out = f.release();
  });
}

TWS_API tws_status tws_fit_load(const char* path, tws_fit** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto f = std::make_unique<tws_fit>();
    f->value = load_fit(path);
    *out = f.release();
  });
}

TWS_API tws_status tws_fit_save(const tws_fit* f, const char* path) {
  return guarded([&] {
    need(f, "fit");
    need(path, "path");
    save_fit(f->value, path);
  });
}

TWS_API void tws_fit_free(tws_fit* f) { delete f; }
TWS_API tws_model tws_fit_model(const tws_fit* f) { return f ? model_of(f->value.model) : TWS_MODEL_PROPOSED; }

TWS_API void tws_fit_params(const tws_fit* f, tws_params* out) {
  if (!f || !out) return;
  const auto& p = f->value.params;
  *out = {p.a1, p.tau1, p.a2, p.tau2, p.circadian.r, p.circadian.theta0, p.tc};
}

TWS_API double tws_fit_t_obs(const tws_fit* f) { return f ? f->value.t_obs : 0.0; }
TWS_API double tws_fit_loglik(const tws_fit* f) { return f ? f->value.loglik : 0.0; }
TWS_API double tws_fit_aic(const tws_fit* f) { return f ? f->value.aic : 0.0; }

TWS_API void tws_forecast_options_defaults(tws_forecast_options* out, double t_max) {
  if (!out) return;
  const VolterraOptions v;
  *out = {};
  out->t_max = t_max;
  out->bin_width = 1.0;
  out->step = v.step;
  out->check_discretization = v.check_refinement;
  out->stage2_only_feedback = v.feedback == FeedbackMode::stage2_only;
  out->dp_includes_seed = v.dp_includes_seed;
}

TWS_API tws_status tws_forecast_run(const tws_cascade* c, const tws_fit* f, const tws_forecast_options* opts,
                                    tws_forecast** out) {
  return guarded([&] {
    need(c, "cascade");
    need(f, "fit");
    need(opts, "opts");
    need(out, "out");
    *out = nullptr;
    VolterraOptions v;
    v.step = opts->step;
    v.check_refinement = opts->check_discretization != 0;
    v.feedback = opts->stage2_only_feedback ? FeedbackMode::stage2_only : FeedbackMode::full;
    v.dp_includes_seed = opts->dp_includes_seed != 0;
    auto fc = std::make_unique<tws_forecast>();
    fc->value = forecast(c->value, f->value, opts->t_max, v, opts->bin_width);
    *out = fc.release();
  });
}

TWS_API tws_status tws_forecast_load(const char* path, tws_forecast** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto fc = std::make_unique<tws_forecast>();
    fc->value = load_forecast(path);
    *out = fc.release();
  });
}

TWS_API tws_status tws_forecast_save(const tws_forecast* fc, const char* path) {
  return guarded([&] {
    need(fc, "forecast");
    need(path, "path");
    save_forecast(fc->value, path);
  });
}

TWS_API void tws_forecast_free(tws_forecast* fc) { delete fc; }
TWS_API size_t tws_forecast_bin_count(const tws_forecast* fc) { return fc ? fc->value.bins.size() : 0; }

TWS_API void tws_forecast_bin(const tws_forecast* fc, size_t i, double* t_end, double* cumulative) {
  if (!fc || i >= fc->value.bins.size()) return;
  if (t_end) *t_end = fc->value.bins[i].t_end;
  if (cumulative) *cumulative = fc->value.bins[i].cumulative;
}

TWS_API tws_status tws_forecast_series_csv(const tws_forecast* fc, const tws_cascade* c, char** out) {
  return guarded([&] {
    need(fc, "forecast");
    need(out, "out");
    std::ostringstream s;
    s << "t_end,predicted,actual\n";
    for (const auto& b : fc->value.bins) {
      s << format_double(b.t_end) << "," << format_double(b.cumulative) << ",";
      if (c && b.t_end <= c->value.t_max + 1e-9) s << c->value.count_until(b.t_end);
      s << "\n";
    }
    *out = dup_string(s.str());
  });
}

TWS_API void tws_eval_options_defaults(tws_eval_options* out) {
  if (!out) return;
  const BenchmarkOptions b;
  *out = {};
  out->split = b.split;
  out->min_posts = b.min_posts;
  out->min_t_max = b.min_t_max;
  out->bin_width = b.bin_width;
  out->jobs = 1;
  out->dp_includes_seed = b.volterra.dp_includes_seed;
  tws_fit_options_defaults(&out->fit, 36.0);
}

TWS_API tws_status tws_evaluate(const char* manifest_path, const tws_eval_options* opts, tws_report** out) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(opts, "opts");
    need(out, "out");
    *out = nullptr;
    const Manifest manifest = load_manifest(manifest_path);
    std::vector<ModelId> models;
    for (size_t i = 0; i < opts->n_models; ++i) models.push_back(model_of(opts->models[i]));
    FitConfig fit = config_of(opts->fit);
    auto r = std::make_unique<tws_report>();
    if (opts->recovery) {
      RecoveryOptions ro;
      if (!models.empty()) ro.model = models.front();
      ro.fit = fit;
      ro.jobs = opts->jobs;
      r->value = run_recovery(manifest, ro);
    } else {
      BenchmarkOptions bo;
      if (!models.empty()) bo.models = models;
      bo.split = opts->split;
      bo.min_posts = opts->min_posts;
      bo.min_t_max = opts->min_t_max;
      bo.bin_width = opts->bin_width;
      bo.fit = fit;
      bo.fit.kernel = manifest.kernel;
      bo.volterra.dp_includes_seed = opts->dp_includes_seed != 0;
      bo.rpp_epsilon = opts->fit.rpp_epsilon;
      bo.jobs = opts->jobs;
      r->value = run_benchmark(manifest, bo);
    }
    *out = r.release();
  });
}

TWS_API tws_status tws_report_load(const char* path, tws_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto r = std::make_unique<tws_report>();
    r->value = load_report(path);
    *out = r.release();
  });
}

TWS_API tws_status tws_report_save(const tws_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    need(path, "path");
    save_report(r->value, path);
  });
}

TWS_API void tws_report_free(tws_report* r) { delete r; }

TWS_API tws_status tws_report_summary(const tws_report* r, char** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(render_summary(r->value));
  });
}

TWS_API tws_status tws_report_write_series(const tws_report* r, const char* out_dir) {
  return guarded([&] {
    need(r, "report");
    need(out_dir, "out_dir");
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / "table.csv", aggregate_csv(r->value));
    write_text(dir / "recovery.csv", recovery_csv(r->value));
    write_text(dir / "overlays.csv", overlay_csv(r->value));
  });
}

}  // extern "C"

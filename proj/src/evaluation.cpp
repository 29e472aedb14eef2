#include "twostage/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "twostage/baselines.hpp"
#include "twostage/error.hpp"
#include "twostage/io.hpp"

namespace twostage {

std::vector<double> bin_counts(const Cascade& cascade, double t_obs, double t_max, double width) {
  std::vector<double> out;
  for (double t : bin_grid(t_obs, t_max, width)) out.push_back(static_cast<double>(cascade.count_until(t)));
  return out;
}

double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::precondition, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

ErrorSummary absolute_errors(std::span<const double> predicted, std::span<const double> actual) {
  require(predicted.size() == actual.size(), ErrorKind::precondition,
          "absolute_errors: predicted and actual bin grids differ in length");
  require(!actual.empty(), ErrorKind::precondition, "absolute_errors: no bins");
  std::vector<double> err(actual.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < actual.size(); ++k) {
    err[k] = std::abs(predicted[k] - actual[k]);
    sum += err[k];
  }
  return {sum / static_cast<double>(err.size()), median(std::move(err))};
}

ErrorSummary absolute_errors(const ForecastSeries& predicted, std::span<const double> actual) {
  std::vector<double> p;
  for (const auto& b : predicted.bins) p.push_back(b.cumulative);
  return absolute_errors(std::span<const double>(p), actual);
}

void assign_wins(std::vector<BenchmarkRow>& rows) {
  auto rank = [](ModelId m) { return static_cast<int>(m); };
  auto pick = [&](auto metric, auto setter) {
    BenchmarkRow* best = nullptr;
    for (auto& r : rows) {
      setter(r, false);
      if (!r.ok) continue;
      if (!best || metric(r) < metric(*best) || (metric(r) == metric(*best) && rank(r.model) < rank(best->model)))
        best = &r;
    }
    if (best) setter(*best, true);
  };
  pick([](const BenchmarkRow& r) { return r.mean_ae; }, [](BenchmarkRow& r, bool v) { r.win_mean = v; });
  pick([](const BenchmarkRow& r) { return r.median_ae; }, [](BenchmarkRow& r, bool v) { r.win_median = v; });
}

std::vector<AggregateRow> aggregate(const std::vector<BenchmarkRow>& rows, const std::vector<ModelId>& models) {
  std::vector<AggregateRow> out;
  for (auto m : models) {
    AggregateRow a;
    a.model = m;
    std::size_t total = 0, wins_mean = 0, wins_median = 0;
    for (const auto& r : rows) {
      if (r.model != m) continue;
      ++total;
      if (r.ok) {
        ++a.n_ok;
        a.mean_mean_ae += r.mean_ae;
        a.mean_median_ae += r.median_ae;
      } else {
        ++a.n_failed;
      }
      wins_mean += r.win_mean;
      wins_median += r.win_median;
    }
    if (a.n_ok) {
      a.mean_mean_ae /= static_cast<double>(a.n_ok);
      a.mean_median_ae /= static_cast<double>(a.n_ok);
    } else {
      a.mean_mean_ae = a.mean_median_ae = std::numeric_limits<double>::quiet_NaN();
    }
    if (total) {
      a.win_fraction_mean = static_cast<double>(wins_mean) / static_cast<double>(total);
      a.win_fraction_median = static_cast<double>(wins_median) / static_cast<double>(total);
    }
    out.push_back(a);
  }
  return out;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

FitConfig config_for(const FitConfig& base, double t_obs) {
  FitConfig cfg = FitConfig::for_observation(t_obs);
  cfg.tau_low = base.tau_low;
  cfg.tc_grid_points = base.tc_grid_points;
  cfg.restarts = base.restarts;
  cfg.quad_tol = base.quad_tol;
  cfg.convergence_tol = base.convergence_tol;
  cfg.min_events = base.min_events;
  cfg.kernel = base.kernel;
  return cfg;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->kind())) + ": " + e.what();
  return e.what();
}

}  // namespace

EvalReport run_benchmark(const std::vector<Cascade>& cascades, const BenchmarkOptions& opts) {
  require(opts.split > 0.0 && opts.split < 1.0, ErrorKind::precondition, "benchmark: split must lie in (0, 1)");
  require(!opts.models.empty(), ErrorKind::precondition, "benchmark: no models selected");
  EvalReport report;
  report.split = opts.split;
  report.models = opts.models;

  std::vector<const Cascade*> included;
  for (const auto& c : cascades) {
    const auto posts = c.count_until(c.t_max);
    if (posts < opts.min_posts) {
      report.skipped.push_back({c.id, "only " + std::to_string(posts) + " posts (minimum " +
                                          std::to_string(opts.min_posts) + ")"});
    } else if (c.t_max < opts.min_t_max) {
      report.skipped.push_back({c.id, "t_max " + format_double(c.t_max) + " h below " + format_double(opts.min_t_max)});
    } else {
      included.push_back(&c);
    }
  }

  std::vector<std::vector<BenchmarkRow>> rows(included.size());
  std::vector<ActualSeries> actual(included.size());
  parallel_for(included.size(), opts.jobs, [&](std::size_t i) {
    const Cascade& c = *included[i];
    const double t_obs = opts.split * c.t_max;
    const auto grid = bin_grid(t_obs, c.t_max, opts.bin_width);
    actual[i] = {c.id, t_obs, opts.bin_width, bin_counts(c, t_obs, c.t_max, opts.bin_width)};
    const FitConfig cfg = config_for(opts.fit, t_obs);
    for (auto model : opts.models) {
      BenchmarkRow row;
      row.cascade_id = c.id;
      row.model = model;
      row.t_obs = t_obs;
      row.t_max = c.t_max;
      row.aic = row.loglik = std::numeric_limits<double>::quiet_NaN();
      try {
        if (model == ModelId::lr) {
          std::vector<Cascade> training;
          for (const Cascade* other : included) {
            if (other == &c || other->t_max < grid.back() || other->count_until(t_obs) < 1) continue;
            training.push_back(*other);
          }
          const LRModel lr = lr_fit(training, t_obs, grid);
          row.predicted = lr_predict(lr, static_cast<double>(c.count_until(t_obs)));
        } else {
          const FitResult fit = fit_model(c, model, cfg, opts.rpp_epsilon);
          row.aic = fit.aic;
          row.loglik = fit.loglik;
          for (const auto& b : forecast(c, fit, c.t_max, opts.volterra, opts.bin_width).bins)
            row.predicted.push_back(b.cumulative);
        }
        const ErrorSummary e = absolute_errors(std::span<const double>(row.predicted), actual[i].counts);
        row.mean_ae = e.mean;
        row.median_ae = e.median;
        row.ok = std::isfinite(e.mean) && std::isfinite(e.median);
        if (!row.ok) row.message = "non-finite forecast";
      } catch (const std::exception& e) {
        row.ok = false;
        row.message = describe(e);
      }
      if (!row.ok) {
        row.mean_ae = row.median_ae = std::numeric_limits<double>::quiet_NaN();
        row.predicted.clear();
      }
      rows[i].push_back(std::move(row));
    }
    assign_wins(rows[i]);
  });

  for (auto& r : rows)
    for (auto& row : r) report.rows.push_back(std::move(row));
  report.actual = std::move(actual);
  report.aggregates = aggregate(report.rows, report.models);
  return report;
}

EvalReport run_benchmark(const Manifest& manifest, const BenchmarkOptions& opts) {
  std::vector<Cascade> cascades;
  for (const auto& g : manifest.groups)
    for (const auto& rel : g.cascades) cascades.push_back(load_cascade(manifest.resolve(rel)));
  return run_benchmark(cascades, opts);
}

double intensity_l1(const Cascade& cascade, const TwoStageParams& fitted, const TwoStageParams& truth,
                    const KernelParams& kernel, double t_obs, double step) {
  require(step > 0.0 && t_obs > 0.0, ErrorKind::precondition, "intensity_l1: need positive step and t_obs");
  const auto n = static_cast<std::size_t>(std::ceil(t_obs / step));
  const double h = t_obs / static_cast<double>(n);
  std::size_t end = 0;
  double diff = 0.0, norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = h * (static_cast<double>(j) + 0.5);
    while (end < cascade.events.size() && cascade.events[end].time < t) ++end;
    const std::span<const Event> past(cascade.events.data(), end);
    const double lt = intensity_two_stage(t, past, truth, kernel);
    const double lf = intensity_two_stage(t, past, fitted, kernel);
    diff += std::abs(lf - lt);
    norm += lt;
  }
  return norm > 0.0 ? diff / norm : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

EvalReport run_recovery(const Manifest& manifest, const RecoveryOptions& opts) {
  require(opts.model == ModelId::proposed || opts.model == ModelId::tideh, ErrorKind::precondition,
          "recovery: only the proposed and tideh models have comparable parameters");
  require(!manifest.t_obs_grid.empty(), ErrorKind::precondition, "recovery: manifest has an empty t_obs grid");
  struct Task {
    const ManifestGroup* group;
    std::size_t cascade;
    double t_obs;
  };
  std::vector<Task> tasks;
  for (const auto& g : manifest.groups) {
    require(g.has_truth, ErrorKind::precondition, "recovery: group '" + g.name + "' has no truth parameters");
    for (std::size_t i = 0; i < g.cascades.size(); ++i)
      for (double t : manifest.t_obs_grid) tasks.push_back({&g, i, t});
  }

  EvalReport report;
  report.split = manifest.split;
  report.models = {opts.model};
  report.recovery.resize(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t k) {
    const Task& task = tasks[k];
    RecoveryRow& row = report.recovery[k];
    row.group = task.group->name;
    row.t_obs = task.t_obs;
    row.truth = task.group->truth;
    try {
      const Cascade c = load_cascade(manifest.resolve(task.group->cascades[task.cascade]));
      row.cascade_id = c.id;
      FitConfig cfg = config_for(opts.fit, task.t_obs);
      cfg.kernel = manifest.kernel;
      const FitResult fit = fit_model(c, opts.model, cfg);
      row.estimate = fit.params;
      row.loglik = fit.loglik;
      row.intensity_l1 = intensity_l1(c, fit.params, row.truth, manifest.kernel, task.t_obs, opts.l1_step);
      row.ok = true;
    } catch (const std::exception& e) {
      if (row.cascade_id.empty()) row.cascade_id = task.group->cascades[task.cascade];
      row.ok = false;
      row.message = describe(e);
      row.loglik = row.intensity_l1 = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return report;
}

std::vector<RecoverySummary> summarize_recovery(const std::vector<RecoveryRow>& rows) {
  std::vector<RecoverySummary> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  std::vector<std::array<std::vector<double>, 5>> errors;
  std::vector<std::vector<double>> l1;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.group, r.t_obs);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      RecoverySummary s;
      s.group = r.group;
      s.t_obs = r.t_obs;
      out.push_back(s);
      errors.emplace_back();
      l1.emplace_back();
    }
    RecoverySummary& s = out[it->second];
    if (!r.ok) {
      ++s.n_failed;
      continue;
    }
    ++s.n_ok;
    const double truth[5] = {r.truth.a1, r.truth.tau1, r.truth.a2, r.truth.tau2, r.truth.tc};
    const double est[5] = {r.estimate.a1, r.estimate.tau1, r.estimate.a2, r.estimate.tau2, r.estimate.tc};
    for (int p = 0; p < 5; ++p)
      if (truth[p] != 0.0) errors[it->second][p].push_back(std::abs(est[p] - truth[p]) / std::abs(truth[p]));
    l1[it->second].push_back(r.intensity_l1);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int p = 0; p < 5; ++p) {
      out[i].median_rel_error[p] = quantile(errors[i][p], 0.5);
      out[i].q25_rel_error[p] = quantile(errors[i][p], 0.25);
      out[i].q75_rel_error[p] = quantile(errors[i][p], 0.75);
    }
    out[i].median_l1 = quantile(l1[i], 0.5);
    out[i].max_l1 = l1[i].empty() ? std::numeric_limits<double>::quiet_NaN()
                                  : *std::max_element(l1[i].begin(), l1[i].end());
  }
  return out;
}

}  // namespace twostage

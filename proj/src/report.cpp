#include "twostage/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "twostage/forecast.hpp"
#include "twostage/io.hpp"

namespace twostage {

namespace {

std::string fixed(double x, int digits = 3) {
  if (!std::isfinite(x)) return format_double(x);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string percent(double x) { return fixed(100.0 * x, 1) + "%"; }

}  // namespace

HeadToHead head_to_head(const EvalReport& report, ModelId a, ModelId b) {
  std::map<std::string, std::pair<const BenchmarkRow*, const BenchmarkRow*>> by_cascade;
  std::vector<std::string> order;
  for (const auto& row : report.rows) {
    if (row.model != a && row.model != b) continue;
    auto [it, fresh] = by_cascade.try_emplace(row.cascade_id);
    if (fresh) order.push_back(row.cascade_id);
    (row.model == a ? it->second.first : it->second.second) = &row;
  }
  HeadToHead h;
  for (const auto& id : order) {
    const auto [ra, rb] = by_cascade[id];
    if (!ra) continue;
    ++h.cascades;
    if (ra->ok && (!rb || !rb->ok || ra->mean_ae < rb->mean_ae)) ++h.ae_wins;
    if (ra->ok && rb && rb->ok && std::isfinite(ra->aic) && std::isfinite(rb->aic)) {
      ++h.aic_compared;
      if (ra->aic < rb->aic) ++h.aic_wins;
    }
  }
  return h;
}

std::string render_summary(const EvalReport& report) {
  std::ostringstream out;
  out << "twostage evaluation report (split " << format_double(report.split) << ")\n";

  if (!report.rows.empty()) {
    out << "\nForecast errors (mean over cascades)\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %6s %6s %12s %12s %9s %9s\n", "model", "ok", "failed", "mean AE",
                  "median AE", "wins(mn)", "wins(md)");
    out << line;
    for (const auto& a : report.aggregates) {
      std::snprintf(line, sizeof line, "%-10s %6zu %6zu %12s %12s %9s %9s\n", to_string(a.model), a.n_ok,
                    a.n_failed, fixed(a.mean_mean_ae).c_str(), fixed(a.mean_median_ae).c_str(),
                    percent(a.win_fraction_mean).c_str(), percent(a.win_fraction_median).c_str());
      out << line;
    }
    if (report.models.size() > 1) {
      const ModelId first = report.models.front();
      out << "\n";
      for (std::size_t k = 1; k < report.models.size(); ++k) {
        const HeadToHead h = head_to_head(report, first, report.models[k]);
        out << to_string(first) << " vs " << to_string(report.models[k]) << ": lower mean AE on " << h.ae_wins
            << "/" << h.cascades << " (" << percent(h.ae_fraction()) << ")";
        if (h.aic_compared > 0)
          out << ", lower AIC on " << h.aic_wins << "/" << h.cascades << " (" << percent(h.aic_fraction()) << ")";
        out << "\n";
      }
    }
  }

  if (!report.skipped.empty()) {
    out << "\nSkipped cascades: " << report.skipped.size() << "\n";
    for (const auto& s : report.skipped) out << "  " << s.cascade_id << ": " << s.reason << "\n";
  }

  if (!report.recovery.empty()) {
    out << "\nParameter recovery (median |relative error|, [q25, q75])\n";
    for (const auto& s : summarize_recovery(report.recovery)) {
      out << "group " << s.group << "  t_obs " << format_double(s.t_obs) << " h  ok " << s.n_ok << "  failed "
          << s.n_failed << "\n";
      for (std::size_t p = 0; p < kRecoveredNames.size(); ++p)
        out << "  " << kRecoveredNames[p] << "\t" << percent(s.median_rel_error[p]) << "  ["
            << percent(s.q25_rel_error[p]) << ", " << percent(s.q75_rel_error[p]) << "]\n";
      out << "  intensity L1\tmedian " << percent(s.median_l1) << "  max " << percent(s.max_l1) << "\n";
    }
  }
  return out.str();
}

std::string aggregate_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "model,n_ok,n_failed,mean_mean_ae,mean_median_ae,win_fraction_mean,win_fraction_median\n";
  for (const auto& a : report.aggregates)
    out << to_string(a.model) << "," << a.n_ok << "," << a.n_failed << "," << format_double(a.mean_mean_ae) << ","
        << format_double(a.mean_median_ae) << "," << format_double(a.win_fraction_mean) << ","
        << format_double(a.win_fraction_median) << "\n";
  return out.str();
}

std::string recovery_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "group,t_obs,parameter,median,q25,q75\n";
  for (const auto& s : summarize_recovery(report.recovery)) {
    for (std::size_t p = 0; p < kRecoveredNames.size(); ++p)
      out << s.group << "," << format_double(s.t_obs) << "," << kRecoveredNames[p] << ","
          << format_double(s.median_rel_error[p]) << "," << format_double(s.q25_rel_error[p]) << ","
          << format_double(s.q75_rel_error[p]) << "\n";
    out << s.group << "," << format_double(s.t_obs) << ",intensity_l1," << format_double(s.median_l1) << ",,\n";
  }
  return out.str();
}

std::string overlay_csv(const EvalReport& report) {
  std::map<std::string, const ActualSeries*> actual;
  for (const auto& a : report.actual) actual[a.cascade_id] = &a;
  std::ostringstream out;
  out << "cascade,model,t_end,predicted,actual\n";
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    const auto it = actual.find(row.cascade_id);
    const ActualSeries* a = it == actual.end() ? nullptr : it->second;
    const double w = a ? a->bin_width : 1.0;
    for (std::size_t k = 0; k < row.predicted.size(); ++k) {
      out << row.cascade_id << "," << to_string(row.model) << ","
          << format_double(row.t_obs + w * static_cast<double>(k + 1)) << "," << format_double(row.predicted[k])
          << ",";
      if (a && k < a->counts.size()) out << format_double(a->counts[k]);
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace twostage

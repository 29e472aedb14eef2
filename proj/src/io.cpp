#include "twostage/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "twostage/error.hpp"

namespace twostage {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token) {
  if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (token == "inf") return std::numeric_limits<double>::infinity();
  if (token == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && token[0] == '+') ++first;
  const auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last || first == last)
    fail(ErrorKind::data, "not a number: '" + token + "'");
  return x;
}

namespace {

std::int64_t parse_int(const std::string& token) {
  std::int64_t v = 0;
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(token.data(), last, v);
  if (res.ec != std::errc() || res.ptr != last || token.empty())
    fail(ErrorKind::data, "not an integer: '" + token + "'");
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(parse_double(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Line reader that tracks line numbers and prefixes errors with the origin.
class Reader {
 public:
  Reader(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines_.push_back(line);
    }
  }

  void expect_header(const std::string& kind) {
    if (lines_.empty()) error(1, "empty file");
    const auto tok = split_ws(lines_[0]);
    if (tok.size() != 3 || tok[0] != "#" || tok[1] != "twostage-" + kind)
      error(1, "expected header '# twostage-" + kind + " <version>'");
    const auto dot = tok[2].find('.');
    const std::string major = tok[2].substr(0, dot);
    std::int64_t v = 0;
    try {
      v = parse_int(major);
    } catch (const Error&) {
      error(1, "bad schema version '" + tok[2] + "'");
    }
    if (v != kSchemaMajor) error(1, "unsupported schema major version " + major);
    pos_ = 1;
  }

  // Next non-blank line that is not a comment; false at end of input.
  bool next(std::string& line) {
    while (pos_ < lines_.size()) {
      const std::string& l = lines_[pos_++];
      const auto first = l.find_first_not_of(" \t");
      if (first == std::string::npos || l[first] == '#') continue;
      line = l;
      return true;
    }
    return false;
  }

  std::size_t line_number() const { return pos_; }

  [[noreturn]] void error(std::size_t line, const std::string& what) const {
    fail(ErrorKind::data, origin_ + ":" + std::to_string(line) + ": " + what);
  }
  [[noreturn]] void error(const std::string& what) const { error(pos_, what); }

  template <class F>
  auto guard(F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::data) throw;
      error(e.what());
    }
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
  std::string origin_;
};

// "key value..." with the value being the rest of the line after one space.
std::pair<std::string, std::string> key_value(const std::string& line) {
  const auto first = line.find_first_not_of(" \t");
  const auto sp = line.find_first_of(" \t", first);
  if (sp == std::string::npos) return {line.substr(first), ""};
  const auto vstart = line.find_first_not_of(" \t", sp);
  std::string value = vstart == std::string::npos ? "" : line.substr(vstart);
  while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
  return {line.substr(first, sp - first), value};
}

std::string header(const std::string& kind) {
  return "# twostage-" + kind + " " + std::to_string(kSchemaMajor) + "." + std::to_string(kSchemaMinor) + "\n";
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read error on '" + path.string() + "'");
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open '" + tmp.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::io, "write error on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::io, "cannot move output into place at '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------- cascades

std::string cascade_to_string(const Cascade& c) {
  std::string out = header("cascade");
  out += "id " + sanitize(c.id) + "\n";
  out += "title " + sanitize(c.info.title) + "\n";
  out += "origin_date " + sanitize(c.info.origin_date) + "\n";
  out += "source " + sanitize(c.info.source) + "\n";
  out += "t_max " + format_double(c.t_max) + "\n";
  out += "origin_followers " + std::to_string(c.origin_followers) + "\n";
  out += "events " + std::to_string(c.events.size()) + "\n";
  for (const auto& e : c.events) out += format_double(e.time) + " " + std::to_string(e.followers) + "\n";
  return out;
}

Cascade cascade_from_string(const std::string& text, std::vector<std::string>* warnings, const std::string& origin) {
  Reader rd(text, origin);
  rd.expect_header("cascade");
  Cascade c;
  double origin_time = 0.0;
  bool have_t_max = false, in_events = false;
  std::string line;
  while (rd.next(line)) {
    if (!in_events) {
      const auto [key, value] = key_value(line);
      if (key == "id") c.id = value;
      else if (key == "title") c.info.title = value;
      else if (key == "origin_date") c.info.origin_date = value;
      else if (key == "source") c.info.source = value;
      else if (key == "origin_time") origin_time = rd.guard([&] { return parse_double(value); });
      else if (key == "t_max") {
        c.t_max = rd.guard([&] { return parse_double(value); });
        have_t_max = true;
      } else if (key == "origin_followers") c.origin_followers = rd.guard([&] { return parse_int(value); });
      else if (key == "events") in_events = true;
      else rd.error("unknown key '" + key + "'");
      continue;
    }
    const auto tok = split_ws(line);
    if (tok.size() > 2) rd.error("expected 'time [followers]'");
    Event e;
    e.time = rd.guard([&] { return parse_double(tok[0]); }) - origin_time;
    e.followers = tok.size() == 2 ? rd.guard([&] { return parse_int(tok[1]); }) : 1;
    if (!std::isfinite(e.time) || e.time < 0.0) rd.error("negative or non-finite event time");
    if (e.followers < 0) rd.error("negative follower count");
    c.events.push_back(e);
  }
  if (!in_events) rd.error("missing 'events' section");
  if (!std::is_sorted(c.events.begin(), c.events.end(), [](const Event& a, const Event& b) { return a.time < b.time; })) {
    std::stable_sort(c.events.begin(), c.events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    if (warnings) warnings->push_back(origin + ": events were not sorted by time; sorted on load");
  }
  if (!have_t_max) {
    c.t_max = c.events.empty() ? 0.0 : c.events.back().time;
    if (warnings) warnings->push_back(origin + ": no t_max given; using the last event time");
  } else {
    c.t_max -= origin_time;
  }
  try {
    validate(c);
  } catch (const Error& e) {
    fail(ErrorKind::data, origin + ": " + e.what());
  }
  return c;
}

Cascade load_cascade(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return cascade_from_string(read_text(path), warnings, path.string());
}

void save_cascade(const Cascade& cascade, const std::filesystem::path& path) {
  write_text(path, cascade_to_string(cascade));
}

// ---------------------------------------------------------------- fits

std::string fit_to_string(const FitResult& f) {
  std::string out = header("fit");
  auto kv = [&](const std::string& k, double v) { out += k + " " + format_double(v) + "\n"; };
  out += std::string("model ") + to_string(f.model) + "\n";
  kv("t_obs", f.t_obs);
  kv("a1", f.params.a1);
  kv("tau1", f.params.tau1);
  kv("a2", f.params.a2);
  kv("tau2", f.params.tau2);
  kv("r", f.params.circadian.r);
  kv("theta0", f.params.circadian.theta0);
  kv("period", f.params.circadian.period);
  kv("tc", f.params.tc);
  kv("kernel_c0", f.kernel.c0);
  kv("kernel_s0", f.kernel.s0);
  kv("kernel_gamma", f.kernel.gamma);
  if (f.model == ModelId::rpp) {
    kv("rpp_c", f.rpp.c);
    kv("rpp_gamma", f.rpp.gamma);
    kv("rpp_alpha", f.rpp.alpha);
    kv("rpp_epsilon", f.rpp.epsilon);
  }
  kv("loglik", f.loglik);
  out += "n_events " + std::to_string(f.n_events_used) + "\n";
  out += "parameters " + std::to_string(parameter_count(f.model)) + "\n";
  kv("aic", f.aic);
  out += "converged " + std::to_string(f.diagnostics.converged ? 1 : 0) + "\n";
  out += "restarts " + std::to_string(f.diagnostics.restarts_used) + "\n";
  out += "evaluations " + std::to_string(f.diagnostics.evaluations) + "\n";
  for (const auto& p : f.diagnostics.profile)
    out += "profile " + format_double(p.tc) + " " + format_double(p.loglik) + "\n";
  return out;
}

FitResult fit_from_string(const std::string& text, const std::string& origin) {
  Reader rd(text, origin);
  rd.expect_header("fit");
  FitResult f;
  bool have_model = false;
  std::string line;
  while (rd.next(line)) {
    const auto [key, value] = key_value(line);
    auto num = [&] { return rd.guard([&] { return parse_double(value); }); };
    auto integer = [&] { return rd.guard([&] { return parse_int(value); }); };
    if (key == "model") {
      f.model = rd.guard([&] { return parse_model_id(value); });
      have_model = true;
    } else if (key == "t_obs") f.t_obs = num();
    else if (key == "a1") f.params.a1 = num();
    else if (key == "tau1") f.params.tau1 = num();
    else if (key == "a2") f.params.a2 = num();
    else if (key == "tau2") f.params.tau2 = num();
    else if (key == "r") f.params.circadian.r = num();
    else if (key == "theta0") f.params.circadian.theta0 = num();
    else if (key == "period") f.params.circadian.period = num();
    else if (key == "tc") f.params.tc = num();
    else if (key == "kernel_c0") f.kernel.c0 = num();
    else if (key == "kernel_s0") f.kernel.s0 = num();
    else if (key == "kernel_gamma") f.kernel.gamma = num();
    else if (key == "rpp_c") f.rpp.c = num();
    else if (key == "rpp_gamma") f.rpp.gamma = num();
    else if (key == "rpp_alpha") f.rpp.alpha = num();
    else if (key == "rpp_epsilon") f.rpp.epsilon = num();
    else if (key == "loglik") f.loglik = num();
    else if (key == "n_events") f.n_events_used = static_cast<std::size_t>(integer());
    else if (key == "parameters") {
      if (have_model && integer() != parameter_count(f.model)) rd.error("parameter count does not match model");
    } else if (key == "aic") f.aic = num();
    else if (key == "converged") f.diagnostics.converged = integer() != 0;
    else if (key == "restarts") f.diagnostics.restarts_used = static_cast<int>(integer());
    else if (key == "evaluations") f.diagnostics.evaluations = static_cast<int>(integer());
    else if (key == "profile") {
      const auto tok = split_ws(value);
      if (tok.size() != 2) rd.error("expected 'profile <tc> <loglik>'");
      f.diagnostics.profile.push_back({rd.guard([&] { return parse_double(tok[0]); }),
                                       rd.guard([&] { return parse_double(tok[1]); })});
    } else rd.error("unknown key '" + key + "'");
  }
  if (!have_model) rd.error("missing 'model'");
  return f;
}

FitResult load_fit(const std::filesystem::path& path) { return fit_from_string(read_text(path), path.string()); }
void save_fit(const FitResult& fit, const std::filesystem::path& path) { write_text(path, fit_to_string(fit)); }

// ---------------------------------------------------------------- forecasts

std::string forecast_to_string(const ForecastSeries& s) {
  std::string out = header("forecast");
  out += "model " + sanitize(s.model_id) + "\n";
  out += "t_obs " + format_double(s.t_obs) + "\n";
  out += "bin_width " + format_double(s.bin_width) + "\n";
  out += "d_p " + format_double(s.d_p) + "\n";
  out += "bins " + std::to_string(s.bins.size()) + "\n";
  for (const auto& b : s.bins) out += format_double(b.t_end) + " " + format_double(b.cumulative) + "\n";
  return out;
}

ForecastSeries forecast_from_string(const std::string& text, const std::string& origin) {
  Reader rd(text, origin);
  rd.expect_header("forecast");
  ForecastSeries s;
  bool in_bins = false;
  std::size_t expected = 0;
  std::string line;
  while (rd.next(line)) {
    if (in_bins) {
      const auto tok = split_ws(line);
      if (tok.size() != 2) rd.error("expected '<bin end> <cumulative>'");
      s.bins.push_back({rd.guard([&] { return parse_double(tok[0]); }),
                        rd.guard([&] { return parse_double(tok[1]); })});
      continue;
    }
    const auto [key, value] = key_value(line);
    auto num = [&] { return rd.guard([&] { return parse_double(value); }); };
    if (key == "model") s.model_id = value;
    else if (key == "t_obs") s.t_obs = num();
    else if (key == "bin_width") s.bin_width = num();
    else if (key == "d_p") s.d_p = num();
    else if (key == "bins") {
      expected = static_cast<std::size_t>(rd.guard([&] { return parse_int(value); }));
      in_bins = true;
    } else rd.error("unknown key '" + key + "'");
  }
  if (!in_bins) rd.error("missing 'bins' section");
  if (s.bins.size() != expected) rd.error("bin count does not match the 'bins' line");
  return s;
}

ForecastSeries load_forecast(const std::filesystem::path& path) {
  return forecast_from_string(read_text(path), path.string());
}
void save_forecast(const ForecastSeries& s, const std::filesystem::path& path) {
  write_text(path, forecast_to_string(s));
}

// ---------------------------------------------------------------- reports

std::string report_to_string(const EvalReport& r) {
  std::string out = header("report");
  out += "split\t" + format_double(r.split) + "\n";
  out += "models";
  for (auto m : r.models) out += std::string("\t") + to_string(m);
  out += "\n";
  for (const auto& s : r.skipped) out += "skipped\t" + sanitize(s.cascade_id) + "\t" + sanitize(s.reason) + "\n";
  for (const auto& a : r.actual) {
    out += "actual\t" + sanitize(a.cascade_id) + "\t" + format_double(a.t_obs) + "\t" + format_double(a.bin_width) +
           "\t" + join_doubles(a.counts) + "\n";
  }
  for (const auto& w : r.rows) {
    out += "row\t" + sanitize(w.cascade_id) + "\t" + to_string(w.model) + "\t" + (w.ok ? "ok" : "failed") + "\t" +
           format_double(w.t_obs) + "\t" + format_double(w.t_max) + "\t" + format_double(w.mean_ae) + "\t" +
           format_double(w.median_ae) + "\t" + format_double(w.aic) + "\t" + format_double(w.loglik) + "\t" +
           (w.win_mean ? "1" : "0") + "\t" + (w.win_median ? "1" : "0") + "\t" + join_doubles(w.predicted) + "\t" +
           sanitize(w.message) + "\n";
  }
  for (const auto& a : r.aggregates) {
    out += std::string("aggregate\t") + to_string(a.model) + "\t" + std::to_string(a.n_ok) + "\t" +
           std::to_string(a.n_failed) + "\t" + format_double(a.mean_mean_ae) + "\t" + format_double(a.mean_median_ae) +
           "\t" + format_double(a.win_fraction_mean) + "\t" + format_double(a.win_fraction_median) + "\n";
  }
  for (const auto& v : r.recovery) {
    auto params = [](const TwoStageParams& p) {
      return join_doubles({p.a1, p.tau1, p.a2, p.tau2, p.circadian.r, p.circadian.theta0, p.tc});
    };
    out += "recovery\t" + sanitize(v.group) + "\t" + sanitize(v.cascade_id) + "\t" + format_double(v.t_obs) + "\t" +
           (v.ok ? "ok" : "failed") + "\t" + params(v.truth) + "\t" + params(v.estimate) + "\t" +
           format_double(v.loglik) + "\t" + format_double(v.intensity_l1) + "\t" + sanitize(v.message) + "\n";
  }
  return out;
}

EvalReport report_from_string(const std::string& text, const std::string& origin) {
  Reader rd(text, origin);
  rd.expect_header("report");
  EvalReport r;
  std::string line;
  auto num = [&](const std::string& s) { return rd.guard([&] { return parse_double(s); }); };
  auto nums = [&](const std::string& s) { return rd.guard([&] { return split_doubles(s); }); };
  auto flag = [&](const std::string& s) {
    if (s != "0" && s != "1") rd.error("expected 0 or 1");
    return s == "1";
  };
  auto status = [&](const std::string& s) {
    if (s != "ok" && s != "failed") rd.error("expected 'ok' or 'failed'");
    return s == "ok";
  };
  auto params = [&](const std::string& s) {
    const auto v = nums(s);
    if (v.size() != 7) rd.error("expected 7 comma-separated parameters");
    TwoStageParams p;
    p.a1 = v[0];
    p.tau1 = v[1];
    p.a2 = v[2];
    p.tau2 = v[3];
    p.circadian.r = v[4];
    p.circadian.theta0 = v[5];
    p.tc = v[6];
    return p;
  };
  while (rd.next(line)) {
    const auto f = split_tabs(line);
    const std::string& kind = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) rd.error("'" + kind + "' line needs " + std::to_string(n) + " tab-separated fields");
    };
    if (kind == "split") {
      need(2);
      r.split = num(f[1]);
    } else if (kind == "models") {
      for (std::size_t i = 1; i < f.size(); ++i) r.models.push_back(rd.guard([&] { return parse_model_id(f[i]); }));
    } else if (kind == "skipped") {
      need(3);
      r.skipped.push_back({f[1], f[2]});
    } else if (kind == "actual") {
      need(5);
      r.actual.push_back({f[1], num(f[2]), num(f[3]), nums(f[4])});
    } else if (kind == "row") {
      need(14);
      BenchmarkRow w;
      w.cascade_id = f[1];
      w.model = rd.guard([&] { return parse_model_id(f[2]); });
      w.ok = status(f[3]);
      w.t_obs = num(f[4]);
      w.t_max = num(f[5]);
      w.mean_ae = num(f[6]);
      w.median_ae = num(f[7]);
      w.aic = num(f[8]);
      w.loglik = num(f[9]);
      w.win_mean = flag(f[10]);
      w.win_median = flag(f[11]);
      w.predicted = nums(f[12]);
      w.message = f[13];
      r.rows.push_back(std::move(w));
    } else if (kind == "aggregate") {
      need(8);
      AggregateRow a;
      a.model = rd.guard([&] { return parse_model_id(f[1]); });
      a.n_ok = static_cast<std::size_t>(rd.guard([&] { return parse_int(f[2]); }));
      a.n_failed = static_cast<std::size_t>(rd.guard([&] { return parse_int(f[3]); }));
      a.mean_mean_ae = num(f[4]);
      a.mean_median_ae = num(f[5]);
      a.win_fraction_mean = num(f[6]);
      a.win_fraction_median = num(f[7]);
      r.aggregates.push_back(a);
    } else if (kind == "recovery") {
      need(10);
      RecoveryRow v;
      v.group = f[1];
      v.cascade_id = f[2];
      v.t_obs = num(f[3]);
      v.ok = status(f[4]);
      v.truth = params(f[5]);
      v.estimate = params(f[6]);
      v.loglik = num(f[7]);
      v.intensity_l1 = num(f[8]);
      v.message = f[9];
      r.recovery.push_back(std::move(v));
    } else {
      rd.error("unknown record '" + kind + "'");
    }
  }
  return r;
}

EvalReport load_report(const std::filesystem::path& path) { return report_from_string(read_text(path), path.string()); }
void save_report(const EvalReport& report, const std::filesystem::path& path) {
  write_text(path, report_to_string(report));
}

// ---------------------------------------------------------------- manifests

std::size_t Manifest::cascade_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.cascades.size();
  return n;
}

std::filesystem::path Manifest::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

std::string manifest_to_string(const Manifest& m) {
  std::string out = header("manifest");
  out += "synthetic " + std::to_string(m.synthetic ? 1 : 0) + "\n";
  out += "split " + format_double(m.split) + "\n";
  out += "t_obs_grid";
  for (double t : m.t_obs_grid) out += " " + format_double(t);
  out += "\n";
  out += "kernel " + format_double(m.kernel.c0) + " " + format_double(m.kernel.s0) + " " +
         format_double(m.kernel.gamma) + "\n";
  for (const auto& g : m.groups) {
    out += "group " + sanitize(g.name) + "\n";
    if (g.has_truth) {
      const auto& p = g.truth;
      out += "truth " + format_double(p.a1) + " " + format_double(p.tau1) + " " + format_double(p.a2) + " " +
             format_double(p.tau2) + " " + format_double(p.circadian.r) + " " + format_double(p.circadian.theta0) +
             " " + format_double(p.tc) + "\n";
    }
    for (const auto& c : g.cascades) out += "cascade " + c + "\n";
  }
  return out;
}

Manifest manifest_from_string(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin) {
  Reader rd(text, origin);
  rd.expect_header("manifest");
  Manifest m;
  m.base_dir = base_dir;
  std::string line;
  while (rd.next(line)) {
    const auto [key, value] = key_value(line);
    const auto tok = split_ws(value);
    auto num = [&](const std::string& s) { return rd.guard([&] { return parse_double(s); }); };
    if (key == "synthetic") {
      m.synthetic = value == "1";
      if (value != "0" && value != "1") rd.error("expected 'synthetic 0|1'");
    } else if (key == "split") {
      m.split = num(value);
      if (!(m.split > 0.0 && m.split < 1.0)) rd.error("split must lie in (0, 1)");
    } else if (key == "t_obs_grid") {
      for (const auto& t : tok) m.t_obs_grid.push_back(num(t));
    } else if (key == "kernel") {
      if (tok.size() != 3) rd.error("expected 'kernel <c0 per hour> <s0 hours> <gamma>'");
      m.kernel = {num(tok[0]), num(tok[1]), num(tok[2])};
    } else if (key == "group") {
      ManifestGroup g;
      g.name = value;
      m.groups.push_back(g);
    } else if (key == "truth") {
      if (m.groups.empty()) rd.error("'truth' before any 'group'");
      if (tok.size() != 7) rd.error("expected 'truth a1 tau1 a2 tau2 r theta0 tc'");
      auto& p = m.groups.back().truth;
      p.a1 = num(tok[0]);
      p.tau1 = num(tok[1]);
      p.a2 = num(tok[2]);
      p.tau2 = num(tok[3]);
      p.circadian.r = num(tok[4]);
      p.circadian.theta0 = num(tok[5]);
      p.tc = num(tok[6]);
      m.groups.back().has_truth = true;
    } else if (key == "cascade") {
      if (m.groups.empty()) m.groups.push_back({"default", false, {}, {}});
      if (value.empty()) rd.error("empty cascade path");
      m.groups.back().cascades.push_back(value);
    } else {
      rd.error("unknown key '" + key + "'");
    }
  }
  for (const auto& g : m.groups) {
    if (g.has_truth != m.synthetic)
      fail(ErrorKind::data, origin + ": group '" + g.name + "' must carry truth parameters iff the manifest is synthetic");
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m = manifest_from_string(read_text(path), path.parent_path(), path.string());
  for (const auto& g : m.groups) {
    for (const auto& c : g.cascades) {
      if (!std::filesystem::exists(m.resolve(c)))
        fail(ErrorKind::data, path.string() + ": referenced cascade file '" + m.resolve(c).string() + "' does not exist");
    }
  }
  return m;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_text(path, manifest_to_string(manifest));
}

}  // namespace twostage

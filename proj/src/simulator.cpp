#include "twostage/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "twostage/error.hpp"
#include "twostage/io.hpp"

namespace twostage {
namespace {

constexpr double kMaxWindow = 1.0;  // hours

struct MarkSampler {
  std::mt19937_64& rng;

  std::int64_t operator()(const ConstantMarks& m) const { return m.followers; }
  std::int64_t operator()(const EmpiricalMarks& m) const {
    std::uniform_int_distribution<std::size_t> pick(0, m.pool.size() - 1);
    return m.pool[pick(rng)];
  }
  std::int64_t operator()(const LogNormalMarks& m) const {
    std::lognormal_distribution<double> draw(m.mu, m.sigma);
    return std::llround(draw(rng));
  }
};

// Smallest circadian extremum of sin(2 pi (t + theta0)/P) strictly after t.
double next_extremum(double t, const CircadianParams& c) {
  const double half = c.period / 2.0;
  const double x = (t + c.theta0) / half - 0.5;
  double next = (std::floor(x) + 1.5) * half - c.theta0;
  if (next - t < 1e-9) next += half;
  return next;
}

// Upper bound of a {1 + r sin(...)} exp(-(s - onset)/tau) over [t, w], valid
// when the modulation is monotone on the window.
double rate_envelope(double t, double w, double a, double tau, double onset,
                     const CircadianParams& c) {
  const double mod = std::max(c.modulation(t), c.modulation(w));
  return a * std::max(mod, 0.0) * std::exp(-(t - onset) / tau);
}

}  // namespace

void validate(const SimConfig& cfg) {
  validate(cfg.kernel);
  require(cfg.params.a1 >= 0.0 && cfg.params.a2 >= 0.0, ErrorKind::domain,
          "simulate: amplitudes must be non-negative");
  require(cfg.params.tau1 > 0.0 && cfg.params.tau2 > 0.0 && cfg.params.tc > 0.0, ErrorKind::domain,
          "simulate: decay times and correction time must be positive");
  require(std::abs(cfg.params.circadian.r) <= 1.0, ErrorKind::domain, "simulate: |r| must be <= 1");
  require(cfg.t_end > 0.0, ErrorKind::precondition, "simulate: t_end must be positive");
  require(cfg.max_events > 0, ErrorKind::precondition, "simulate: max_events must be positive");
  require(cfg.seed_followers >= 0, ErrorKind::precondition, "simulate: seed followers must be >= 0");
  if (const auto* c = std::get_if<ConstantMarks>(&cfg.mark_model)) {
    require(c->followers >= 0, ErrorKind::precondition, "constant marks must be non-negative");
  } else if (const auto* e = std::get_if<EmpiricalMarks>(&cfg.mark_model)) {
    require(!e->pool.empty(), ErrorKind::precondition, "empirical mark pool is empty");
    require(std::all_of(e->pool.begin(), e->pool.end(), [](auto d) { return d >= 0; }),
            ErrorKind::precondition, "empirical mark pool has negative entries");
  } else if (const auto* l = std::get_if<LogNormalMarks>(&cfg.mark_model)) {
    require(l->sigma >= 0.0, ErrorKind::precondition, "lognormal sigma must be non-negative");
  }
}

Cascade simulate(const SimConfig& cfg, SimStats* stats) {
  validate(cfg);
  SimStats local;
  SimStats& st = stats ? *stats : local;
  st = {};

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const MarkSampler sample_mark{rng};

  const TwoStageParams& p = cfg.params;
  const CircadianParams& circ = p.circadian;
  const KernelParams& k = cfg.kernel;

  Cascade out;
  out.id = "synthetic-" + std::to_string(cfg.rng_seed);
  out.t_max = cfg.t_end;
  out.origin_followers = cfg.seed_followers;
  out.events.push_back({0.0, cfg.seed_followers});

  double t = 0.0;
  while (t < cfg.t_end) {
    // Memory just after t: every event at or before t contributes, and both
    // sums can only decrease until the next acceptance.
    double h1 = 0.0;
    double h2 = 0.0;
    for (const auto& e : out.events) {
      const double w = static_cast<double>(e.followers) * kernel_phi(t - e.time, k);
      if (e.time < p.tc) {
        h1 += w;
      } else if (e.time > p.tc) {
        h2 += w;
      }
    }
    if (h1 <= 0.0 && h2 <= 0.0) break;

    double w_end = std::min({t + kMaxWindow, cfg.t_end});
    if (circ.r != 0.0) w_end = std::min(w_end, next_extremum(t, circ));
    if (t < p.tc) w_end = std::min(w_end, p.tc);

    double bound = 0.0;
    if (h1 > 0.0) bound += rate_envelope(t, w_end, p.a1, p.tau1, 0.0, circ) * h1;
    if (h2 > 0.0 && t >= p.tc) bound += rate_envelope(t, w_end, p.a2, p.tau2, p.tc, circ) * h2;
    if (!(bound > 0.0)) {
      t = w_end;
      continue;
    }

    std::exponential_distribution<double> gap(bound);
    bool accepted = false;
    while (!accepted) {
      const double s = t + gap(rng);
      if (s > w_end) {
        t = w_end;
        break;
      }
      ++st.candidates;
      const double lambda = intensity_two_stage(s, std::span<const Event>(out.events), p, k);
      if (lambda > bound * (1.0 + 1e-12)) ++st.bound_violations;
      t = s;
      if (unit(rng) * bound <= lambda) {
        if (out.events.size() >= cfg.max_events) {
          std::ostringstream os;
          os << "simulation exceeded max_events=" << cfg.max_events << " at t=" << s
             << " h (supercritical configuration?)";
          fail(ErrorKind::runaway, os.str());
        }
        out.events.push_back({s, std::visit(sample_mark, cfg.mark_model)});
        ++st.accepted;
        accepted = true;
      }
    }
  }
  return out;
}

SimConfig run_config(const SimConfig& cfg, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  SimConfig out = cfg;
  out.rng_seed = (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
  return out;
}

namespace {

std::string indexed_name(const std::string& stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return stem + buf;
}

ManifestGroup simulate_group(const std::string& name, const TwoStageParams& truth, std::size_t n,
                             const SimConfig& cfg, std::uint64_t first_index,
                             const std::filesystem::path& out_dir) {
  ManifestGroup group;
  group.name = name;
  group.has_truth = true;
  group.truth = truth;
  SimConfig base = cfg;
  base.params = truth;
  for (std::size_t i = 0; i < n; ++i) {
    Cascade c = simulate(run_config(base, first_index + i));
    c.id = indexed_name(name + "-", i);
    c.info.source = "synthetic";
    const std::string rel = c.id + ".cascade";
    save_cascade(c, out_dir / rel);
    group.cascades.push_back(rel);
  }
  return group;
}

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

Manifest generate_recovery_suite(const TwoStageParams& truth, std::size_t n,
                                 const std::vector<double>& t_obs_grid, const SimConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  require(n >= 1, ErrorKind::precondition, "generate_recovery_suite: n must be >= 1");
  prepare_dir(out_dir);
  Manifest m;
  m.base_dir = out_dir;
  m.synthetic = true;
  m.t_obs_grid = t_obs_grid;
  m.kernel = cfg.kernel;
  m.groups.push_back(simulate_group("truth", truth, n, cfg, 0, out_dir));
  save_manifest(m, out_dir / "manifest.txt");
  return m;
}

Manifest generate_sweep_suite(const TwoStageParams& base, const std::vector<double>& a2_values,
                              std::size_t n, const std::vector<double>& t_obs_grid,
                              const SimConfig& cfg, const std::filesystem::path& out_dir) {
  require(n >= 1 && !a2_values.empty(), ErrorKind::precondition,
          "generate_sweep_suite: need n >= 1 and at least one a2 value");
  prepare_dir(out_dir);
  Manifest m;
  m.base_dir = out_dir;
  m.synthetic = true;
  m.t_obs_grid = t_obs_grid;
  m.kernel = cfg.kernel;
  for (std::size_t g = 0; g < a2_values.size(); ++g) {
    TwoStageParams truth = base;
    truth.a2 = a2_values[g];
    m.groups.push_back(simulate_group(indexed_name("a2-", g), truth, n, cfg, g * n, out_dir));
  }
  save_manifest(m, out_dir / "manifest.txt");
  return m;
}

}  // namespace twostage

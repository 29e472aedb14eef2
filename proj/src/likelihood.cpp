#include "twostage/likelihood.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "twostage/error.hpp"

namespace twostage {
namespace {

constexpr double kOmega = 2.0 * std::numbers::pi / kCircadianPeriod;
constexpr double kMaxPanel = 4.0;                 // hours
constexpr std::size_t kMaxPrefixEntries = 25'000'000;
constexpr int kMaxBisections = 40;
constexpr double kShortestDecay = 6.0;            // hours; test scale for the exponential factor

template <int N>
struct Rule {
  std::array<double, N> x{};
  std::array<double, N> w{};
  Rule() {
    const auto& a = boost::math::quadrature::gauss<double, N>::abscissa();
    const auto& wt = boost::math::quadrature::gauss<double, N>::weights();
    for (int i = 0; i < N / 2; ++i) {
      x[i] = -a[N / 2 - 1 - i];
      w[i] = wt[N / 2 - 1 - i];
      x[N - 1 - i] = a[N / 2 - 1 - i];
      w[N - 1 - i] = wt[N / 2 - 1 - i];
    }
  }
};

const Rule<2>& rule2() {
  static const Rule<2> r;
  return r;
}
const Rule<4>& rule4() {
  static const Rule<4> r;
  return r;
}
const Rule<8>& rule8() {
  static const Rule<8> r;
  return r;
}
const Rule<16>& rule16() {
  static const Rule<16> r;
  return r;
}

template <int N, class F>
double integrate(const Rule<N>& rule, F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += rule.w[i] * f(c + h * rule.x[i]);
  return s * h;
}

}  // namespace

StageVector to_vector(const TwoStageParams& p) {
  return {p.a1, p.tau1, p.a2, p.tau2, p.circadian.r, p.circadian.theta0};
}

TwoStageParams from_vector(const StageVector& v, double tc) {
  TwoStageParams p;
  p.a1 = v[0];
  p.tau1 = v[1];
  p.a2 = v[2];
  p.tau2 = v[3];
  p.circadian.r = v[4];
  p.circadian.theta0 = v[5];
  p.tc = tc;
  return p;
}

LikelihoodWorkspace::LikelihoodWorkspace(const Cascade& cascade, double t_obs,
                                         const KernelParams& kernel, double quad_tol)
    : t_obs_(t_obs), kernel_(kernel) {
  require(t_obs > 0.0, ErrorKind::precondition, "likelihood: t_obs must be positive");
  validate(kernel);
  for (const auto& e : cascade.events) {
    if (e.time > t_obs) break;
    times_.push_back(e.time);
    marks_.push_back(static_cast<double>(e.followers));
  }
  const std::size_t n = times_.size();
  sin_t_.resize(n);
  cos_t_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sin_t_[i] = std::sin(kOmega * times_[i]);
    cos_t_[i] = std::cos(kOmega * times_[i]);
    if (times_[i] > 0.0) {
      counted_.push_back(i);
      strictly_before_.push_back(
          static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), times_[i]) - times_.begin()));
    }
  }

  std::size_t entries = 0;
  for (auto b : strictly_before_) entries += b + 1;
  use_prefix_ = entries <= kMaxPrefixEntries;
  if (use_prefix_) {
    prefix_offset_.reserve(counted_.size());
    prefix_.reserve(entries);
    for (std::size_t j = 0; j < counted_.size(); ++j) {
      prefix_offset_.push_back(prefix_.size());
      const double tj = times_[counted_[j]];
      double acc = 0.0;
      prefix_.push_back(0.0);
      for (std::size_t i = 0; i < strictly_before_[j]; ++i) {
        acc += marks_[i] * kernel_phi(tj - times_[i], kernel_);
        prefix_.push_back(acc);
      }
    }
  }

  build_panels(quad_tol);
  set_cutoff(std::numeric_limits<double>::infinity());
}

void LikelihoodWorkspace::build_panels(double quad_tol) {
  std::vector<double> lengths;
  for (double t : times_)
    if (t < t_obs_) lengths.push_back(t_obs_ - t);
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  const double l_max = lengths.empty() ? 0.0 : lengths.back();

  std::vector<double> points{0.0};
  for (double u = kernel_.s0; u < l_max; u *= 2.0) points.push_back(u);
  {
    // Cap panel length so the exponential and circadian factors stay well resolved.
    std::vector<double> capped;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const int pieces = static_cast<int>(std::ceil((points[i + 1] - points[i]) / kMaxPanel));
      for (int k = 0; k < pieces; ++k) capped.push_back(points[i] + (points[i + 1] - points[i]) * k / pieces);
    }
    if (!points.empty()) {
      const double last = points.back();
      const int pieces = std::max(1, static_cast<int>(std::ceil((l_max - last) / kMaxPanel)));
      for (int k = 0; k < pieces; ++k) capped.push_back(last + (l_max - last) * k / pieces);
    }
    points.swap(capped);
  }
  points.insert(points.end(), lengths.begin(), lengths.end());
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  while (!points.empty() && points.back() > l_max) points.pop_back();

  const auto& k = kernel_;
  auto check = [&](double a, double b) {
    // phi and u * phi carry all the non-smoothness; the exponential and
    // circadian factors are entire and slowly varying on these panels.
    auto f0 = [&](double u) { return kernel_phi(u, k); };
    auto f1 = [&](double u) { return u * kernel_phi(u, k); };
    const double g0 = integrate(rule16(), f0, a, b);
    const double g1 = integrate(rule16(), f1, a, b);
    const double e0 = std::abs(g0 - integrate(rule8(), f0, a, b));
    const double e1 = std::abs(g1 - integrate(rule8(), f1, a, b));
    return e0 <= quad_tol * std::abs(g0) + 1e-300 && e1 <= quad_tol * std::abs(g1) + 1e-300;
  };

  // Fewest nodes whose rule reproduces the 16-point rule on phi times the
  // exponential and circadian factors; short panels far from u = 0 need 2.
  auto emit = [&](double a, double b) {
    auto f0 = [&](double u) { return kernel_phi(u, k) * std::exp(-u / kShortestDecay); };
    auto f1 = [&](double u) { return u * f0(u); };
    auto f2 = [&](double u) { return kernel_phi(u, k) * std::cos(kOmega * u); };
    auto f3 = [&](double u) { return kernel_phi(u, k) * std::sin(kOmega * u); };
    const double ref[4] = {integrate(rule16(), f0, a, b), integrate(rule16(), f1, a, b),
                           integrate(rule16(), f2, a, b), integrate(rule16(), f3, a, b)};
    const double scale = integrate(rule16(), [&](double u) { return kernel_phi(u, k); }, a, b) * std::max(1.0, b);
    auto push = [&](const auto& rule) {
      const double c = 0.5 * (a + b);
      const double h = 0.5 * (b - a);
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double u = c + h * rule.x[i];
        node_u_.push_back(u);
        node_wphi_.push_back(h * rule.w[i] * kernel_phi(u, k));
        node_sin_.push_back(std::sin(kOmega * u));
        node_cos_.push_back(std::cos(kOmega * u));
      }
    };
    auto good = [&](const auto& rule) {
      const double got[4] = {integrate(rule, f0, a, b), integrate(rule, f1, a, b), integrate(rule, f2, a, b),
                             integrate(rule, f3, a, b)};
      for (int q = 0; q < 4; ++q)
        if (std::abs(got[q] - ref[q]) > quad_tol * scale) return false;
      return true;
    };
    if (good(rule2())) {
      push(rule2());
    } else if (good(rule4())) {
      push(rule4());
    } else {
      push(rule8());
    }
  };

  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    // Depth-first bisection until the 8-point rule agrees with the 16-point one.
    std::vector<std::pair<double, int>> stack{{points[i + 1], 0}};
    double left = points[i];
    while (!stack.empty()) {
      auto [right, depth] = stack.back();
      if (check(left, right)) {
        emit(left, right);
        stack.pop_back();
        left = right;
        panel_ends_.push_back(node_u_.size());
        panel_right_.push_back(right);
      } else {
        if (depth >= kMaxBisections) {
          std::ostringstream os;
          os << "likelihood quadrature did not converge on panel [" << left << ", " << right << "]";
          fail(ErrorKind::numerical, os.str());
        }
        stack.back().second = depth + 1;
        stack.push_back({0.5 * (left + right), depth + 1});
      }
    }
  }

  // Slot 0 holds the empty integral (L = 0); slot p + 1 the integral up to panel p's right edge.
  breakpoint_of_.assign(times_.size(), 0);
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] < t_obs_)) continue;
    const double len = t_obs_ - times_[i];
    const auto it = std::lower_bound(panel_right_.begin(), panel_right_.end(), len);
    if (it == panel_right_.end() || *it != len) fail(ErrorKind::numerical, "likelihood: panel grid misses an event");
    breakpoint_of_[i] = static_cast<std::size_t>(it - panel_right_.begin()) + 1;
  }
}

double LikelihoodWorkspace::prefix(std::size_t row, std::size_t k) const {
  if (use_prefix_) return prefix_[prefix_offset_[row] + k];
  const double tj = times_[counted_[row]];
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += marks_[i] * kernel_phi(tj - times_[i], kernel_);
  return acc;
}

void LikelihoodWorkspace::set_cutoff(double tc) {
  cutoff_ = tc;
  const auto m1 = static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), tc) - times_.begin());
  const auto m2 = static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), tc) - times_.begin());
  stage_of_.resize(times_.size());
  for (std::size_t i = 0; i < times_.size(); ++i) stage_of_[i] = i < m1 ? 1 : (i >= m2 ? 2 : 0);

  h1_.assign(counted_.size(), 0.0);
  h2_.assign(counted_.size(), 0.0);
  for (std::size_t j = 0; j < counted_.size(); ++j) {
    const std::size_t b = strictly_before_[j];
    if (use_prefix_) {
      h1_[j] = prefix(j, std::min(b, m1));
      if (b > m2) h2_[j] = std::max(0.0, prefix(j, b) - prefix(j, m2));
    } else {
      const double tj = times_[counted_[j]];
      for (std::size_t i = 0; i < b; ++i) {
        const double w = marks_[i] * kernel_phi(tj - times_[i], kernel_);
        if (i < m1) {
          h1_[j] += w;
        } else if (i >= m2) {
          h2_[j] += w;
        }
      }
    }
  }
}

std::vector<LikelihoodWorkspace::Moments> LikelihoodWorkspace::sweep(double tau) const {
  std::vector<Moments> cum(panel_ends_.size() + 1);
  const double inv_tau = 1.0 / tau;
  Moments acc;
  std::size_t node = 0;
  for (std::size_t p = 0; p < panel_ends_.size(); ++p) {
    for (; node < panel_ends_[p]; ++node) {
      const double u = node_u_[node];
      const double w = node_wphi_[node] * std::exp(-u * inv_tau);
      const double ws = w * node_sin_[node];
      const double wc = w * node_cos_[node];
      acc.e0 += w;
      acc.es += ws;
      acc.ec += wc;
      acc.e0u += w * u;
      acc.esu += ws * u;
      acc.ecu += wc * u;
    }
    cum[p + 1] = acc;
  }
  return cum;
}

LikelihoodWorkspace::StageTerms LikelihoodWorkspace::stage_compensator(double a, double tau, double onset,
                                                                       double r, double theta0, bool second,
                                                                       bool want_grad) const {
  StageTerms out;
  const char tag = second ? 2 : 1;
  bool any = false;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (stage_of_[i] == tag && breakpoint_of_[i] != 0) {
      any = true;
      break;
    }
  }
  if (!any) return out;

  const auto mom = sweep(tau);
  const double s_theta = std::sin(kOmega * theta0);
  const double c_theta = std::cos(kOmega * theta0);
  const double inv_tau2 = 1.0 / (tau * tau);
  double sum_q = 0.0, sum_tau = 0.0, sum_r = 0.0, sum_theta = 0.0;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (stage_of_[i] != tag || breakpoint_of_[i] == 0) continue;
    const Moments& m = mom[breakpoint_of_[i]];
    const double f = marks_[i] * std::exp((onset - times_[i]) / tau);
    if (f == 0.0) continue;
    const double s_psi = sin_t_[i] * c_theta + cos_t_[i] * s_theta;
    const double c_psi = cos_t_[i] * c_theta - sin_t_[i] * s_theta;
    const double circ = c_psi * m.es + s_psi * m.ec;
    const double q = m.e0 + r * circ;
    sum_q += f * q;
    if (want_grad) {
      const double q_u = m.e0u + r * (c_psi * m.esu + s_psi * m.ecu);
      sum_tau += f * ((times_[i] - onset) * q + q_u) * inv_tau2;
      sum_r += f * circ;
      sum_theta += f * r * kOmega * (c_psi * m.ec - s_psi * m.es);
    }
  }
  out.value = a * sum_q;
  out.d_a = sum_q;
  out.d_tau = a * sum_tau;
  out.d_r = a * sum_r;
  out.d_theta = a * sum_theta;
  return out;
}

double LikelihoodWorkspace::compensator(const StageVector& th) const {
  const double second = std::isfinite(cutoff_)
                            ? stage_compensator(th[2], th[3], cutoff_, th[4], th[5], true, false).value
                            : 0.0;
  return stage_compensator(th[0], th[1], 0.0, th[4], th[5], false, false).value + second;
}

double LikelihoodWorkspace::evaluate(const StageVector& th, std::span<double> grad) const {
  const double a1 = th[0], tau1 = th[1], a2 = th[2], tau2 = th[3], r = th[4], theta0 = th[5];
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const double s_theta = std::sin(kOmega * theta0);
  const double c_theta = std::cos(kOmega * theta0);
  const double tc = cutoff_;

  double loglik = 0.0;
  for (std::size_t j = 0; j < counted_.size(); ++j) {
    const std::size_t i = counted_[j];
    const double t = times_[i];
    const double s_psi = sin_t_[i] * c_theta + cos_t_[i] * s_theta;
    const double c_psi = cos_t_[i] * c_theta - sin_t_[i] * s_theta;
    const double mod = 1.0 + r * s_psi;
    const double e1 = h1_[j] > 0.0 ? std::exp(-t / tau1) * h1_[j] : 0.0;
    const double e2 = h2_[j] > 0.0 ? std::exp(-(t - tc) / tau2) * h2_[j] : 0.0;
    const double base = a1 * e1 + a2 * e2;
    const double lambda = mod * base;
    if (!(lambda > 0.0) || !std::isfinite(lambda)) return -std::numeric_limits<double>::infinity();
    loglik += std::log(lambda);
    if (want_grad) {
      grad[0] += e1 / base;
      grad[1] += a1 * e1 * t / (tau1 * tau1) / base;
      grad[2] += e2 / base;
      grad[3] += a2 * e2 * (t - tc) / (tau2 * tau2) / base;
      grad[4] += s_psi / mod;
      grad[5] += r * kOmega * c_psi / mod;
    }
  }

  const StageTerms s1 = stage_compensator(a1, tau1, 0.0, r, theta0, false, want_grad);
  StageTerms s2;
  if (std::isfinite(tc)) s2 = stage_compensator(a2, tau2, tc, r, theta0, true, want_grad);
  loglik -= s1.value + s2.value;
  if (want_grad) {
    grad[0] -= s1.d_a;
    grad[1] -= s1.d_tau;
    grad[2] -= s2.d_a;
    grad[3] -= s2.d_tau;
    grad[4] -= s1.d_r + s2.d_r;
    grad[5] -= s1.d_theta + s2.d_theta;
  }
  return loglik;
}

double log_likelihood(const Cascade& cascade, const TwoStageParams& params, const KernelParams& kernel,
                      double t_obs) {
  LikelihoodWorkspace ws(cascade, t_obs, kernel);
  ws.set_cutoff(params.tc);
  return ws.evaluate(to_vector(params));
}

double log_likelihood_tideh(const Cascade& cascade, const TiDeHParams& params, const KernelParams& kernel,
                            double t_obs) {
  LikelihoodWorkspace ws(cascade, t_obs, kernel);
  StageVector th{params.a, params.tau, 0.0, params.tau, params.circadian.r, params.circadian.theta0};
  return ws.evaluate(th);
}

}  // namespace twostage

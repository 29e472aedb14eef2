#include "twostage/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "twostage/error.hpp"

namespace twostage {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::domain: return "domain";
    case ErrorKind::data: return "data";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::fit_failure: return "fit failure";
    case ErrorKind::runaway: return "runaway";
  }
  return "unknown";
}

std::size_t Cascade::count_until(double t) const {
  std::size_t n = 0;
  for (const auto& e : events) {
    if (e.time > t) break;
    if (e.time > 0.0) ++n;
  }
  return n;
}

void validate(const Cascade& cascade) {
  double prev = 0.0;
  for (std::size_t i = 0; i < cascade.events.size(); ++i) {
    const auto& e = cascade.events[i];
    if (!std::isfinite(e.time) || e.time < 0.0) {
      std::ostringstream os;
      os << "cascade '" << cascade.id << "': event " << i << " has invalid time " << e.time;
      fail(ErrorKind::data, os.str());
    }
    if (e.followers < 0) {
      std::ostringstream os;
      os << "cascade '" << cascade.id << "': event " << i << " has negative followers";
      fail(ErrorKind::data, os.str());
    }
    if (e.time < prev) {
      std::ostringstream os;
      os << "cascade '" << cascade.id << "': events not sorted at index " << i;
      fail(ErrorKind::data, os.str());
    }
    if (e.time > cascade.t_max) {
      std::ostringstream os;
      os << "cascade '" << cascade.id << "': event " << i << " at " << e.time
         << " h lies beyond t_max " << cascade.t_max;
      fail(ErrorKind::data, os.str());
    }
    prev = e.time;
  }
  require(cascade.origin_followers >= 0, ErrorKind::data, "origin_followers must be non-negative");
}

KernelParams KernelParams::from_seconds(double c0_per_second, double s0_seconds, double gamma) {
  return {c0_per_second * 3600.0, s0_seconds / 3600.0, gamma};
}

void validate(const KernelParams& k) {
  require(k.c0 > 0.0 && k.s0 > 0.0 && k.gamma > 0.0, ErrorKind::domain,
          "kernel parameters c0, s0 and gamma must be positive");
}

double CircadianParams::modulation(double t) const {
  return 1.0 + r * std::sin(2.0 * std::numbers::pi * (t + theta0) / period);
}

CircadianParams CircadianParams::normalized() const {
  CircadianParams c = *this;
  c.theta0 = std::fmod(theta0, period);
  if (c.theta0 < 0.0) c.theta0 += period;
  if (c.theta0 >= period) c.theta0 = 0.0;
  return c;
}

void validate(const TwoStageParams& p) {
  require(p.a1 > 0.0 && p.a2 >= 0.0, ErrorKind::domain, "require a1 > 0 and a2 >= 0");
  require(p.tau1 > 0.0 && p.tau2 > 0.0, ErrorKind::domain, "decay times must be positive");
  require(p.tc > 0.0, ErrorKind::domain, "correction time must be positive");
  require(std::abs(p.circadian.r) <= 1.0, ErrorKind::domain, "circadian amplitude |r| must be <= 1");
}

void validate(const TiDeHParams& p) {
  require(p.a > 0.0 && p.tau > 0.0, ErrorKind::domain, "require a > 0 and tau > 0");
  require(std::abs(p.circadian.r) <= 1.0, ErrorKind::domain, "circadian amplitude |r| must be <= 1");
}

double kernel_phi(double s, const KernelParams& k) {
  if (!(s >= 0.0)) fail(ErrorKind::domain, "kernel_phi: negative reaction time");
  if (s <= k.s0) return k.c0;
  return k.c0 * std::pow(s / k.s0, -(1.0 + k.gamma));
}

double infection_rate(double t, double a, double tau, double onset, const CircadianParams& c) {
  return a * c.modulation(t) * std::exp(-(t - onset) / tau);
}

double memory_h(double t, std::span<const Event> events, double cutoff, const KernelParams& k,
                Stage stage) {
  double h = 0.0;
  if (stage == Stage::first) {
    const double limit = std::min(t, cutoff);
    for (const auto& e : events) {
      if (!(e.time < limit)) break;
      h += static_cast<double>(e.followers) * kernel_phi(t - e.time, k);
    }
  } else {
    for (const auto& e : events) {
      if (!(e.time < t)) break;
      if (e.time > cutoff) h += static_cast<double>(e.followers) * kernel_phi(t - e.time, k);
    }
  }
  return h;
}

double memory_h(double t, const Cascade& cascade, double cutoff, const KernelParams& k, Stage stage) {
  return memory_h(t, std::span<const Event>(cascade.events), cutoff, k, stage);
}

double stage1_rate(double t, const TwoStageParams& p) {
  return infection_rate(t, p.a1, p.tau1, 0.0, p.circadian);
}

double stage2_rate(double t, const TwoStageParams& p) {
  return infection_rate(t, p.a2, p.tau2, p.tc, p.circadian);
}

double tideh_rate(double t, const TiDeHParams& p) {
  return infection_rate(t, p.a, p.tau, 0.0, p.circadian);
}

double intensity_two_stage(double t, std::span<const Event> events, const TwoStageParams& p,
                           const KernelParams& k) {
  double h1 = 0.0;
  double h2 = 0.0;
  for (const auto& e : events) {
    if (!(e.time < t)) break;
    const double w = static_cast<double>(e.followers) * kernel_phi(t - e.time, k);
    if (e.time < p.tc) {
      h1 += w;
    } else if (e.time > p.tc) {
      h2 += w;
    }
  }
  double lambda = 0.0;
  if (h1 > 0.0) lambda += stage1_rate(t, p) * h1;
  if (h2 > 0.0 && p.a2 > 0.0) lambda += stage2_rate(t, p) * h2;
  return lambda;
}

double intensity_two_stage(double t, const Cascade& cascade, const TwoStageParams& p,
                           const KernelParams& k) {
  return intensity_two_stage(t, std::span<const Event>(cascade.events), p, k);
}

double intensity_tideh(double t, std::span<const Event> events, const TiDeHParams& p,
                       const KernelParams& k) {
  const double h = memory_h(t, events, std::numeric_limits<double>::infinity(), k, Stage::first);
  return h > 0.0 ? tideh_rate(t, p) * h : 0.0;
}

double intensity_tideh(double t, const Cascade& cascade, const TiDeHParams& p, const KernelParams& k) {
  return intensity_tideh(t, std::span<const Event>(cascade.events), p, k);
}

TwoStageParams tideh_embedding(const TiDeHParams& p, double tc) {
  require(tc > 0.0, ErrorKind::domain, "tideh_embedding: tc must be positive");
  TwoStageParams out;
  out.a1 = p.a;
  out.tau1 = p.tau;
  out.a2 = p.a * std::exp(-tc / p.tau);
  out.tau2 = p.tau;
  out.circadian = p.circadian;
  out.tc = tc;
  return out;
}

TwoStageParams single_stage(const TiDeHParams& p, double horizon) {
  TwoStageParams out;
  out.a1 = p.a;
  out.tau1 = p.tau;
  out.a2 = 0.0;
  out.tau2 = p.tau;
  out.circadian = p.circadian;
  out.tc = std::nextafter(horizon, std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace twostage

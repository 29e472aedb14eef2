#pragma once

// Model types and pure evaluations of the reaction-time kernel, infection
// rates, memory functions and intensities. All times are in hours since the
// original post (t = 0).

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace twostage {

inline constexpr double kCircadianPeriod = 24.0;

struct Event {
  double time = 0.0;           // hours since the original post
  std::int64_t followers = 1;  // d_i

  friend bool operator==(const Event&, const Event&) = default;
};

/// Free-form descriptive metadata carried through cascade files.
struct CascadeInfo {
  std::string title;
  std::string origin_date;
  std::string source;

  friend bool operator==(const CascadeInfo&, const CascadeInfo&) = default;
};

/// An observed (or simulated) cascade. events[0] is normally the seed post at
/// t = 0 with origin_followers; events are sorted by time (ties allowed).
struct Cascade {
  std::string id;
  std::vector<Event> events;
  double t_max = 0.0;
  std::int64_t origin_followers = 1;
  CascadeInfo info;

  /// Number of reaction events (t > 0) with time <= t.
  std::size_t count_until(double t) const;

  friend bool operator==(const Cascade&, const Cascade&) = default;
};

/// Throws Error(data) if events are unsorted, outside [0, t_max], or carry
/// negative follower counts.
void validate(const Cascade& cascade);

/// Heavy-tailed reaction-time density: c0 on [0, s0], c0 (s/s0)^-(1+gamma) beyond.
struct KernelParams {
  double c0 = 6.94e-4 * 3600.0;  // per hour
  double s0 = 300.0 / 3600.0;    // hours
  double gamma = 0.242;

  /// Builds hour-based constants from per-second c0 and s0 in seconds.
  static KernelParams from_seconds(double c0_per_second, double s0_seconds, double gamma);
  static KernelParams defaults() { return {}; }

  /// Closed form of the integral of phi over [0, inf): c0 s0 (1 + 1/gamma).
  double integral() const { return c0 * s0 * (1.0 + 1.0 / gamma); }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

void validate(const KernelParams& k);

struct CircadianParams {
  double r = 0.0;       // relative amplitude, |r| <= 1
  double theta0 = 0.0;  // phase offset (hours), kept in [0, period)
  double period = kCircadianPeriod;

  /// Modulation factor 1 + r sin(2 pi (t + theta0) / period).
  double modulation(double t) const;
  CircadianParams normalized() const;

  friend bool operator==(const CircadianParams&, const CircadianParams&) = default;
};

struct TwoStageParams {
  double a1 = 0.0;
  double tau1 = 1.0;
  double a2 = 0.0;
  double tau2 = 1.0;
  CircadianParams circadian;
  double tc = 1.0;

  friend bool operator==(const TwoStageParams&, const TwoStageParams&) = default;
};

struct TiDeHParams {
  double a = 0.0;
  double tau = 1.0;
  CircadianParams circadian;

  friend bool operator==(const TiDeHParams&, const TiDeHParams&) = default;
};

void validate(const TwoStageParams& p);
void validate(const TiDeHParams& p);

/// Which memory sum to evaluate. `first` covers events before min(t, cutoff),
/// `second` covers events strictly between cutoff and t.
enum class Stage { first, second };

double kernel_phi(double s, const KernelParams& k);

/// a {1 + r sin(2 pi (t + theta0)/T_m)} exp(-(t - onset)/tau).
double infection_rate(double t, double a, double tau, double onset, const CircadianParams& c);

double memory_h(double t, std::span<const Event> events, double cutoff, const KernelParams& k,
                Stage stage);
double memory_h(double t, const Cascade& cascade, double cutoff, const KernelParams& k, Stage stage);

double stage1_rate(double t, const TwoStageParams& p);
double stage2_rate(double t, const TwoStageParams& p);
double tideh_rate(double t, const TiDeHParams& p);

double intensity_two_stage(double t, std::span<const Event> events, const TwoStageParams& p,
                           const KernelParams& k);
double intensity_two_stage(double t, const Cascade& cascade, const TwoStageParams& p,
                           const KernelParams& k);
double intensity_tideh(double t, std::span<const Event> events, const TiDeHParams& p,
                       const KernelParams& k);
double intensity_tideh(double t, const Cascade& cascade, const TiDeHParams& p, const KernelParams& k);

/// Two-stage parameters reproducing a TiDeH model exactly: tau1 = tau2 = tau,
/// a1 = a, a2 = a exp(-tc / tau) (continuity of the infection rate at tc).
TwoStageParams tideh_embedding(const TiDeHParams& p, double tc);

/// Two-stage parameters whose cutoff lies beyond `horizon`, so only stage 1 is active.
TwoStageParams single_stage(const TiDeHParams& p, double horizon);

}  // namespace twostage

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "twostage/dataset.hpp"
#include "twostage/model.hpp"

namespace twostage {

struct ConstantMarks {
  std::int64_t followers = 1;
};

/// Marks drawn uniformly (with replacement) from an observed follower pool.
struct EmpiricalMarks {
  std::vector<std::int64_t> pool;
};

/// Marks round(exp(N(mu, sigma^2))).
struct LogNormalMarks {
  double mu = 0.0;
  double sigma = 1.0;
};

using MarkModel = std::variant<ConstantMarks, EmpiricalMarks, LogNormalMarks>;

struct SimConfig {
  TwoStageParams params;
  KernelParams kernel;
  double t_end = 72.0;
  std::int64_t seed_followers = 1000;
  MarkModel mark_model = ConstantMarks{1};
  std::uint64_t rng_seed = 0;
  std::size_t max_events = 1'000'000;
};

void validate(const SimConfig& cfg);

/// Bookkeeping from one thinning run.
struct SimStats {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t bound_violations = 0;  // candidates where lambda(t) exceeded the envelope
};

/// Ogata thinning for the two-stage intensity. The returned cascade starts with
/// the seed event (0, seed_followers). Throws Error(runaway) past max_events.
Cascade simulate(const SimConfig& cfg, SimStats* stats = nullptr);

/// The run-`index` config of a batch: identical to `cfg` but with an RNG seed
/// derived from (cfg.rng_seed, index).
SimConfig run_config(const SimConfig& cfg, std::uint64_t index);

/// Simulates `n` cascades at `truth`, writes them under `out_dir` together with
/// `manifest.txt`, and returns the manifest. `cfg.params` is replaced by `truth`.
Manifest generate_recovery_suite(const TwoStageParams& truth, std::size_t n,
                                 const std::vector<double>& t_obs_grid, const SimConfig& cfg,
                                 const std::filesystem::path& out_dir);

/// One group per a2 value, `n` cascades each (the non-identifiability sweep).
Manifest generate_sweep_suite(const TwoStageParams& base, const std::vector<double>& a2_values,
                              std::size_t n, const std::vector<double>& t_obs_grid,
                              const SimConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace twostage

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "twostage/model.hpp"

namespace twostage {

/// One group of cascades sharing a truth parameter set (synthetic suites) or
/// a plain list of observed cascades (truth absent).
struct ManifestGroup {
  std::string name;
  bool has_truth = false;
  TwoStageParams truth;
  std::vector<std::string> cascades;  // paths relative to the manifest directory

  friend bool operator==(const ManifestGroup&, const ManifestGroup&) = default;
};

/// Dataset manifest: cascade files plus optional truth and protocol fields.
struct Manifest {
  std::filesystem::path base_dir;  // directory holding the manifest; not serialized
  bool synthetic = false;
  double split = 0.5;
  std::vector<double> t_obs_grid;
  KernelParams kernel;
  std::vector<ManifestGroup> groups;

  std::size_t cascade_count() const;
  std::filesystem::path resolve(const std::string& relative) const;
};

}  // namespace twostage

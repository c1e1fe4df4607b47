#pragma once

#include "poincare/common.hpp"
#include "poincare/dynamics.hpp"
#include "poincare/expression.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace poincare {

struct ExportOptions {
  double target_a = 1.0;
  double target_b = 2.0;
  long stride = 1;  // keep every stride-th row of each trajectory
};

struct ExportManifest {
  std::string data_path;
  std::string eval_path;  // empty when no third trajectory was given
  std::vector<std::string> columns;
  long rows_a = 0;
  long rows_b = 0;
  long rows_eval = 0;
  nlohmann::json to_json() const;
};

/// Writes a gauge-fixed regression table: one space-separated row per state,
/// the N state columns followed by the target (target_a for rows of `a`,
/// target_b for rows of `b`). An optional third trajectory goes, untargeted,
/// to the sibling file "<stem>_eval<ext>". A JSON manifest is written to
/// path + ".json".
ExportManifest export_gauge_fixed(const Trajectory& a, const Trajectory& b,
                                  const Trajectory* c, const std::string& path,
                                  const ExportOptions& options = {});

/// Reads an exported table back (state columns plus optional target).
Matrix read_gauge_fixed(const std::string& path);

struct CandidateStats {
  double mean = 0.0;
  double std = 0.0;
  long used = 0;
  long excluded = 0;  // rows where the formula was not finite
  double relative_spread() const;
  nlohmann::json to_json() const;
};

/// Mean and population standard deviation of a formula along a trajectory.
CandidateStats evaluate_candidate(const std::string& formula,
                                  const Trajectory& traj);
CandidateStats evaluate_candidate(const std::string& formula,
                                  const SystemSpec& sys,
                                  const PointCloud& points);

}  // namespace poincare

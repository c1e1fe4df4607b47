#include "poincare/export.hpp"

#include "poincare/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace poincare {

namespace {

std::string eval_sibling(const std::string& path) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() /
                              (p.stem().string() + "_eval" + p.extension().string());
  return out.string();
}

void write_rows(std::ofstream& out, const PointCloud& points, long stride,
                const double* target, long& count) {
  char buf[32];
  for (long i = 0; i < points.rows(); i += stride) {
    for (long j = 0; j < points.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), points(i, j),
                                     std::chars_format::general, 17);
      if (j) out << ' ';
      out.write(buf, res.ptr - buf);
    }
    if (target) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), *target,
                                     std::chars_format::general, 17);
      out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
    ++count;
  }
}

bool same_system(const SystemSpec& x, const SystemSpec& y) {
  return x.kind == y.kind && x.params == y.params;
}

}  // namespace

nlohmann::json ExportManifest::to_json() const {
  nlohmann::json j;
  j["data_path"] = data_path;
  j["eval_path"] = eval_path;
  j["columns"] = columns;
  j["rows_a"] = rows_a;
  j["rows_b"] = rows_b;
  j["rows_eval"] = rows_eval;
  j["delimiter"] = "space";
  j["target_column"] = columns.empty() ? "" : columns.back();
  return j;
}

ExportManifest export_gauge_fixed(const Trajectory& a, const Trajectory& b,
                                  const Trajectory* c, const std::string& path,
                                  const ExportOptions& options) {
  if (!same_system(a.system, b.system) || (c && !same_system(a.system, c->system))) {
    throw ConfigError("export: trajectories come from different systems");
  }
  if (options.stride < 1) throw ConfigError("export: stride must be >= 1");
  if (options.target_a == options.target_b) {
    throw ConfigError("export: targets are not distinguishable");
  }
  if (a.points.rows() == b.points.rows() && a.points == b.points) {
    throw ConfigError("export: trajectories A and B are identical; targets not distinguishable");
  }

  ExportManifest manifest;
  manifest.data_path = path;
  const auto symbols = state_symbols(a.system);
  manifest.columns.resize(static_cast<std::size_t>(a.dimension()));
  for (const auto& [name, slot] : symbols) {
    if (slot < a.dimension() && name.rfind("s[", 0) != 0) {
      manifest.columns[static_cast<std::size_t>(slot)] = name;
    }
  }
  manifest.columns.push_back("target");

  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_rows(out, a.points, options.stride, &options.target_a, manifest.rows_a);
  write_rows(out, b.points, options.stride, &options.target_b, manifest.rows_b);
  if (!out) throw Error("write failed for '" + path + "'");

  if (c) {
    manifest.eval_path = eval_sibling(path);
    std::ofstream eval(manifest.eval_path);
    if (!eval) throw Error("cannot open '" + manifest.eval_path + "' for writing");
    write_rows(eval, c->points, options.stride, nullptr, manifest.rows_eval);
    if (!eval) throw Error("write failed for '" + manifest.eval_path + "'");
  }

  nlohmann::json meta = manifest.to_json();
  meta["system"] = std::string(to_string(a.system.kind));
  meta["params"] = a.system.params;
  meta["targets"] = {options.target_a, options.target_b};
  meta["stride"] = options.stride;
  write_json_file(meta, path + ".json");
  return manifest;
}

Matrix read_gauge_fixed(const std::string& path) {
  return read_csv(path).values;
}

double CandidateStats::relative_spread() const {
  return mean != 0.0 ? std / std::abs(mean) : std::numeric_limits<double>::infinity();
}

nlohmann::json CandidateStats::to_json() const {
  nlohmann::json j;
  j["mean"] = mean;
  j["std"] = std;
  j["relative_spread"] = relative_spread();
  j["used"] = used;
  j["excluded"] = excluded;
  return j;
}

CandidateStats evaluate_candidate(const std::string& formula,
                                  const SystemSpec& sys,
                                  const PointCloud& points) {
  if (points.cols() != sys.dimension()) {
    throw DimensionError("evaluate_candidate: point dimension does not match system");
  }
  Expression expr(formula);
  expr.bind(state_symbols(sys));
  Vector values = symbol_values(sys, Vector::Zero(sys.dimension()));

  // Welford accumulation; long trajectories make naive sums lose digits.
  CandidateStats stats;
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < points.rows(); ++i) {
    values.head(sys.dimension()) = points.row(i).transpose();
    const double v = expr.evaluate(values);
    if (!std::isfinite(v)) {
      ++stats.excluded;
      continue;
    }
    ++stats.used;
    const double delta = v - mean;
    mean += delta / static_cast<double>(stats.used);
    m2 += delta * (v - mean);
  }
  if (stats.used == 0) {
    throw ExpressionError("evaluate_candidate: formula undefined on every row");
  }
  stats.mean = mean;
  stats.std = std::sqrt(m2 / static_cast<double>(stats.used));
  return stats;
}

CandidateStats evaluate_candidate(const std::string& formula,
                                  const Trajectory& traj) {
  return evaluate_candidate(formula, traj.system, traj.points);
}

}  // namespace poincare

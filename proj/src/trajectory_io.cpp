#include "poincare/dynamics.hpp"
#include "poincare/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace poincare {

using nlohmann::json;

void write_trajectory(const Trajectory& traj, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot open '" + csv_path + "' for writing");
  out << "t";
  for (int j = 0; j < traj.dimension(); ++j) out << ",x" << j;
  out << '\n';
  out.precision(17);
  for (long i = 0; i < traj.size(); ++i) {
    out << traj.times[i];
    for (int j = 0; j < traj.dimension(); ++j) out << ',' << traj.points(i, j);
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + csv_path + "'");

  json meta;
  meta["system"] = std::string(to_string(traj.system.kind));
  meta["params"] = traj.system.params;
  meta["x0"] = to_json_vector(traj.x0);
  meta["dt"] = traj.dt;
  meta["stride"] = traj.stride;
  meta["n_steps"] = (traj.size() - 1) * traj.stride;
  meta["seed"] = traj.seed;
  write_json_file(meta, csv_path + ".json");
}

Trajectory read_trajectory(const std::string& csv_path) {
  const json meta = read_json_file(csv_path + ".json");
  Trajectory traj;
  traj.system.kind =
      system_kind_from_string(meta.at("system").get<std::string>());
  traj.system.params =
      meta.value("params", std::map<std::string, double>{});
  traj.system.validate();
  traj.dt = meta.at("dt").get<double>();
  traj.stride = meta.value("stride", 1L);
  traj.seed = meta.value("seed", std::uint64_t{0});
  traj.x0 = from_json_vector(meta.at("x0"));

  const CsvTable table = read_csv(csv_path);
  if (table.header.empty() || table.header.front() != "t") {
    throw Error("'" + csv_path + "': expected header starting with 't'");
  }
  const long n = table.values.rows();
  const long dim = table.values.cols() - 1;
  if (dim != traj.system.dimension()) {
    throw DimensionError("'" + csv_path + "': column count does not match " +
                         std::string(to_string(traj.system.kind)));
  }
  traj.points = table.values.rightCols(dim);
  traj.times.resize(n);
  for (long i = 0; i < n; ++i) traj.times[i] = table.values(i, 0);
  return traj;
}

PointCloud read_points_csv(const std::string& path, bool skip_time_column) {
  const CsvTable table = read_csv(path);
  if (skip_time_column) {
    return table.values.rightCols(table.values.cols() - 1);
  }
  return table.values;
}

}  // namespace poincare

#include "nbody/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nbody {

namespace {

MassSystem system_from_json(const json& j) {
  if (!j.contains("dim") || !j.contains("masses"))
    throw ValidationError("configuration JSON needs \"dim\" and \"masses\"");
  std::vector<double> masses = j.at("masses").get<std::vector<double>>();
  return MassSystem(masses, j.at("dim").get<int>());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Vec vec_from_nested(const json& rows, const MassSystem& sys,
                    const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != sys.n_bodies())
    throw ValidationError(std::string(what) + ": expected one row per body");
  Vec v(sys.dof());
  for (int i = 0; i < sys.n_bodies(); ++i) {
    auto row = rows.at(i).get<std::vector<double>>();
    if (static_cast<int>(row.size()) != sys.dim())
      throw ValidationError(std::string(what) + ": row " + std::to_string(i) +
                            " has wrong dimension");
    for (int c = 0; c < sys.dim(); ++c) v[i * sys.dim() + c] = row[c];
  }
  return v;
}

json vec_to_nested(const MassSystem& sys, const Vec& v) {
  json rows = json::array();
  for (int i = 0; i < sys.n_bodies(); ++i) {
    json row = json::array();
    for (int c = 0; c < sys.dim(); ++c) row.push_back(v[i * sys.dim() + c]);
    rows.push_back(row);
  }
  return rows;
}

ConfigurationFile read_configuration_json(const json& j) {
  MassSystem sys = system_from_json(j);
  Vec pos = vec_from_nested(j.at("positions"), sys, "positions");
  return {sys, pos};
}

json write_configuration_json(const MassSystem& sys, const Vec& positions) {
  json j;
  j["dim"] = sys.dim();
  j["masses"] = sys.masses();
  j["positions"] = vec_to_nested(sys, positions);
  return j;
}

StateFile read_state_json(const json& j) {
  MassSystem sys = system_from_json(j);
  Vec pos = vec_from_nested(j.at("positions"), sys, "positions");
  Vec vel = vec_from_nested(j.at("velocities"), sys, "velocities");
  return {sys, pos, vel};
}

json central_configuration_to_json(const MassSystem& sys, double alpha,
                                   const CentralConfiguration& cc) {
  json j;
  j["dim"] = sys.dim();
  j["masses"] = sys.masses();
  j["alpha"] = alpha;
  j["b_m"] = vec_to_nested(sys, cc.b_m);
  j["u_min"] = cc.u_min;
  j["beta"] = cc.beta;
  j["gradient_residual"] = cc.gradient_residual;
  j["converged"] = cc.converged;
  return j;
}

CentralConfiguration central_configuration_from_json(const MassSystem& sys,
                                                     const json& j) {
  CentralConfiguration cc;
  cc.b_m = vec_from_nested(j.at("b_m"), sys, "b_m");
  cc.u_min = j.at("u_min").get<double>();
  cc.beta = j.at("beta").get<double>();
  cc.gradient_residual = j.value("gradient_residual", 0.0);
  cc.converged = j.value("converged", true);
  return cc;
}

void write_trajectory_csv(const std::string& path, const MassSystem& sys,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t";
  for (int i = 1; i <= sys.n_bodies(); ++i)
    for (int c = 1; c <= sys.dim(); ++c) out << ",x_" << i << "_" << c;
  for (int i = 1; i <= sys.n_bodies(); ++i)
    for (int c = 1; c <= sys.dim(); ++c) out << ",v_" << i << "_" << c;
  out << "\n";
  for (int k = 0; k < traj.n_samples(); ++k) {
    out << format_double(traj.times[k]);
    for (int c = 0; c < sys.dof(); ++c)
      out << "," << format_double(traj.positions(k, c));
    for (int c = 0; c < sys.dof(); ++c)
      out << "," << format_double(traj.velocities(k, c));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::string& path,
                               const MassSystem& sys) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty trajectory file");
  Trajectory traj;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != 1 + 2 * sys.dof())
      throw ValidationError(path + ": wrong column count");
    rows.push_back(std::move(row));
  }
  int n = static_cast<int>(rows.size());
  traj.times.resize(n);
  traj.positions = Mat(n, sys.dof());
  traj.velocities = Mat(n, sys.dof());
  for (int k = 0; k < n; ++k) {
    traj.times[k] = rows[k][0];
    for (int c = 0; c < sys.dof(); ++c) {
      traj.positions(k, c) = rows[k][1 + c];
      traj.velocities(k, c) = rows[k][1 + sys.dof() + c];
    }
  }
  return traj;
}

json trajectory_meta_to_json(const PotentialModel& model,
                             const Trajectory& traj,
                             const ReferencePath* path) {
  json j;
  j["alpha"] = model.alpha;
  j["dim"] = model.system.dim();
  j["masses"] = model.system.masses();
  j["provenance"] = provenance_name(traj.provenance);
  j["energy"] = traj.energy;
  if (path) {
    j["regime"] = regime_name(path->regime);
    j["a"] = vec_to_nested(model.system, path->a);
    j["parabolic_vector"] = vec_to_nested(model.system, path->parab);
    if (path->partition) {
      json classes = json::array();
      for (const auto& cls : path->partition->classes) classes.push_back(cls);
      j["clusters"] = classes;
    }
  }
  return j;
}

json power_law_fit_to_json(const PowerLawFit& fit, double bound, bool pass) {
  json j;
  j["exponent"] = fit.exponent;
  j["coefficient"] = fit.coefficient;
  j["r2"] = fit.r_squared;
  j["window"] = {fit.window_lo, fit.window_hi};
  j["bound"] = bound;
  j["pass"] = pass;
  return j;
}

std::string config_hash_hex(const json& config) {
  std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json run_manifest(const std::string& command, const json& config,
                  std::uint64_t seed, double wall_time_s) {
  json j;
  j["command"] = command;
  j["config_hash"] = config_hash_hex(config);
  j["seed"] = seed;
  j["tool_version"] = kToolVersion;
  j["wall_time_s"] = wall_time_s;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

}  // namespace nbody

#pragma once

#include "nbody/asymptotics.hpp"
#include "nbody/central_config.hpp"
#include "nbody/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace nbody {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

/// {"dim": d, "masses": [...], "positions": [[...], ...]}
struct ConfigurationFile {
  MassSystem system;
  Vec positions;
};

ConfigurationFile read_configuration_json(const json& j);
json write_configuration_json(const MassSystem& sys, const Vec& positions);

/// {"dim", "masses", "positions", "velocities"}
struct StateFile {
  MassSystem system;
  Vec positions;
  Vec velocities;
};
StateFile read_state_json(const json& j);

json central_configuration_to_json(const MassSystem& sys, double alpha,
                                   const CentralConfiguration& cc);
CentralConfiguration central_configuration_from_json(const MassSystem& sys,
                                                     const json& j);

/// CSV columns: t, x_1_1..x_N_d, v_1_1..v_N_d, one row per sample, full
/// double precision.
void write_trajectory_csv(const std::string& path, const MassSystem& sys,
                          const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path, const MassSystem& sys);

/// Sidecar metadata for a trajectory (regime, alpha, reference-path data);
/// lets `verify` rebuild the expansion spec without re-deriving anything.
json trajectory_meta_to_json(const PotentialModel& model,
                             const Trajectory& traj,
                             const ReferencePath* path);

json power_law_fit_to_json(const PowerLawFit& fit, double bound, bool pass);

/// FNV-1a over the canonical dump of the resolved configuration.
std::string config_hash_hex(const json& config);

/// Written alongside every output artifact.
json run_manifest(const std::string& command, const json& config,
                  std::uint64_t seed, double wall_time_s);

json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

Vec vec_from_nested(const json& rows, const MassSystem& sys,
                    const char* what);
json vec_to_nested(const MassSystem& sys, const Vec& v);

}  // namespace nbody

#pragma once

#include "nbody/potential.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nbody {

/// Normalized central configuration: a critical point of U on the inertia
/// ellipsoid ||x||_M = 1 found by descent, so in practice a local minimum.
/// "Minimal" is best-found semantics across the multi-start sweep; global
/// optimality is not certified.
struct CentralConfiguration {
  Vec b_m;                   // ||b_m||_M = 1, zero barycenter
  double u_min = 0.0;        // U(b_m)
  double beta = 0.0;         // homothetic coefficient, see beta_coefficient
  bool converged = false;
  double gradient_residual = 0.0;  // ||grad U + alpha U M b||_{M^-1}
};

struct CentralConfigOptions {
  std::uint64_t seed = 0;
  int starts = 16;
  double tol = 1e-11;        // criticality residual target
  int max_iters = 4000;      // projected-descent iterations per start
  int newton_iters = 50;
  double min_start_separation = 5e-2;
};

/// Non-convergence diagnostic carrying the best iterate found.
class CentralConfigConvergenceError : public ConvergenceError {
 public:
  CentralConfigConvergenceError(const std::string& msg,
                                CentralConfiguration best_iterate)
      : ConvergenceError(msg, best_iterate.gradient_residual),
        best(std::move(best_iterate)) {}
  CentralConfiguration best;
};

/// Projected gradient descent on the ellipsoid with Armijo backtracking,
/// multi-start, then a Newton polish on the Lagrange system
/// grad U(b) + lambda M b = 0, ||b||_M = 1. The returned configuration has a
/// canonical orientation (body 0 on the positive first axis, body 1 in the
/// upper half of the first coordinate plane) so repeated runs emit identical
/// output; the orientation is a convention, nothing more.
CentralConfiguration find_central_configuration(
    const PotentialModel& model, const CentralConfigOptions& opts = {});

/// beta = ((2+alpha)^2/2 * u_min)^{1/(2+alpha)}; with this coefficient
/// r0(t) = beta b_m t^{2/(2+alpha)} solves Newton's equations exactly.
double beta_coefficient(double u_min, double alpha);

/// Partition of bodies by (approximately) equal velocity vectors.
struct ClusterPartition {
  std::vector<std::vector<int>> classes;       // index sets, each sorted
  std::vector<Vec> representative_velocities;  // one d-vector per class
  std::vector<double> cluster_masses;          // M_K

  bool has_nontrivial_class() const {
    for (const auto& c : classes)
      if (c.size() >= 2) return true;
    return false;
  }
};

/// Groups i ~ j when |a_i - a_j| <= eps (transitive closure). eps < 0 selects
/// the default 1e-8 * max_i |a_i|.
ClusterPartition cluster_partition(const MassSystem& sys, const Vec& a,
                                   double eps_cluster = -1.0);

/// Per-class piece of a clustered central configuration. Singleton classes
/// carry no configuration and beta = 0.
struct ClusterBlock {
  std::vector<int> bodies;
  std::optional<CentralConfiguration> cc;  // in the sub-system's coordinates
  double beta = 0.0;
};

/// Runs find_central_configuration on every class with >= 2 bodies, using the
/// class masses and the internal potential of the class.
std::vector<ClusterBlock> clustered_central_configuration(
    const PotentialModel& model, const ClusterPartition& partition,
    const CentralConfigOptions& opts = {});

/// Full-system vector with beta^K b^K_i at the bodies of each class K and
/// zeros at singletons; this is the coefficient of t^{2/(2+alpha)} in the
/// hyperbolic-parabolic reference path.
Vec assemble_parabolic_vector(const MassSystem& sys,
                              const ClusterPartition& partition,
                              const std::vector<ClusterBlock>& blocks);

}  // namespace nbody

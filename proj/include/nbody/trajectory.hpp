#pragma once

#include "nbody/action.hpp"

#include <optional>

namespace nbody {

enum class Provenance { Minimized, Integrated, Reference };

const char* provenance_name(Provenance p);

/// Sampled curve (t, gamma(t), gamma'(t)). `energy` is
/// 1/2 ||v||_M^2 - U(gamma) at the final sample.
struct Trajectory {
  std::vector<double> times;
  Mat positions;   // n x dof
  Mat velocities;  // n x dof
  double alpha = 0.0;
  Provenance provenance = Provenance::Integrated;
  double energy = 0.0;

  int n_samples() const { return static_cast<int>(times.size()); }
};

struct MinimizeOptions {
  double opt_tol = 1e-8;  // infinity norm of the discrete gradient
  int max_iters = 600;
  int memory = 12;  // L-BFGS history
};

struct SynthesisReport {
  Trajectory trajectory;
  PerturbationGrid phi;
  ReferencePath path;
  double final_action = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  double el_residual = 0.0;
  bool hit_collision_guard = false;
  bool converged = false;
};

/// Persistent line-search failure against the collision guard. Carries the
/// last safe iterate.
class CollisionGuardError : public std::runtime_error {
 public:
  CollisionGuardError(const std::string& msg, SynthesisReport last_safe)
      : std::runtime_error(msg), last_safe(std::move(last_safe)) {}
  SynthesisReport last_safe;
};

/// L-BFGS descent on the discrete action, preconditioned with the inverse of
/// the kinetic stiffness stencil (one tridiagonal solve per coordinate), with
/// Armijo backtracking. Steps whose curves come within guard_factor times the
/// collision threshold are rejected by the line search; no barrier term is
/// added, so the minimized functional is exactly the discrete action.
/// Accepted iterates have monotonically non-increasing action.
SynthesisReport minimize_action(const ActionProblem& problem,
                                const PerturbationGrid& init,
                                const MinimizeOptions& opts = {});

struct GridSpec {
  double horizon = 1e4;
  int nodes = 2000;
  MeshKind kind = MeshKind::Geometric;
};

struct SynthesisRequest {
  Regime regime = Regime::Hyperbolic;
  Vec x0;
  std::optional<Vec> a;                      // hyperbolic / HP
  std::optional<CentralConfiguration> cc;    // parabolic; computed if absent
  GridSpec grid;
  MinimizeOptions opt;
  TailMode tail = TailMode::Truncate;
  CentralConfigOptions cc_opts;              // for computed central configs
};

/// Builds the reference path for the requested regime, minimizes the
/// (renormalized) action from phi = 0, and reconstructs
/// gamma = r0 + phi + x - r0(1) on the grid.
SynthesisReport synthesize_trajectory(const PotentialModel& model,
                                      const SynthesisRequest& request);

/// Adaptive Dormand-Prince 5(4) with dense output. Samples are evaluated from
/// the 4th-order interpolant at the requested times (ascending, inside
/// [t0, t1]). Step-size underflow near a collision raises
/// CollisionApproachError with the estimated blow-up time.
Trajectory integrate_newton(const PotentialModel& model, const Vec& x0,
                            const Vec& v0, double t0, double t1, double rtol,
                            std::vector<double> sample_times,
                            double atol = 1e-12);

/// Analytic samples of a reference path.
Trajectory reference_trajectory(const PotentialModel& model,
                                const ReferencePath& path,
                                std::vector<double> times);

/// max over interior samples of ||M gamma'' - grad U(gamma)||_{M^-1}
/// normalized by ||grad U(gamma)||_{M^-1}; gamma'' from 5-point finite
/// differences of the stored velocities (independent of any force evaluation
/// along the way).
double euler_lagrange_residual(const PotentialModel& model,
                               const Trajectory& traj);

double total_energy(const PotentialModel& model, const Vec& x, const Vec& v);

/// Finite-difference weights on arbitrary nodes (Fornberg). Returns the
/// weights for the m-th derivative at z over the given nodes.
std::vector<double> fd_weights(double z, const std::vector<double>& nodes,
                               int m);

}  // namespace nbody

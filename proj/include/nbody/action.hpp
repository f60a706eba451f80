#pragma once

#include "nbody/reference_path.hpp"

#include <optional>

namespace nbody {

enum class MeshKind { Geometric, Uniform };
enum class TailMode { Truncate, AnalyticTail };

/// Nodal values of a perturbation phi on a mesh 1 = t_0 < ... < t_M = T,
/// modelling D_0^{1,2}(1, +infty) with piecewise-linear elements. Row i of
/// `values` is phi(t_i); row 0 is pinned to zero.
struct PerturbationGrid {
  std::vector<double> nodes;
  Mat values;  // (M+1) x dof
  MeshKind kind = MeshKind::Geometric;

  int segments() const { return static_cast<int>(nodes.size()) - 1; }
  double horizon() const { return nodes.back(); }
};

/// Geometric mesh t_i = T^{i/M}. Integrands here decay polynomially, so
/// geometric spacing equidistributes the log-scale quadrature error.
PerturbationGrid make_perturbation_grid(double T, int M, int dof,
                                        MeshKind kind = MeshKind::Geometric);

void validate_grid(const MassSystem& sys, const PerturbationGrid& grid);

/// Discrete D-norm^2 = sum over segments of ||slope||_M^2 * h (exact for the
/// piecewise-linear interpolant).
double dnorm_sq(const MassSystem& sys, const PerturbationGrid& grid);

/// The variational problem: minimize over phi the discretized functional
///
///   A(phi) = int_1^T  1/2 ||phi'||_M^2 + U(r0 + phi + x - r0(1))
///            - [renormalized] U(r0)  -  <M r0'', phi>   dt  (+ tail)
///
/// Kinetic part exact per segment, potential part by the trapezoid rule.
/// renormalized = false is valid only for hyperbolic problems with alpha > 1,
/// where the plain Lagrangian action is already finite.
struct ActionProblem {
  PotentialModel model;
  ReferencePath path;
  Vec x0;
  bool renormalized = true;
  double horizon = 1e4;
  TailMode tail_mode = TailMode::Truncate;
  double guard_factor = 10.0;  // line-search rejection at guard_factor * eps

  Vec x_shift() const;  // x0 - r0(1)
};

ActionProblem make_action_problem(const PotentialModel& model,
                                  const ReferencePath& path, const Vec& x0,
                                  double horizon,
                                  TailMode tail = TailMode::Truncate,
                                  std::optional<bool> renormalized = {});

double renormalized_action(const ActionProblem& problem,
                           const PerturbationGrid& phi);

/// Cluster-decomposed evaluation for hyperbolic-parabolic problems: the
/// renormalizer of an intra-cluster pair is its own parabolic leading term
/// |B_ij|^{-alpha} t^{-2 alpha/(2+alpha)}, that of an inter-cluster pair is
/// |a_ij t|^{-alpha}. Differs from renormalized_action by a constant that
/// does not depend on phi.
double clustered_action(const ActionProblem& problem,
                        const PerturbationGrid& phi);

/// Exact gradient of the discrete functional with respect to the nodal values
/// at nodes 1..M (node 0 is pinned). Row j-1 belongs to node j.
Mat action_gradient(const ActionProblem& problem, const PerturbationGrid& phi);

/// Value + feasibility margin in one pass: min over nodes of
/// (min pair separation) / (collision threshold at that node). Used by the
/// minimizer's line-search guard.
struct ActionEvaluation {
  double value = 0.0;
  double guard_ratio = 0.0;
};
ActionEvaluation evaluate_action(const ActionProblem& problem,
                                 const PerturbationGrid& phi);

/// Gradient of the kinetic term alone (the stiffness stencil applied to the
/// nodal values). Also the preconditioner template for the minimizer.
Mat kinetic_gradient(const MassSystem& sys, const PerturbationGrid& phi);

/// Both sides of the Hardy inequality
///   int ||phi||_M^2 / t^{2+eps} dt <= 4/(1+eps)^2 int ||phi'||_M^2 dt
/// evaluated exactly for the piecewise-linear phi on [1, T], plus the nodal
/// sup bound sup ||phi(t)||_M^2/(t-1) <= ||phi||_D^2.
struct HardyResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when rhs == 0
  double sup_quotient = 0.0;
  double dnorm_sq = 0.0;
};
HardyResult hardy_check(const MassSystem& sys, const PerturbationGrid& phi,
                        double eps);

/// Decay exponent used by the analytic tail (fixed per problem so the
/// gradient of the tail stays exact).
double tail_decay_exponent(const ActionProblem& problem);

}  // namespace nbody

#pragma once

#include "nbody/core.hpp"

#include <vector>

namespace nbody {

/// Homogeneous pair potential U(x) = sum_{i<j} m_i m_j |r_i - r_j|^{-alpha}.
struct PotentialModel {
  MassSystem system;
  double alpha;
  double collision_eps_rel = 1e-9;
  int q_max = 8;  // highest supported contraction order in directional_derivative

  PotentialModel(MassSystem sys, double a) : system(std::move(sys)), alpha(a) {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  }
};

double potential_energy(const PotentialModel& model, const Vec& x);

/// Euclidean gradient in R^{dN}; homogeneous of degree -(1+alpha).
Vec potential_gradient(const PotentialModel& model, const Vec& x);

/// M^{-1} grad U, the gradient in the mass metric.
Vec mass_gradient(const PotentialModel& model, const Vec& x);

/// Right-hand side of M x'' = grad U, i.e. M^{-1} grad U. Identical to
/// mass_gradient; kept as a separate name for the dynamics call sites.
Vec newton_acceleration(const PotentialModel& model, const Vec& x);

/// Contraction of the (q+1)-th derivative tensor of U at a against q
/// configuration-space directions, returned with one slot free:
///
///   out = grad^{q+1} U(a)[dirs[0], ..., dirs[q-1]]  in R^{dN}.
///
/// Computed analytically per pair. With u = r_i - r_j and f(s) = s^{-alpha/2},
/// s = |u|^2, every derivative of the pair kernel is a sum over partial
/// matchings of the direction slots: a matched pair {a,b} contributes
/// 2<v_a, v_b>, an unmatched slot contributes 2<u, v_a>, and the remaining
/// slot count sets the order of the f-derivative. Exactness matters: the
/// correction recursion for small alpha consumes these at orders where nested
/// finite differences would have lost half the digits.
///
/// q = 1 is the Hessian-vector product grad^2 U(a) v.
Vec directional_derivative(const PotentialModel& model, const Vec& a,
                           const std::vector<Vec>& dirs);

/// Dense dN x dN Hessian of U at x (small systems only; used by the central
/// configuration Newton polish and the expansion specs).
Mat hessian_matrix(const PotentialModel& model, const Vec& x);

}  // namespace nbody

#pragma once

#include "nbody/trajectory.hpp"

#include <tuple>
#include <vector>

namespace nbody {

/// Least-squares line on (log t, log y).
struct PowerLawFit {
  double exponent = 0.0;
  double coefficient = 0.0;  // exp(intercept)
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points = 0;
  bool log_spacing = true;
};

/// Fits y ~ coefficient * t^exponent over the window. All y in the window
/// must be positive (subtract constants first if needed).
PowerLawFit fit_power_law(const std::vector<double>& t,
                          const std::vector<double>& y, double window_lo,
                          double window_hi);

/// One term of an asymptotic model: coeff * t^exponent or coeff * log t.
/// Terms flagged `fit` get their coefficient from least squares instead.
struct ExpansionTerm {
  Vec coeff;
  double exponent = 0.0;
  bool is_log = false;
  bool fit = false;
};

struct ExpansionSpec {
  Regime regime = Regime::Hyperbolic;
  double alpha = 0.0;
  std::vector<ExpansionTerm> terms;
  double remainder_exponent = 0.0;  // theoretical bound for what is left
};

/// The expansion the theorems predict for a trajectory guided by `path`,
/// with every coefficient the theory pins down filled in. The constant term
/// is never included here; expansion_residual adds and fits it on request.
ExpansionSpec make_expansion_spec(const PotentialModel& model,
                                  const ReferencePath& path);

struct ExpansionResidual {
  std::vector<double> times;          // samples inside the window
  std::vector<double> residual_norm;  // mass norm after all subtractions
  PowerLawFit fit;
  std::vector<Vec> fitted_coefficients;  // fitted terms first, then the
                                         // constant when fit_constants
  bool conditioning_warning = false;
};

/// Subtracts the fixed terms of the spec from the trajectory, fits the free
/// terms (plus a constant vector when fit_constants) per component by least
/// squares over the window, and power-fits the norm of what remains.
/// Default window: [sqrt(T), T].
ExpansionResidual expansion_residual(const MassSystem& sys,
                                     const Trajectory& traj,
                                     const ExpansionSpec& spec,
                                     bool fit_constants,
                                     double window_lo = -1.0,
                                     double window_hi = -1.0);

enum class ChazyClass { H, P, HP };

const char* chazy_name(ChazyClass c);

struct ChazyReport {
  ChazyClass label = ChazyClass::H;
  std::vector<std::tuple<int, int, double>> pair_exponents;  // (i, j, fitted)
  Vec asymptotic_velocity;  // gamma(T)/T
  double norm_growth_exponent = 0.0;
};

/// Fits the growth exponent of every mutual distance on the tail window.
/// H when all sit near 1, P when all sit near 2/(2+alpha) and the
/// configuration norm grows sublinearly (zero asymptotic velocity), HP
/// otherwise. Requires U(gamma) to decay along the tail.
ChazyReport chazy_classify(const PotentialModel& model, const Trajectory& traj,
                           double band = 0.1);

/// y'' + (mu/t^2) y = f on [ts.front(), ts.back()], mu < 1/4. Returns the
/// characteristic exponents theta-+ and the particular solution by variation
/// of constants. Each quadrature is anchored to kill the spurious
/// homogeneous component: when s^theta f(s) is integrable at infinity the
/// integral runs from +infty (with a power-law tail estimate beyond the
/// sample window), otherwise from the left endpoint. With that choice
/// f = O(t^-q) gives y_p = O(t^{2-q}).
struct SingularOdeSolution {
  double theta_minus = 0.0;
  double theta_plus = 0.0;
  std::vector<double> times;
  std::vector<double> y_p;
  std::vector<double> dy_p;
};

SingularOdeSolution singular_ode_solution(double mu,
                                          const std::vector<double>& ts,
                                          const std::vector<double>& fs);

/// psi_b(t) = <gamma(t) - r0(t), b_m>_M for a parabolic trajectory, its decay
/// fit, and the theoretical bound exponent
///   max{m_-, (2 alpha - 2)/(2 + alpha)}   for alpha in (0, 1)
///   (2 alpha - 2)/(2 + alpha)             for alpha in [1, 2)
/// with m_- = (1 - sqrt(1 + 4 A))/2, A = 2 alpha (1 + alpha)/(2 + alpha)^2.
struct ProjectionDecay {
  PowerLawFit fit;
  double bound_exponent = 0.0;
  std::vector<double> times;
  std::vector<double> psi_b;
  bool negligible = false;  // psi_b ~ 0, nothing to fit
};

ProjectionDecay b_projection_decay(const PotentialModel& model,
                                   const Trajectory& traj,
                                   const ReferencePath& path,
                                   double window_lo = -1.0,
                                   double window_hi = -1.0);

}  // namespace nbody

#pragma once

#include "nbody/central_config.hpp"
#include "nbody/potential.hpp"

#include <optional>
#include <vector>

namespace nbody {

enum class Regime { Hyperbolic, Parabolic, HyperbolicParabolic };

const char* regime_name(Regime r);

/// Correction vectors Gamma_1..Gamma_P of the hyperbolic reference path and
/// its asymptotic expansion.
///
///   Gamma_1 = -M^{-1} grad U(a) / (alpha (1 - alpha)),  alpha != 1
///   Gamma_k = -[ sum_{q=1}^{k-1} 1/q! sum_{j_1+...+j_q = k-1}
///                M^{-1} grad^{q+1} U(a)[Gamma_{j_1}, ..., Gamma_{j_q}] ]
///             / (k alpha (1 - k alpha)),
///
/// the inner sum running over ordered tuples of positive integers. The path
/// itself uses Gamma_1..Gamma_m with m = floor(1/(2 alpha)) (empty for
/// alpha > 1/2); the final coefficient Gamma_P, P = m+1, is the leading term
/// of gamma(t) - r0(t).
///
/// At alpha = 1/2 the k = 2 denominator vanishes and the power gives way to a
/// log term with coefficient tilde_gamma = -4 (M^{-1})^2 grad^2 U(a) grad U(a).
struct GammaCoefficients {
  double alpha = 0.0;
  Vec a;
  std::vector<Vec> gammas;   // Gamma_1.. (size P, or 1 when alpha == 1/2)
  int expansion_order = 0;   // P
  int path_order = 0;        // m, number of Gamma terms entering r0
  std::optional<Vec> tilde_gamma;  // alpha == 1/2 only
  bool borderline = false;         // 1/(2 alpha) integral
};

GammaCoefficients gamma_coefficients(const PotentialModel& model, const Vec& a);

/// Gamma_k alone, for any k >= 1 (resonance-checked). Lets the asymptotics
/// module form expansion terms beyond the spec order P.
Vec gamma_term(const PotentialModel& model, const Vec& a, int k);

/// r0(t) for the three regimes:
///   H : a t + sum_{k<=m} Gamma_k t^{1-k alpha}
///   P : beta b_m t^{2/(2+alpha)}
///   HP: a t + B t^{2/(2+alpha)}, B the per-cluster beta^K b^K block vector
/// All evaluations are analytic in t.
struct ReferencePath {
  Regime regime = Regime::Hyperbolic;
  double alpha = 0.0;
  Vec a;      // zero vector for the parabolic regime
  Vec parab;  // composite beta*b vector; zero for the hyperbolic regime
  std::optional<GammaCoefficients> gamma;     // hyperbolic, alpha != 1
  std::optional<ClusterPartition> partition;  // hyperbolic-parabolic
};

ReferencePath make_hyperbolic_path(const PotentialModel& model, const Vec& a);
ReferencePath make_parabolic_path(const PotentialModel& model,
                                  const CentralConfiguration& cc);
ReferencePath make_hyperbolic_parabolic_path(
    const PotentialModel& model, const Vec& a,
    const ClusterPartition& partition, const std::vector<ClusterBlock>& blocks);

struct PathState {
  Vec position;
  Vec velocity;
  Vec acceleration;
};

/// Exact (r0, r0', r0'') at time t >= 1.
PathState reference_state(const ReferencePath& path, double t);

/// || M r0''(t) - grad U(r0(t)) ||_{M^-1}: how far the reference path is from
/// solving Newton's equations. Zero for parabolic paths built from converged
/// central configurations; decays like t^{-1-(m+1) alpha} for hyperbolic ones.
double defect(const PotentialModel& model, const ReferencePath& path, double t);

}  // namespace nbody

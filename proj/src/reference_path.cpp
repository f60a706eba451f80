#include "nbody/reference_path.hpp"

#include <cmath>

namespace nbody {

namespace {

constexpr double kResonanceTol = 1e-6;

int floor_with_slack(double v) { return static_cast<int>(std::floor(v + 1e-9)); }

// ordered tuples of positive integers with q parts summing to total
void compositions(int total, int q, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (q == 1) {
    if (total >= 1) {
      cur.push_back(total);
      out.push_back(cur);
      cur.pop_back();
    }
    return;
  }
  for (int first = 1; first <= total - (q - 1); ++first) {
    cur.push_back(first);
    compositions(total - first, q - 1, cur, out);
    cur.pop_back();
  }
}

void check_resonances(double alpha, int up_to_k, bool allow_half) {
  if (std::abs(alpha - 1.0) < kResonanceTol)
    throw ValidationError(
        "alpha = 1: Gamma_1 is undefined; the Newtonian hyperbolic reference "
        "is r0(t) = a t and the correction is the log term handled by the "
        "asymptotics module");
  for (int k = 1; k <= up_to_k; ++k) {
    if (allow_half && k == 2 && alpha == 0.5) continue;
    if (std::abs(k * alpha - 1.0) < kResonanceTol) throw ResonanceError(k, alpha);
  }
}

Vec apply_mass_inverse(const MassSystem& sys, Vec w) {
  for (int i = 0; i < sys.n_bodies(); ++i) sys.body(w, i) /= sys.mass(i);
  return w;
}

// Gamma_1..Gamma_kmax via the recursion; caller has run the resonance check.
std::vector<Vec> gamma_sequence(const PotentialModel& model, const Vec& a,
                                int kmax) {
  const MassSystem& sys = model.system;
  double alpha = model.alpha;
  std::vector<Vec> g;
  g.push_back(apply_mass_inverse(sys, -potential_gradient(model, a)) /
              (alpha * (1.0 - alpha)));
  double qfact[16];
  qfact[0] = 1.0;
  for (int i = 1; i < 16; ++i) qfact[i] = qfact[i - 1] * i;

  for (int k = 2; k <= kmax; ++k) {
    Vec num = Vec::Zero(sys.dof());
    for (int q = 1; q <= k - 1; ++q) {
      std::vector<std::vector<int>> tuples;
      std::vector<int> cur;
      compositions(k - 1, q, cur, tuples);
      for (const auto& tup : tuples) {
        std::vector<Vec> dirs;
        dirs.reserve(q);
        for (int j : tup) dirs.push_back(g[j - 1]);
        num += directional_derivative(model, a, dirs) / qfact[q];
      }
    }
    g.push_back(apply_mass_inverse(sys, -num) /
                (k * alpha * (1.0 - k * alpha)));
  }
  return g;
}

void require_collision_free(const PotentialModel& model, const Vec& x,
                            const char* what) {
  if (!is_collision_free(model.system, x, model.collision_eps_rel))
    throw ValidationError(std::string(what) +
                          ": configuration must be collision-free");
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Hyperbolic:
      return "hyperbolic";
    case Regime::Parabolic:
      return "parabolic";
    case Regime::HyperbolicParabolic:
      return "hyperbolic-parabolic";
  }
  return "?";
}

GammaCoefficients gamma_coefficients(const PotentialModel& model,
                                     const Vec& a) {
  const double alpha = model.alpha;
  require_collision_free(model, a, "gamma_coefficients");

  GammaCoefficients out;
  out.alpha = alpha;
  out.a = a;
  if (alpha <= 0.5) {
    out.path_order = floor_with_slack(1.0 / (2.0 * alpha));
    out.expansion_order = out.path_order + 1;
    double ratio = 1.0 / (2.0 * alpha);
    out.borderline = std::abs(ratio - std::round(ratio)) < 1e-9;
  } else {
    out.path_order = 0;
    out.expansion_order = 1;
    out.borderline = false;
  }

  check_resonances(alpha, out.expansion_order, /*allow_half=*/alpha == 0.5);

  if (alpha == 0.5) {
    // Gamma_2 would divide by 2 alpha (1 - 2 alpha) = 0; the expansion's
    // second term is tilde_gamma * log t instead.
    out.gammas = gamma_sequence(model, a, 1);
    Vec grad = potential_gradient(model, a);
    Vec h = directional_derivative(model, a, {grad});
    out.tilde_gamma = apply_mass_inverse(model.system,
                                         apply_mass_inverse(model.system, h)) *
                      -4.0;
  } else {
    out.gammas = gamma_sequence(model, a, out.expansion_order);
  }
  return out;
}

Vec gamma_term(const PotentialModel& model, const Vec& a, int k) {
  if (k < 1) throw ValidationError("gamma_term: k must be >= 1");
  require_collision_free(model, a, "gamma_term");
  check_resonances(model.alpha, k, /*allow_half=*/false);
  return gamma_sequence(model, a, k).back();
}

ReferencePath make_hyperbolic_path(const PotentialModel& model, const Vec& a) {
  require_collision_free(model, a, "hyperbolic reference");
  ReferencePath p;
  p.regime = Regime::Hyperbolic;
  p.alpha = model.alpha;
  p.a = a;
  p.parab = Vec::Zero(model.system.dof());
  if (std::abs(model.alpha - 1.0) >= kResonanceTol)
    p.gamma = gamma_coefficients(model, a);
  return p;
}

ReferencePath make_parabolic_path(const PotentialModel& model,
                                  const CentralConfiguration& cc) {
  if (!(model.alpha > 0.0) || !(model.alpha < 2.0))
    throw ValidationError("parabolic reference requires alpha in (0, 2)");
  double nrm = mass_norm(model.system, cc.b_m);
  if (std::abs(nrm - 1.0) > 1e-10)
    throw ValidationError("parabolic reference: b_m must be normalized");
  ReferencePath p;
  p.regime = Regime::Parabolic;
  p.alpha = model.alpha;
  p.a = Vec::Zero(model.system.dof());
  p.parab = cc.beta * cc.b_m;
  return p;
}

ReferencePath make_hyperbolic_parabolic_path(
    const PotentialModel& model, const Vec& a,
    const ClusterPartition& partition,
    const std::vector<ClusterBlock>& blocks) {
  if (!(model.alpha > 0.5) || !(model.alpha < 2.0))
    throw ValidationError(
        "hyperbolic-parabolic reference requires alpha in (1/2, 2)");
  model.system.check_shape(a, "hyperbolic-parabolic reference");
  double amax = 0.0;
  for (int i = 0; i < model.system.n_bodies(); ++i)
    amax = std::max(amax, model.system.body(a, i).norm());
  if (amax <= 0.0)
    throw ValidationError(
        "hyperbolic-parabolic reference: a = 0 is the pure-parabolic "
        "degenerate case; use the parabolic mode");
  // An all-singleton partition is allowed and degenerates to the hyperbolic
  // path (every beta^K = 0).

  ReferencePath p;
  p.regime = Regime::HyperbolicParabolic;
  p.alpha = model.alpha;
  p.a = a;
  p.parab = assemble_parabolic_vector(model.system, partition, blocks);
  p.partition = partition;
  return p;
}

PathState reference_state(const ReferencePath& path, double t) {
  if (t < 1.0)
    throw std::domain_error("reference_state: paths are defined for t >= 1");
  const double alpha = path.alpha;
  PathState s;
  s.position = path.a * t;
  s.velocity = path.a;
  s.acceleration = Vec::Zero(path.a.size());

  if (path.parab.size() == path.a.size() && path.parab.squaredNorm() > 0.0) {
    double p = 2.0 / (2.0 + alpha);
    s.position += path.parab * std::pow(t, p);
    s.velocity += path.parab * (p * std::pow(t, p - 1.0));
    s.acceleration += path.parab * (p * (p - 1.0) * std::pow(t, p - 2.0));
  }
  if (path.gamma) {
    for (int k = 1; k <= path.gamma->path_order; ++k) {
      const Vec& G = path.gamma->gammas[k - 1];
      double e = 1.0 - k * alpha;
      s.position += G * std::pow(t, e);
      s.velocity += G * (e * std::pow(t, e - 1.0));
      s.acceleration += G * (e * (e - 1.0) * std::pow(t, e - 2.0));
    }
  }
  return s;
}

double defect(const PotentialModel& model, const ReferencePath& path,
              double t) {
  PathState s = reference_state(path, t);
  Vec res = potential_gradient(model, s.position);
  const MassSystem& sys = model.system;
  for (int i = 0; i < sys.n_bodies(); ++i)
    sys.body(res, i) -= sys.mass(i) * sys.body(s.acceleration, i);
  return dual_mass_norm(sys, res);
}

}  // namespace nbody

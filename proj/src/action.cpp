#include "nbody/action.hpp"

#include <cmath>
#include <limits>

namespace nbody {

namespace {

struct NodeGeometry {
  std::vector<double> h;  // segment widths, size M
  std::vector<double> w;  // trapezoid weights, size M+1
};

NodeGeometry node_geometry(const PerturbationGrid& grid) {
  int M = grid.segments();
  NodeGeometry g;
  g.h.resize(M);
  g.w.assign(M + 1, 0.0);
  for (int i = 0; i < M; ++i) {
    g.h[i] = grid.nodes[i + 1] - grid.nodes[i];
    g.w[i] += 0.5 * g.h[i];
    g.w[i + 1] += 0.5 * g.h[i];
  }
  return g;
}

// min separation and pair-scale at one configuration; throws with node
// context when below the collision threshold.
double guard_ratio_at(const PotentialModel& model, const Vec& gamma, double t,
                      long node) {
  auto [lo, hi] = min_max_mutual_distance(model.system, gamma);
  double eps = model.collision_eps_rel * std::max(1.0, hi);
  if (lo <= eps) {
    const MassSystem& sys = model.system;
    for (int i = 0; i < sys.n_bodies(); ++i)
      for (int j = i + 1; j < sys.n_bodies(); ++j)
        if ((sys.body(gamma, i) - sys.body(gamma, j)).norm() <= eps)
          throw SingularityError(i, j, lo, t, node);
  }
  return lo / eps;
}

Vec mass_times(const MassSystem& sys, const Vec& v) {
  Vec out(v.size());
  for (int i = 0; i < sys.n_bodies(); ++i)
    sys.body(out, i) = sys.mass(i) * sys.body(v, i);
  return out;
}

double kinetic_value(const MassSystem& sys, const PerturbationGrid& grid,
                     const NodeGeometry& geo) {
  double acc = 0.0;
  for (int i = 0; i < grid.segments(); ++i) {
    Vec d = (grid.values.row(i + 1) - grid.values.row(i)).transpose();
    acc += 0.5 * mass_norm_sq(sys, d) / geo.h[i];
  }
  return acc;
}

// Potential integrand at one node. The pair renormalizers depend on the
// evaluation mode: full U(r0) for the plain renormalized action, the
// clustered leading terms for the cluster-decomposed variant.
enum class RenormMode { None, Reference, Clustered };

double node_integrand(const ActionProblem& pb, const Vec& x_shift, double t,
                      long node, const Vec& phi_node, const PathState& ref,
                      RenormMode mode, const std::vector<int>& cluster_of,
                      double* guard) {
  const MassSystem& sys = pb.model.system;
  Vec gamma = ref.position + phi_node + x_shift;
  double ratio = guard_ratio_at(pb.model, gamma, t, node);
  if (guard) *guard = std::min(*guard, ratio);

  double val = potential_energy(pb.model, gamma);
  switch (mode) {
    case RenormMode::None:
      break;
    case RenormMode::Reference:
      val -= potential_energy(pb.model, ref.position);
      break;
    case RenormMode::Clustered: {
      const double alpha = pb.model.alpha;
      double pexp = 2.0 / (2.0 + alpha);
      for (int i = 0; i < sys.n_bodies(); ++i)
        for (int j = i + 1; j < sys.n_bodies(); ++j) {
          double mm = sys.mass(i) * sys.mass(j);
          if (cluster_of[i] == cluster_of[j]) {
            double bij = (sys.body(pb.path.parab, i) -
                          sys.body(pb.path.parab, j)).norm();
            val -= mm * std::pow(bij * std::pow(t, pexp), -alpha);
          } else {
            double aij =
                (sys.body(pb.path.a, i) - sys.body(pb.path.a, j)).norm();
            val -= mm * std::pow(aij * t, -alpha);
          }
        }
      break;
    }
  }
  // work term <M r0'', phi>; identically zero when r0'' = 0
  val -= mass_inner_product(sys, ref.acceleration, phi_node);
  return val;
}

std::vector<int> cluster_index_map(const ActionProblem& pb) {
  std::vector<int> cluster_of(pb.model.system.n_bodies(), -1);
  if (pb.path.partition) {
    const auto& classes = pb.path.partition->classes;
    for (std::size_t k = 0; k < classes.size(); ++k)
      for (int i : classes[k]) cluster_of[i] = static_cast<int>(k);
  }
  return cluster_of;
}

double accumulate_action(const ActionProblem& pb, const PerturbationGrid& grid,
                         RenormMode mode, double* guard) {
  validate_grid(pb.model.system, grid);
  if (std::abs(grid.horizon() - pb.horizon) > 1e-9 * pb.horizon)
    throw ValidationError("grid horizon does not match the problem horizon");
  NodeGeometry geo = node_geometry(grid);
  std::vector<int> cluster_of = cluster_index_map(pb);

  if (guard) *guard = std::numeric_limits<double>::infinity();
  const Vec xs = pb.x_shift();
  double pot = 0.0;
  for (int i = 0; i <= grid.segments(); ++i) {
    double t = grid.nodes[i];
    PathState ref = reference_state(pb.path, t);
    Vec phi_i = grid.values.row(i).transpose();
    double v = node_integrand(pb, xs, t, i, phi_i, ref, mode, cluster_of, guard);
    double w = geo.w[i];
    if (i == grid.segments() && pb.tail_mode == TailMode::AnalyticTail)
      w += pb.horizon / (tail_decay_exponent(pb) - 1.0);
    pot += w * v;
  }
  return kinetic_value(pb.model.system, grid, geo) + pot;
}

}  // namespace

PerturbationGrid make_perturbation_grid(double T, int M, int dof,
                                        MeshKind kind) {
  if (!(T > 1.0)) throw ValidationError("grid horizon must exceed 1");
  if (M < 2) throw ValidationError("grid needs at least 2 segments");
  PerturbationGrid g;
  g.kind = kind;
  g.nodes.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    g.nodes[i] = (kind == MeshKind::Geometric)
                     ? std::exp(std::log(T) * i / M)
                     : 1.0 + (T - 1.0) * i / M;
  }
  g.nodes.front() = 1.0;
  g.nodes.back() = T;
  g.values = Mat::Zero(M + 1, dof);
  return g;
}

void validate_grid(const MassSystem& sys, const PerturbationGrid& grid) {
  if (grid.nodes.size() < 3 ||
      grid.values.rows() != static_cast<long>(grid.nodes.size()) ||
      grid.values.cols() != sys.dof())
    throw ValidationError("perturbation grid shape mismatch");
  if (grid.nodes.front() != 1.0)
    throw ValidationError("perturbation grid must start at t = 1");
  for (std::size_t i = 1; i < grid.nodes.size(); ++i)
    if (!(grid.nodes[i] > grid.nodes[i - 1]))
      throw ValidationError("perturbation grid nodes must increase strictly");
  if (grid.values.row(0).cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("phi(1) must vanish exactly");
}

double dnorm_sq(const MassSystem& sys, const PerturbationGrid& grid) {
  double acc = 0.0;
  for (int i = 0; i + 1 < static_cast<int>(grid.nodes.size()); ++i) {
    double h = grid.nodes[i + 1] - grid.nodes[i];
    Vec d = (grid.values.row(i + 1) - grid.values.row(i)).transpose();
    acc += mass_norm_sq(sys, d) / h;
  }
  return acc;
}

Vec ActionProblem::x_shift() const {
  return x0 - reference_state(path, 1.0).position;
}

ActionProblem make_action_problem(const PotentialModel& model,
                                  const ReferencePath& path, const Vec& x0,
                                  double horizon, TailMode tail,
                                  std::optional<bool> renormalized) {
  model.system.check_shape(x0, "action problem x0");
  bool plain_ok = path.regime == Regime::Hyperbolic && model.alpha > 1.0;
  ActionProblem pb{model, path, x0, true, horizon, tail};
  pb.renormalized = renormalized.value_or(!plain_ok);
  if (!pb.renormalized && !plain_ok)
    throw ValidationError(
        "the plain action is integrable only for hyperbolic problems with "
        "alpha > 1; use the renormalized action");
  return pb;
}

double tail_decay_exponent(const ActionProblem& pb) {
  const double alpha = pb.model.alpha;
  if (!pb.renormalized) return alpha;  // U(gamma) ~ t^-alpha, alpha > 1
  bool parabolic_part =
      pb.path.regime == Regime::Parabolic ||
      (pb.path.regime == Regime::HyperbolicParabolic &&
       pb.path.partition && pb.path.partition->has_nontrivial_class());
  // leading frozen-integrand decay: <grad U(r0), x_shift> terms
  return parabolic_part ? 2.0 * (1.0 + alpha) / (2.0 + alpha) : 1.0 + alpha;
}

double renormalized_action(const ActionProblem& pb,
                           const PerturbationGrid& phi) {
  RenormMode mode =
      pb.renormalized ? RenormMode::Reference : RenormMode::None;
  return accumulate_action(pb, phi, mode, nullptr);
}

double clustered_action(const ActionProblem& pb, const PerturbationGrid& phi) {
  if (pb.path.regime != Regime::HyperbolicParabolic || !pb.path.partition)
    throw ValidationError(
        "clustered_action applies to hyperbolic-parabolic problems");
  return accumulate_action(pb, phi, RenormMode::Clustered, nullptr);
}

ActionEvaluation evaluate_action(const ActionProblem& pb,
                                 const PerturbationGrid& phi) {
  ActionEvaluation ev;
  RenormMode mode =
      pb.renormalized ? RenormMode::Reference : RenormMode::None;
  ev.guard_ratio = std::numeric_limits<double>::infinity();
  ev.value = accumulate_action(pb, phi, mode, &ev.guard_ratio);
  return ev;
}

Mat action_gradient(const ActionProblem& pb, const PerturbationGrid& grid) {
  validate_grid(pb.model.system, grid);
  const MassSystem& sys = pb.model.system;
  int M = grid.segments();
  NodeGeometry geo = node_geometry(grid);
  Mat grad = Mat::Zero(M, sys.dof());

  // kinetic stencil
  for (int j = 1; j <= M; ++j) {
    Vec g = mass_times(
        sys, ((grid.values.row(j) - grid.values.row(j - 1)) / geo.h[j - 1])
                 .transpose());
    if (j < M)
      g -= mass_times(
          sys,
          ((grid.values.row(j + 1) - grid.values.row(j)) / geo.h[j]).transpose());
    grad.row(j - 1) = g.transpose();
  }

  // potential part: w_j (grad U(gamma_j) - M r0''(t_j)); the renormalizer is
  // phi-independent so it never shows up here
  const Vec xs = pb.x_shift();
  for (int j = 1; j <= M; ++j) {
    double t = grid.nodes[j];
    PathState ref = reference_state(pb.path, t);
    Vec gamma = ref.position + grid.values.row(j).transpose() + xs;
    guard_ratio_at(pb.model, gamma, t, j);
    double w = geo.w[j];
    if (j == M && pb.tail_mode == TailMode::AnalyticTail)
      w += pb.horizon / (tail_decay_exponent(pb) - 1.0);
    Vec g = potential_gradient(pb.model, gamma) -
            mass_times(sys, ref.acceleration);
    grad.row(j - 1) += w * g.transpose();
  }
  return grad;
}

Mat kinetic_gradient(const MassSystem& sys, const PerturbationGrid& grid) {
  validate_grid(sys, grid);
  int M = grid.segments();
  NodeGeometry geo = node_geometry(grid);
  Mat grad = Mat::Zero(M, sys.dof());
  for (int j = 1; j <= M; ++j) {
    Vec g = mass_times(
        sys, ((grid.values.row(j) - grid.values.row(j - 1)) / geo.h[j - 1])
                 .transpose());
    if (j < M)
      g -= mass_times(
          sys,
          ((grid.values.row(j + 1) - grid.values.row(j)) / geo.h[j]).transpose());
    grad.row(j - 1) = g.transpose();
  }
  return grad;
}

namespace {

// int_{t0}^{t1} t^e dt with the log branch for e ~ -1
double power_integral(double t0, double t1, double e) {
  if (std::abs(e + 1.0) < 1e-12) return std::log(t1 / t0);
  return (std::pow(t1, e + 1.0) - std::pow(t0, e + 1.0)) / (e + 1.0);
}

}  // namespace

HardyResult hardy_check(const MassSystem& sys, const PerturbationGrid& grid,
                        double eps) {
  validate_grid(sys, grid);
  if (eps < 0.0) throw ValidationError("hardy_check: eps must be >= 0");
  HardyResult res;
  int M = grid.segments();
  for (int i = 0; i < M; ++i) {
    double t0 = grid.nodes[i], t1 = grid.nodes[i + 1];
    double h = t1 - t0;
    Vec p0 = grid.values.row(i).transpose();
    Vec s = (grid.values.row(i + 1).transpose() - p0) / h;
    Vec w = p0 - s * t0;
    // ||phi(t)||_M^2 = c0 + c1 t + c2 t^2 on the segment
    double c0 = mass_norm_sq(sys, w);
    double c1 = 2.0 * mass_inner_product(sys, w, s);
    double c2 = mass_norm_sq(sys, s);
    res.lhs += c0 * power_integral(t0, t1, -2.0 - eps) +
               c1 * power_integral(t0, t1, -1.0 - eps) +
               c2 * power_integral(t0, t1, -eps);
    res.dnorm_sq += c2 * h;
  }
  for (int i = 1; i <= M; ++i) {
    Vec p = grid.values.row(i).transpose();
    res.sup_quotient = std::max(
        res.sup_quotient, mass_norm_sq(sys, p) / (grid.nodes[i] - 1.0));
  }
  double c = 1.0 + eps;
  res.rhs = 4.0 / (c * c) * res.dnorm_sq;
  res.ratio = res.rhs > 0.0 ? res.lhs / res.rhs : 0.0;
  return res;
}

}  // namespace nbody

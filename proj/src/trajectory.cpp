#include "nbody/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace nbody {

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Minimized:
      return "minimized";
    case Provenance::Integrated:
      return "integrated";
    case Provenance::Reference:
      return "reference";
  }
  return "?";
}

double total_energy(const PotentialModel& model, const Vec& x, const Vec& v) {
  return 0.5 * mass_norm_sq(model.system, v) - potential_energy(model, x);
}

// ---------------------------------------------------------------------------
// minimize_action
// ---------------------------------------------------------------------------

namespace {

// Tridiagonal factorization of the mass-free kinetic stencil on nodes 1..M.
// K is block diagonal over coordinates with blocks m_c * Khat, so one scalar
// factorization serves every column.
class KineticSolver {
 public:
  explicit KineticSolver(const std::vector<double>& nodes) {
    int M = static_cast<int>(nodes.size()) - 1;
    std::vector<double> h(M);
    for (int i = 0; i < M; ++i) h[i] = nodes[i + 1] - nodes[i];
    diag_.resize(M);
    upper_.resize(M - 1);
    for (int j = 1; j <= M; ++j) {
      diag_[j - 1] = (j < M) ? 1.0 / h[j - 1] + 1.0 / h[j] : 1.0 / h[j - 1];
      if (j < M) upper_[j - 1] = -1.0 / h[j];
    }
    // Thomas forward elimination (symmetric: lower = upper)
    dprime_ = diag_;
    lfac_.resize(M - 1);
    for (int i = 1; i < M; ++i) {
      lfac_[i - 1] = upper_[i - 1] / dprime_[i - 1];
      dprime_[i] -= lfac_[i - 1] * upper_[i - 1];
    }
  }

  void solve_inplace(Eigen::Ref<Vec> b) const {
    int M = static_cast<int>(dprime_.size());
    for (int i = 1; i < M; ++i) b[i] -= lfac_[i - 1] * b[i - 1];
    b[M - 1] /= dprime_[M - 1];
    for (int i = M - 2; i >= 0; --i)
      b[i] = (b[i] - upper_[i] * b[i + 1]) / dprime_[i];
  }

 private:
  std::vector<double> diag_, upper_, dprime_, lfac_;
};

struct Flattened {
  // nodal values 1..M as a single vector, node-major
  static Vec from_grid(const PerturbationGrid& g) {
    int M = g.segments(), dof = static_cast<int>(g.values.cols());
    Vec z(M * dof);
    for (int j = 0; j < M; ++j)
      z.segment(j * dof, dof) = g.values.row(j + 1).transpose();
    return z;
  }
  static void to_grid(const Vec& z, PerturbationGrid& g) {
    int M = g.segments(), dof = static_cast<int>(g.values.cols());
    for (int j = 0; j < M; ++j)
      g.values.row(j + 1) = z.segment(j * dof, dof).transpose();
  }
  static Vec from_mat(const Mat& m) {
    Vec z(m.rows() * m.cols());
    for (int j = 0; j < m.rows(); ++j)
      z.segment(j * m.cols(), m.cols()) = m.row(j).transpose();
    return z;
  }
};

Trajectory trajectory_from_grid(const ActionProblem& pb,
                                const PerturbationGrid& grid) {
  const MassSystem& sys = pb.model.system;
  int M = grid.segments();
  Trajectory traj;
  traj.times = grid.nodes;
  traj.positions = Mat(M + 1, sys.dof());
  traj.velocities = Mat(M + 1, sys.dof());
  traj.alpha = pb.model.alpha;
  traj.provenance = Provenance::Minimized;

  const Vec xs = pb.x_shift();
  std::vector<Vec> slope(M);
  for (int i = 0; i < M; ++i)
    slope[i] = (grid.values.row(i + 1) - grid.values.row(i)).transpose() /
               (grid.nodes[i + 1] - grid.nodes[i]);
  for (int i = 0; i <= M; ++i) {
    PathState ref = reference_state(pb.path, grid.nodes[i]);
    traj.positions.row(i) =
        (ref.position + grid.values.row(i).transpose() + xs).transpose();
    Vec dphi;
    if (i == 0) {
      // one-sided quadratic; a bare segment slope is only first order and
      // pollutes the end-of-grid Euler-Lagrange stencils
      double h0 = grid.nodes[1] - grid.nodes[0];
      double h1 = grid.nodes[2] - grid.nodes[1];
      dphi = slope[0] + (slope[0] - slope[1]) * (h0 / (h0 + h1));
    } else if (i == M) {
      double h0 = grid.nodes[M] - grid.nodes[M - 1];
      double h1 = grid.nodes[M - 1] - grid.nodes[M - 2];
      dphi = slope[M - 1] + (slope[M - 1] - slope[M - 2]) * (h0 / (h0 + h1));
    } else {
      double hl = grid.nodes[i] - grid.nodes[i - 1];
      double hr = grid.nodes[i + 1] - grid.nodes[i];
      dphi = (hr * slope[i - 1] + hl * slope[i]) / (hl + hr);
    }
    traj.velocities.row(i) = (ref.velocity + dphi).transpose();
  }
  traj.energy = total_energy(pb.model, traj.positions.row(M).transpose(),
                             traj.velocities.row(M).transpose());
  return traj;
}

}  // namespace

SynthesisReport minimize_action(const ActionProblem& pb,
                                const PerturbationGrid& init,
                                const MinimizeOptions& opts) {
  validate_grid(pb.model.system, init);
  const int M = init.segments();
  const int dof = static_cast<int>(init.values.cols());
  const int n = M * dof;
  KineticSolver ksolve(init.nodes);
  const std::vector<double>& masses = pb.model.system.masses();
  const int d = pb.model.system.dim();

  PerturbationGrid work = init;
  auto objective = [&](const Vec& z, bool* feasible) -> double {
    Flattened::to_grid(z, work);
    try {
      ActionEvaluation ev = evaluate_action(pb, work);
      if (ev.guard_ratio < pb.guard_factor) {
        *feasible = false;
        return std::numeric_limits<double>::infinity();
      }
      *feasible = true;
      return ev.value;
    } catch (const SingularityError&) {
      *feasible = false;
      return std::numeric_limits<double>::infinity();
    }
  };
  auto gradient = [&](const Vec& z) -> Vec {
    Flattened::to_grid(z, work);
    return Flattened::from_mat(action_gradient(pb, work));
  };
  // H0 = K^{-1}: per-node-column tridiagonal solve, scaled by 1/mass
  auto precondition = [&](Vec q) -> Vec {
    Vec col(M);
    for (int c = 0; c < dof; ++c) {
      for (int j = 0; j < M; ++j) col[j] = q[j * dof + c];
      ksolve.solve_inplace(col);
      double m = masses[c / d];
      for (int j = 0; j < M; ++j) q[j * dof + c] = col[j] / m;
    }
    return q;
  };

  Vec z = Flattened::from_grid(init);
  bool feas0 = false;
  double f = objective(z, &feas0);
  if (!feas0)
    throw ValidationError(
        "minimize_action: initial curve violates the collision guard");
  Vec g = gradient(z);

  std::deque<Vec> S, Y;
  std::deque<double> rho;
  SynthesisReport report;
  report.path = pb.path;
  report.hit_collision_guard = false;

  int it = 0;
  for (; it < opts.max_iters; ++it) {
    report.gradient_norm = g.cwiseAbs().maxCoeff();
    if (report.gradient_norm <= opts.opt_tol) {
      report.converged = true;
      break;
    }
    // two-loop recursion
    Vec q = g;
    std::vector<double> alpha_coef(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha_coef[i] = rho[i] * S[i].dot(q);
      q -= alpha_coef[i] * Y[i];
    }
    Vec r = precondition(q);
    for (std::size_t i = 0; i < S.size(); ++i) {
      double beta = rho[i] * Y[i].dot(r);
      r += (alpha_coef[i] - beta) * S[i];
    }
    Vec dir = -r;
    double slope = g.dot(dir);
    if (slope >= 0.0) {  // history turned sour; restart from the preconditioner
      S.clear();
      Y.clear();
      rho.clear();
      dir = -precondition(g);
      slope = g.dot(dir);
    }

    double step = 1.0;
    bool accepted = false;
    bool guard_blocked = true;
    for (int back = 0; back < 60; ++back) {
      bool feasible = false;
      double f_new = objective(z + step * dir, &feasible);
      if (!feasible) {
        report.hit_collision_guard = true;
      } else {
        guard_blocked = false;
        if (f_new <= f + 1e-4 * step * slope) {
          Vec z_new = z + step * dir;
          Vec g_new = gradient(z_new);
          Vec s = z_new - z;
          Vec y = g_new - g;
          double ys = y.dot(s);
          if (ys > 1e-12 * s.norm() * y.norm()) {
            S.push_back(s);
            Y.push_back(y);
            rho.push_back(1.0 / ys);
            if (static_cast<int>(S.size()) > opts.memory) {
              S.pop_front();
              Y.pop_front();
              rho.pop_front();
            }
          }
          z = std::move(z_new);
          f = f_new;
          g = std::move(g_new);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      Flattened::to_grid(z, work);
      report.phi = work;
      report.final_action = f;
      report.iterations = it;
      report.gradient_norm = g.cwiseAbs().maxCoeff();
      report.trajectory = trajectory_from_grid(pb, work);
      report.el_residual = euler_lagrange_residual(pb.model, report.trajectory);
      if (guard_blocked)
        throw CollisionGuardError(
            "line search blocked by the collision guard", report);
      report.converged = false;
      return report;
    }
  }

  Flattened::to_grid(z, work);
  report.phi = work;
  report.final_action = f;
  report.iterations = it;
  report.gradient_norm = g.cwiseAbs().maxCoeff();
  if (!report.converged && report.gradient_norm <= opts.opt_tol)
    report.converged = true;
  report.trajectory = trajectory_from_grid(pb, work);
  report.el_residual = euler_lagrange_residual(pb.model, report.trajectory);
  return report;
}

// ---------------------------------------------------------------------------
// synthesize_trajectory
// ---------------------------------------------------------------------------

namespace {

void require_barycentered(const MassSystem& sys, const Vec& v,
                          const char* what) {
  if (!is_barycentered(sys, v, 1e-9))
    throw ValidationError(std::string(what) +
                          " must have zero barycenter (project it first)");
}

// phi such that gamma runs straight from x to the shifted reference at t*,
// then follows it. Used when the shifted reference collides near t = 1.
void homotopy_init(const ActionProblem& pb, PerturbationGrid& grid) {
  const MassSystem& sys = pb.model.system;
  const Vec xs = pb.x_shift();
  int M = grid.segments();
  int istar = -1;
  for (int i = 1; i <= M; ++i) {
    bool ok = true;
    for (int j = i; j <= M; ++j) {
      Vec gamma = reference_state(pb.path, grid.nodes[j]).position + xs;
      auto [lo, hi] = min_max_mutual_distance(sys, gamma);
      if (lo <= pb.guard_factor * pb.model.collision_eps_rel *
                    std::max(1.0, hi)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      istar = i;
      break;
    }
  }
  if (istar < 0)
    throw ValidationError(
        "no collision-free initial curve: the shifted reference path is "
        "singular over the whole grid");
  double tstar = grid.nodes[istar];
  Vec r1 = reference_state(pb.path, 1.0).position;
  Vec rstar = reference_state(pb.path, tstar).position;
  for (int i = 0; i < istar; ++i) {
    double lam = (grid.nodes[i] - 1.0) / (tstar - 1.0);
    Vec r = reference_state(pb.path, grid.nodes[i]).position;
    grid.values.row(i) = (r1 - r + lam * (rstar - r1)).transpose();
  }
}

}  // namespace

SynthesisReport synthesize_trajectory(const PotentialModel& model,
                                      const SynthesisRequest& req) {
  const MassSystem& sys = model.system;
  sys.check_shape(req.x0, "synthesize_trajectory x0");
  require_barycentered(sys, req.x0, "initial configuration");

  ReferencePath path;
  switch (req.regime) {
    case Regime::Hyperbolic: {
      if (!req.a) throw ValidationError("hyperbolic synthesis needs a");
      require_barycentered(sys, *req.a, "asymptotic velocity");
      path = make_hyperbolic_path(model, *req.a);
      break;
    }
    case Regime::Parabolic: {
      if (!(model.alpha > 0.0) || !(model.alpha < 2.0))
        throw ValidationError("parabolic synthesis requires alpha in (0, 2)");
      CentralConfiguration cc =
          req.cc ? *req.cc : find_central_configuration(model, req.cc_opts);
      path = make_parabolic_path(model, cc);
      break;
    }
    case Regime::HyperbolicParabolic: {
      if (!req.a)
        throw ValidationError("hyperbolic-parabolic synthesis needs a");
      require_barycentered(sys, *req.a, "asymptotic velocity");
      if (!(model.alpha > 0.5) || !(model.alpha < 2.0))
        throw ValidationError(
            "hyperbolic-parabolic synthesis requires alpha in (1/2, 2)");
      ClusterPartition part = cluster_partition(sys, *req.a);
      if (!part.has_nontrivial_class()) {
        // a is collision-free: every beta^K = 0 and the problem is exactly
        // the hyperbolic one
        path = make_hyperbolic_path(model, *req.a);
        break;
      }
      auto blocks = clustered_central_configuration(model, part, req.cc_opts);
      path = make_hyperbolic_parabolic_path(model, *req.a, part, blocks);
      break;
    }
  }

  ActionProblem pb =
      make_action_problem(model, path, req.x0, req.grid.horizon, req.tail);
  PerturbationGrid grid = make_perturbation_grid(
      req.grid.horizon, req.grid.nodes, sys.dof(), req.grid.kind);
  try {
    evaluate_action(pb, grid);
  } catch (const SingularityError&) {
    homotopy_init(pb, grid);
  }
  return minimize_action(pb, grid, req.opt);
}

// ---------------------------------------------------------------------------
// integrate_newton: Dormand-Prince 5(4) with dense output
// ---------------------------------------------------------------------------

namespace {

struct Dopri5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113,
                          a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  // embedded 4th-order weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  // dense-output quintic coefficients (Hairer's contd5)
  static constexpr double d1 = -12715105075.0 / 11282082432.0;
  static constexpr double d3 = 87487479700.0 / 32700410799.0;
  static constexpr double d4 = -10690763975.0 / 1880347072.0;
  static constexpr double d5 = 701980252875.0 / 199316789632.0;
  static constexpr double d6 = -1453857185.0 / 822651844.0;
  static constexpr double d7 = 69997945.0 / 29380423.0;
};

}  // namespace

Trajectory integrate_newton(const PotentialModel& model, const Vec& x0,
                            const Vec& v0, double t0, double t1, double rtol,
                            std::vector<double> sample_times, double atol) {
  const MassSystem& sys = model.system;
  sys.check_shape(x0, "integrate_newton x0");
  sys.check_shape(v0, "integrate_newton v0");
  if (!(t1 > t0)) throw ValidationError("integrate_newton: need t1 > t0");
  if (!(rtol > 0.0)) throw ValidationError("integrate_newton: rtol > 0");
  std::sort(sample_times.begin(), sample_times.end());
  if (!sample_times.empty() &&
      (sample_times.front() < t0 - 1e-12 || sample_times.back() > t1 + 1e-12))
    throw ValidationError("integrate_newton: samples outside [t0, t1]");

  const int dof = sys.dof();
  auto rhs = [&](const Vec& y) -> Vec {
    Vec dy(2 * dof);
    dy.head(dof) = y.tail(dof);
    dy.tail(dof) = newton_acceleration(model, y.head(dof));
    return dy;
  };

  Vec y(2 * dof);
  y.head(dof) = x0;
  y.tail(dof) = v0;
  double t = t0;
  Vec k1 = rhs(y);

  // initial step from the gradient scale
  double ynorm = y.cwiseAbs().maxCoeff();
  double fnorm = k1.cwiseAbs().maxCoeff();
  double h = std::clamp(0.01 * (ynorm + atol) / (fnorm + 1e-30), 1e-8,
                        (t1 - t0) / 10.0);

  Trajectory traj;
  traj.alpha = model.alpha;
  traj.provenance = Provenance::Integrated;
  traj.times = sample_times;
  traj.positions = Mat(sample_times.size(), dof);
  traj.velocities = Mat(sample_times.size(), dof);
  std::size_t next_sample = 0;
  auto emit_state = [&](std::size_t idx, const Vec& ys) {
    traj.positions.row(idx) = ys.head(dof).transpose();
    traj.velocities.row(idx) = ys.tail(dof).transpose();
  };
  while (next_sample < sample_times.size() &&
         sample_times[next_sample] <= t0 + 1e-300) {
    emit_state(next_sample++, y);
  }

  using T = Dopri5Tableau;
  Vec k2, k3, k4, k5, k6, k7;
  int consecutive_rejects = 0;
  while (t < t1) {
    h = std::min(h, t1 - t);
    if (h < 1e-12 * std::max(1.0, std::abs(t)))
      throw CollisionApproachError(t);
    bool failed = false;
    Vec y_new;
    double err = 0.0;
    try {
      k2 = rhs(y + h * (T::a21 * k1));
      k3 = rhs(y + h * (T::a31 * k1 + T::a32 * k2));
      k4 = rhs(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
      k5 = rhs(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
      k6 = rhs(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 +
                        T::a65 * k5));
      y_new = y + h * (T::a71 * k1 + T::a73 * k3 + T::a74 * k4 + T::a75 * k5 +
                       T::a76 * k6);
      k7 = rhs(y_new);
      Vec e = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                   T::e6 * k6 + T::e7 * k7);
      double acc = 0.0;
      for (int i = 0; i < 2 * dof; ++i) {
        double sc =
            atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        acc += (e[i] / sc) * (e[i] / sc);
      }
      err = std::sqrt(acc / (2 * dof));
    } catch (const SingularityError&) {
      failed = true;
    }

    if (failed) {
      h *= 0.25;
      if (++consecutive_rejects > 200) throw CollisionApproachError(t);
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (++consecutive_rejects > 200) throw CollisionApproachError(t);
      continue;
    }
    consecutive_rejects = 0;

    // dense output over [t, t+h]
    if (next_sample < sample_times.size() &&
        sample_times[next_sample] <= t + h) {
      Vec ydiff = y_new - y;
      Vec bspl = h * k1 - ydiff;
      Vec r1 = y, r2 = ydiff, r3 = bspl, r4 = ydiff - h * k7 - bspl;
      Vec r5 = h * (T::d1 * k1 + T::d3 * k3 + T::d4 * k4 + T::d5 * k5 +
                    T::d6 * k6 + T::d7 * k7);
      while (next_sample < sample_times.size() &&
             sample_times[next_sample] <= t + h + 1e-300) {
        double theta = (sample_times[next_sample] - t) / h;
        double th1 = 1.0 - theta;
        Vec ys = r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
        emit_state(next_sample++, ys);
      }
    }

    t += h;
    y = y_new;
    k1 = k7;  // FSAL
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10),
                                                    -0.2)));
  }
  while (next_sample < sample_times.size()) emit_state(next_sample++, y);

  if (!sample_times.empty()) {
    traj.energy = total_energy(
        model, traj.positions.row(traj.n_samples() - 1).transpose(),
        traj.velocities.row(traj.n_samples() - 1).transpose());
  } else {
    traj.times = {t1};
    traj.positions = y.head(dof).transpose();
    traj.velocities = y.tail(dof).transpose();
    traj.energy = total_energy(model, y.head(dof), y.tail(dof));
  }
  return traj;
}

Trajectory reference_trajectory(const PotentialModel& model,
                                const ReferencePath& path,
                                std::vector<double> times) {
  Trajectory traj;
  traj.alpha = model.alpha;
  traj.provenance = Provenance::Reference;
  traj.times = std::move(times);
  int n = traj.n_samples();
  traj.positions = Mat(n, model.system.dof());
  traj.velocities = Mat(n, model.system.dof());
  for (int i = 0; i < n; ++i) {
    PathState s = reference_state(path, traj.times[i]);
    traj.positions.row(i) = s.position.transpose();
    traj.velocities.row(i) = s.velocity.transpose();
  }
  traj.energy = total_energy(model, traj.positions.row(n - 1).transpose(),
                             traj.velocities.row(n - 1).transpose());
  return traj;
}

// ---------------------------------------------------------------------------
// Euler-Lagrange residual
// ---------------------------------------------------------------------------

std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
  // Fornberg's recursion, weights for the m-th derivative only
  int n = static_cast<int>(x.size());
  Mat c = Mat::Zero(n, m + 1);
  double c1 = 1.0;
  double c4 = x[0] - z;
  c(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c(i, m);
  return w;
}

double euler_lagrange_residual(const PotentialModel& model,
                               const Trajectory& traj) {
  const MassSystem& sys = model.system;
  int n = traj.n_samples();
  if (n < 3)
    throw ValidationError("euler_lagrange_residual: need at least 3 samples");
  int width = std::min(5, n);
  // stencils stay clear of the first and last sample: endpoint velocities of
  // a reconstructed trajectory are the least accurate ones
  int lo_skip = width / 2, hi_skip = width / 2;
  if (n >= width + 2) {
    ++lo_skip;
    ++hi_skip;
  }

  double worst = 0.0;
  for (int k = lo_skip; k < n - hi_skip; ++k) {
    int start = std::clamp(k - width / 2, 1, n - 1 - width);
    std::vector<double> ts(traj.times.begin() + start,
                           traj.times.begin() + start + width);
    std::vector<double> w = fd_weights(traj.times[k], ts, 1);
    Vec acc = Vec::Zero(sys.dof());
    for (int l = 0; l < width; ++l)
      acc += w[l] * traj.velocities.row(start + l).transpose();

    Vec gradU = potential_gradient(model, traj.positions.row(k).transpose());
    Vec res(sys.dof());
    for (int i = 0; i < sys.n_bodies(); ++i)
      sys.body(res, i) = sys.mass(i) * sys.body(acc, i) - sys.body(gradU, i);
    double denom = dual_mass_norm(sys, gradU);
    if (denom > 0.0)
      worst = std::max(worst, dual_mass_norm(sys, res) / denom);
  }
  return worst;
}

}  // namespace nbody

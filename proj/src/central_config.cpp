#include "nbody/central_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <numeric>
#include <thread>

namespace nbody {

namespace {

// NBODY_THREADS caps worker parallelism; defaults to the hardware count.
int thread_cap() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("NBODY_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return std::min(v, 64);
  }
  return hw;
}

double criticality_residual(const PotentialModel& model, const Vec& b) {
  double u = potential_energy(model, b);
  Vec r = potential_gradient(model, b);
  const MassSystem& sys = model.system;
  for (int i = 0; i < sys.n_bodies(); ++i)
    sys.body(r, i) += model.alpha * u * sys.mass(i) * sys.body(b, i);
  return dual_mass_norm(model.system, r);
}

Vec normalize_on_ellipsoid(const MassSystem& sys, const Vec& x) {
  Vec y = project_center_of_mass(sys, x);
  return y / mass_norm(sys, y);
}

// One seeded descent run. Returns nullopt when the iterate degenerates.
std::optional<Vec> descend(const PotentialModel& model, Vec x, int max_iters) {
  const MassSystem& sys = model.system;
  double step = 0.1;
  double u = potential_energy(model, x);
  for (int iter = 0; iter < max_iters; ++iter) {
    Vec g = mass_gradient(model, x);
    double gx = mass_inner_product(sys, g, x);
    Vec gt = g;
    for (int i = 0; i < sys.n_bodies(); ++i)
      sys.body(gt, i) -= gx * sys.body(x, i);
    double gn2 = mass_inner_product(sys, gt, gt);
    if (gn2 <= 1e-28 * u * u) break;

    bool advanced = false;
    step *= 2.0;
    for (int back = 0; back < 60; ++back) {
      Vec cand = normalize_on_ellipsoid(sys, x - step * gt);
      auto [lo, hi] = min_max_mutual_distance(sys, cand);
      if (lo > 1e-7 * std::max(1.0, hi)) {
        double uc = potential_energy(model, cand);
        if (uc <= u - 1e-4 * step * gn2) {
          x = cand;
          u = uc;
          advanced = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!advanced) break;
  }
  auto [lo, hi] = min_max_mutual_distance(sys, x);
  if (lo <= 1e-7 * std::max(1.0, hi)) return std::nullopt;
  return x;
}

// Newton on the Lagrange system F(b, lambda) = (grad U + lambda M b,
// (||b||_M^2 - 1)/2). The Jacobian is rank-deficient along rotations, so the
// step is the minimum-norm least-squares solution.
void newton_polish(const PotentialModel& model, Vec& b, int iters,
                   double tol) {
  const MassSystem& sys = model.system;
  int n = sys.dof();
  for (int it = 0; it < iters; ++it) {
    double u = potential_energy(model, b);
    // grad U(b) = -alpha U(b) M b at criticality (Euler's identity), so the
    // multiplier in F = grad U + lambda M b is +alpha U
    double lambda = model.alpha * u;
    Vec g = potential_gradient(model, b);
    Vec Mb(n);
    for (int i = 0; i < sys.n_bodies(); ++i)
      sys.body(Mb, i) = sys.mass(i) * sys.body(b, i);

    Vec F(n + 1);
    F.head(n) = g + lambda * Mb;
    F[n] = 0.5 * (mass_norm_sq(sys, b) - 1.0);
    if (dual_mass_norm(sys, F.head(n)) <= tol && std::abs(F[n]) <= tol) break;

    Mat J = Mat::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = hessian_matrix(model, b);
    for (int k = 0; k < n; ++k) {
      int body = k / sys.dim();
      J(k, k) += lambda * sys.mass(body);
    }
    J.block(0, n, n, 1) = Mb;
    J.block(n, 0, 1, n) = Mb.transpose();

    Vec rhs(n + 1);
    rhs.head(n) = F.head(n);
    rhs[n] = F[n];
    Vec step = J.completeOrthogonalDecomposition().solve(rhs);
    b -= step.head(n);
    b = normalize_on_ellipsoid(sys, b);
  }
}

// Rotate (and possibly reflect) so the output does not depend on the random
// start: body 0 on the positive first axis; body 1 with nonnegative second
// coordinate. Pure convention for reproducible serialization.
Vec canonical_orientation(const MassSystem& sys, const Vec& b) {
  int d = sys.dim();
  Vec r0 = sys.body(b, 0);
  if (r0.norm() < 1e-14) return b;

  Mat Q = Mat::Identity(d, d);
  // Householder-style: first basis vector -> direction of r0
  Vec e1 = Vec::Zero(d);
  e1[0] = 1.0;
  Vec v = r0.normalized() - e1;
  if (v.norm() > 1e-14) {
    v.normalize();
    Q = Mat::Identity(d, d) - 2.0 * (v * v.transpose());
  }
  // Q maps r0 direction to e1 (Householder reflections are symmetric)
  Vec out(sys.dof());
  for (int i = 0; i < sys.n_bodies(); ++i) sys.body(out, i) = Q * sys.body(b, i);

  if (sys.n_bodies() >= 2 && d >= 2) {
    // reflect the second coordinate so body 1 has y >= 0
    double y = sys.body(out, 1)[1];
    if (y < 0.0) {
      for (int i = 0; i < sys.n_bodies(); ++i) sys.body(out, i)[1] *= -1.0;
    }
  }
  return out;
}

}  // namespace

double beta_coefficient(double u_min, double alpha) {
  if (!(u_min > 0.0))
    throw ValidationError("beta_coefficient: u_min must be positive");
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw ValidationError("beta_coefficient: alpha must lie in (0, 2)");
  double p = 2.0 + alpha;
  return std::pow(0.5 * p * p * u_min, 1.0 / p);
}

CentralConfiguration find_central_configuration(
    const PotentialModel& model, const CentralConfigOptions& opts) {
  const MassSystem& sys = model.system;

  auto run_start = [&](int s) -> std::optional<Vec> {
    RandomStream rng = RandomStream::substream(opts.seed, s);
    Vec x0;
    try {
      x0 = random_collision_free_configuration(sys, rng,
                                               opts.min_start_separation, 1.0);
    } catch (const ValidationError&) {
      return std::nullopt;
    }
    auto xo = descend(model, x0, opts.max_iters);
    if (!xo) return std::nullopt;
    Vec x = *xo;
    newton_polish(model, x, opts.newton_iters, opts.tol);
    return x;
  };

  // Starts are independent; run them in parallel but merge in start order so
  // the result does not depend on scheduling.
  std::vector<std::optional<Vec>> results(opts.starts);
  int threads = thread_cap();
  if (threads <= 1 || opts.starts <= 1) {
    for (int s = 0; s < opts.starts; ++s) results[s] = run_start(s);
  } else {
    std::vector<std::future<std::optional<Vec>>> futs;
    futs.reserve(opts.starts);
    for (int s = 0; s < opts.starts; ++s) {
      futs.push_back(std::async(std::launch::deferred | std::launch::async,
                                run_start, s));
      if (static_cast<int>(futs.size()) >= threads || s == opts.starts - 1) {
        int base = s + 1 - static_cast<int>(futs.size());
        for (std::size_t k = 0; k < futs.size(); ++k)
          results[base + k] = futs[k].get();
        futs.clear();
      }
    }
  }

  std::optional<Vec> best;
  double best_u = 0.0;
  for (int s = 0; s < opts.starts; ++s) {
    if (!results[s]) continue;
    double u = potential_energy(model, *results[s]);
    if (!best || u < best_u) {
      best = results[s];
      best_u = u;
    }
  }
  if (!best)
    throw ConvergenceError(
        "central configuration search failed from every start", 0.0);

  Vec b = canonical_orientation(sys, *best);
  b = normalize_on_ellipsoid(sys, b);
  CentralConfiguration cc;
  cc.b_m = b;
  cc.u_min = potential_energy(model, b);
  cc.gradient_residual = criticality_residual(model, b);
  cc.converged = cc.gradient_residual <= opts.tol * std::max(1.0, cc.u_min);
  cc.beta = (model.alpha < 2.0) ? beta_coefficient(cc.u_min, model.alpha) : 0.0;
  if (!cc.converged)
    throw CentralConfigConvergenceError(
        "central configuration polish stalled at residual " +
            std::to_string(cc.gradient_residual),
        cc);
  return cc;
}

ClusterPartition cluster_partition(const MassSystem& sys, const Vec& a,
                                   double eps_cluster) {
  sys.check_shape(a, "cluster_partition");
  int n = sys.n_bodies();
  double amax = 0.0;
  for (int i = 0; i < n; ++i) amax = std::max(amax, sys.body(a, i).norm());
  double eps = eps_cluster >= 0.0 ? eps_cluster : 1e-8 * amax;

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((sys.body(a, i) - sys.body(a, j)).norm() <= eps)
        parent[find(i)] = find(j);

  ClusterPartition part;
  std::vector<int> root_class(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (root_class[r] < 0) {
      root_class[r] = static_cast<int>(part.classes.size());
      part.classes.emplace_back();
    }
    part.classes[root_class[r]].push_back(i);
  }
  for (auto& cls : part.classes) {
    double mk = 0.0;
    Vec rep = Vec::Zero(sys.dim());
    for (int i : cls) {
      mk += sys.mass(i);
      rep += sys.mass(i) * sys.body(a, i);
    }
    part.cluster_masses.push_back(mk);
    part.representative_velocities.push_back(rep / mk);
  }
  return part;
}

std::vector<ClusterBlock> clustered_central_configuration(
    const PotentialModel& model, const ClusterPartition& partition,
    const CentralConfigOptions& opts) {
  std::vector<ClusterBlock> blocks;
  for (std::size_t k = 0; k < partition.classes.size(); ++k) {
    ClusterBlock blk;
    blk.bodies = partition.classes[k];
    if (blk.bodies.size() >= 2) {
      std::vector<double> masses;
      for (int i : blk.bodies) masses.push_back(model.system.mass(i));
      PotentialModel sub(MassSystem(masses, model.system.dim()), model.alpha);
      sub.collision_eps_rel = model.collision_eps_rel;
      try {
        blk.cc = find_central_configuration(sub, opts);
      } catch (ConvergenceError& e) {
        throw ConvergenceError("cluster " + std::to_string(k) + ": " + e.what(),
                               e.best_residual);
      }
      blk.beta = blk.cc->beta;
    }
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

Vec assemble_parabolic_vector(const MassSystem& sys,
                              const ClusterPartition& partition,
                              const std::vector<ClusterBlock>& blocks) {
  Vec B = Vec::Zero(sys.dof());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const ClusterBlock& blk = blocks[k];
    if (!blk.cc) continue;
    MassSystem sub(
        [&] {
          std::vector<double> m;
          for (int i : blk.bodies) m.push_back(sys.mass(i));
          return m;
        }(),
        sys.dim());
    for (std::size_t l = 0; l < blk.bodies.size(); ++l)
      sys.body(B, blk.bodies[l]) =
          blk.beta * sub.body(blk.cc->b_m, static_cast<int>(l));
  }
  return B;
}

}  // namespace nbody

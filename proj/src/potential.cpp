#include "nbody/potential.hpp"

#include <cmath>
#include <mutex>

namespace nbody {

namespace {

void check_collision_free(const PotentialModel& model, const Vec& x) {
  const MassSystem& sys = model.system;
  auto [lo, hi] = min_max_mutual_distance(sys, x);
  double eps = model.collision_eps_rel * std::max(1.0, hi);
  if (lo <= eps) {
    // locate the offending pair for the error payload
    for (int i = 0; i < sys.n_bodies(); ++i)
      for (int j = i + 1; j < sys.n_bodies(); ++j)
        if ((sys.body(x, i) - sys.body(x, j)).norm() <= eps)
          throw SingularityError(i, j, lo);
  }
}

// Partial matchings of {0, ..., n-1}: disjoint unordered pairs plus
// singletons. These index the terms of the n-th derivative of f(|u|^2).
struct Matching {
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> singles;
};

void build_matchings(std::vector<int>& free_slots, Matching& current,
                     std::vector<Matching>& out) {
  if (free_slots.empty()) {
    out.push_back(current);
    return;
  }
  int a = free_slots.front();
  std::vector<int> rest(free_slots.begin() + 1, free_slots.end());

  current.singles.push_back(a);
  build_matchings(rest, current, out);
  current.singles.pop_back();

  for (std::size_t k = 0; k < rest.size(); ++k) {
    std::vector<int> rest2;
    for (std::size_t l = 0; l < rest.size(); ++l)
      if (l != k) rest2.push_back(rest[l]);
    current.pairs.emplace_back(a, rest[k]);
    build_matchings(rest2, current, out);
    current.pairs.pop_back();
  }
}

const std::vector<Matching>& matchings(int n) {
  static std::vector<std::vector<Matching>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(cache.size()) <= n) {
    int m = static_cast<int>(cache.size());
    std::vector<int> slots(m);
    for (int i = 0; i < m; ++i) slots[i] = i;
    Matching cur;
    std::vector<Matching> all;
    build_matchings(slots, cur, all);
    cache.push_back(std::move(all));
  }
  return cache[n];
}

// derivatives of f(s) = s^{-alpha/2} up to order n:
// f^{(k)}(s) = s^{-alpha/2 - k} * prod_{i<k} (-alpha/2 - i)
void radial_derivatives(double alpha, double s, int n, std::vector<double>& f) {
  f.resize(n + 1);
  f[0] = std::pow(s, -0.5 * alpha);
  for (int k = 1; k <= n; ++k) f[k] = f[k - 1] * (-0.5 * alpha - (k - 1)) / s;
}

}  // namespace

double potential_energy(const PotentialModel& model, const Vec& x) {
  const MassSystem& sys = model.system;
  sys.check_shape(x, "potential_energy");
  check_collision_free(model, x);
  double u = 0.0;
  for (int i = 0; i < sys.n_bodies(); ++i)
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      double r = (sys.body(x, i) - sys.body(x, j)).norm();
      u += sys.mass(i) * sys.mass(j) * std::pow(r, -model.alpha);
    }
  return u;
}

Vec potential_gradient(const PotentialModel& model, const Vec& x) {
  const MassSystem& sys = model.system;
  sys.check_shape(x, "potential_gradient");
  check_collision_free(model, x);
  Vec g = Vec::Zero(sys.dof());
  for (int i = 0; i < sys.n_bodies(); ++i)
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      Vec u = sys.body(x, i) - sys.body(x, j);
      double r2 = u.squaredNorm();
      double w = -model.alpha * sys.mass(i) * sys.mass(j) *
                 std::pow(r2, -0.5 * (model.alpha + 2.0));
      sys.body(g, i) += w * u;
      sys.body(g, j) -= w * u;
    }
  return g;
}

Vec mass_gradient(const PotentialModel& model, const Vec& x) {
  Vec g = potential_gradient(model, x);
  const MassSystem& sys = model.system;
  for (int i = 0; i < sys.n_bodies(); ++i) sys.body(g, i) /= sys.mass(i);
  return g;
}

Vec newton_acceleration(const PotentialModel& model, const Vec& x) {
  return mass_gradient(model, x);
}

Vec directional_derivative(const PotentialModel& model, const Vec& a,
                           const std::vector<Vec>& dirs) {
  const MassSystem& sys = model.system;
  sys.check_shape(a, "directional_derivative");
  int q = static_cast<int>(dirs.size());
  if (q < 1)
    throw ValidationError("directional_derivative: need at least one direction");
  if (q > model.q_max)
    throw ValidationError(
        "directional_derivative: order q = " + std::to_string(q) +
        " exceeds q_max = " + std::to_string(model.q_max));
  for (const Vec& v : dirs) sys.check_shape(v, "directional_derivative");
  check_collision_free(model, a);

  // slot 0 is the free slot, slots 1..q are the supplied directions
  const auto& ms = matchings(q + 1);
  std::vector<double> f;
  Vec out = Vec::Zero(sys.dof());
  Eigen::MatrixXd vv(q + 1, q + 1);  // scalar products among directions
  Vec uv(q + 1);                     // <u, v_l>

  for (int i = 0; i < sys.n_bodies(); ++i) {
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      Vec u = sys.body(a, i) - sys.body(a, j);
      double s = u.squaredNorm();
      radial_derivatives(model.alpha, s, q + 1, f);
      for (int l = 1; l <= q; ++l) {
        Vec nu = sys.body(dirs[l - 1], i) - sys.body(dirs[l - 1], j);
        uv[l] = u.dot(nu);
        for (int m = 1; m <= l; ++m) {
          Vec nm = sys.body(dirs[m - 1], i) - sys.body(dirs[m - 1], j);
          vv(l, m) = vv(m, l) = nu.dot(nm);
        }
      }

      Vec g = Vec::Zero(sys.dim());
      for (const Matching& M : ms) {
        int order = static_cast<int>(M.pairs.size() + M.singles.size());
        double scal = f[order];
        int free_partner = -1;  // slot paired with the free slot, if any
        bool free_single = false;
        for (auto [p, r] : M.pairs) {
          if (p == 0) {
            free_partner = r;
          } else {
            scal *= 2.0 * vv(p, r);
          }
        }
        for (int l : M.singles) {
          if (l == 0) {
            free_single = true;
          } else {
            scal *= 2.0 * uv[l];
          }
        }
        if (free_single) {
          g += (2.0 * scal) * u;
        } else {
          g += (2.0 * scal) *
               (sys.body(dirs[free_partner - 1], i) -
                sys.body(dirs[free_partner - 1], j));
        }
      }
      g *= sys.mass(i) * sys.mass(j);
      sys.body(out, i) += g;
      sys.body(out, j) -= g;
    }
  }
  return out;
}

Mat hessian_matrix(const PotentialModel& model, const Vec& x) {
  const MassSystem& sys = model.system;
  sys.check_shape(x, "hessian_matrix");
  check_collision_free(model, x);
  int d = sys.dim();
  Mat H = Mat::Zero(sys.dof(), sys.dof());
  std::vector<double> f;
  for (int i = 0; i < sys.n_bodies(); ++i) {
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      Vec u = sys.body(x, i) - sys.body(x, j);
      double s = u.squaredNorm();
      radial_derivatives(model.alpha, s, 2, f);
      Mat blk = sys.mass(i) * sys.mass(j) *
                (2.0 * f[1] * Mat::Identity(d, d) +
                 4.0 * f[2] * (u * u.transpose()));
      H.block(i * d, i * d, d, d) += blk;
      H.block(j * d, j * d, d, d) += blk;
      H.block(i * d, j * d, d, d) -= blk;
      H.block(j * d, i * d, d, d) -= blk;
    }
  }
  return H;
}

}  // namespace nbody

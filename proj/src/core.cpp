#include "nbody/core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nbody {

namespace {

std::string singularity_message(int i, int j, double sep, double time,
                                long node) {
  std::ostringstream os;
  os << "near-collision of bodies " << i << " and " << j
     << " (separation " << sep << ")";
  if (time >= 0.0) os << " at t = " << time;
  if (node >= 0) os << " (grid node " << node << ")";
  return os.str();
}

}  // namespace

SingularityError::SingularityError(int i, int j, double separation, double time,
                                   long node)
    : std::runtime_error(singularity_message(i, j, separation, time, node)),
      body_i(i),
      body_j(j),
      separation(separation),
      time(time),
      node(node) {}

ResonanceError::ResonanceError(int k, double alpha)
    : std::runtime_error("resonant exponent: k*alpha = 1 for k = " +
                         std::to_string(k) + " (alpha = " +
                         std::to_string(alpha) +
                         "); the t^{1-k*alpha} correction is undefined"),
      k(k),
      alpha(alpha) {}

CollisionApproachError::CollisionApproachError(double blow_up_time)
    : std::runtime_error("step size underflow near collision; estimated "
                         "blow-up time " +
                         std::to_string(blow_up_time)),
      blow_up_time(blow_up_time) {}

MassSystem::MassSystem(std::vector<double> masses, int dim)
    : masses_(std::move(masses)), dim_(dim) {
  if (n_bodies() < 2) throw ValidationError("need at least 2 bodies");
  if (dim_ < 2) throw ValidationError("dimension must be >= 2");
  total_mass_ = 0.0;
  for (double m : masses_) {
    if (!(m > 0.0)) throw ValidationError("masses must be strictly positive");
    total_mass_ += m;
  }
}

void MassSystem::check_shape(const Vec& x, const char* what) const {
  if (x.size() != dof()) {
    std::ostringstream os;
    os << what << ": expected " << dof() << " coordinates, got " << x.size();
    throw ValidationError(os.str());
  }
}

double mass_inner_product(const MassSystem& sys, const Vec& x, const Vec& y) {
  sys.check_shape(x, "mass_inner_product");
  sys.check_shape(y, "mass_inner_product");
  double acc = 0.0;
  for (int i = 0; i < sys.n_bodies(); ++i)
    acc += sys.mass(i) * sys.body(x, i).dot(sys.body(y, i));
  return acc;
}

double mass_norm_sq(const MassSystem& sys, const Vec& x) {
  return mass_inner_product(sys, x, x);
}

double mass_norm(const MassSystem& sys, const Vec& x) {
  return std::sqrt(mass_norm_sq(sys, x));
}

double dual_mass_norm(const MassSystem& sys, const Vec& w) {
  sys.check_shape(w, "dual_mass_norm");
  double acc = 0.0;
  for (int i = 0; i < sys.n_bodies(); ++i)
    acc += sys.body(w, i).squaredNorm() / sys.mass(i);
  return std::sqrt(acc);
}

Vec barycenter(const MassSystem& sys, const Vec& x) {
  sys.check_shape(x, "barycenter");
  Vec c = Vec::Zero(sys.dim());
  for (int i = 0; i < sys.n_bodies(); ++i) c += sys.mass(i) * sys.body(x, i);
  return c / sys.total_mass();
}

Vec project_center_of_mass(const MassSystem& sys, const Vec& x) {
  Vec c = barycenter(sys, x);
  Vec out = x;
  for (int i = 0; i < sys.n_bodies(); ++i) sys.body(out, i) -= c;
  return out;
}

bool is_barycentered(const MassSystem& sys, const Vec& x, double tol_factor) {
  double scale = sys.total_mass() * std::max(1.0, x.cwiseAbs().maxCoeff());
  Vec c = barycenter(sys, x) * sys.total_mass();
  return c.cwiseAbs().maxCoeff() <= tol_factor * scale;
}

std::pair<double, double> min_max_mutual_distance(const MassSystem& sys,
                                                  const Vec& x) {
  sys.check_shape(x, "min_max_mutual_distance");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int i = 0; i < sys.n_bodies(); ++i) {
    for (int j = i + 1; j < sys.n_bodies(); ++j) {
      double r = (sys.body(x, i) - sys.body(x, j)).norm();
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  return {lo, hi};
}

double collision_threshold(const MassSystem& sys, const Vec& x,
                           double eps_rel) {
  auto [lo, hi] = min_max_mutual_distance(sys, x);
  (void)lo;
  return eps_rel * std::max(1.0, hi);
}

bool is_collision_free(const MassSystem& sys, const Vec& x, double eps_rel) {
  auto [lo, hi] = min_max_mutual_distance(sys, x);
  return lo > eps_rel * std::max(1.0, hi);
}

std::uint64_t RandomStream::next_u64() {
  // splitmix64
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

RandomStream RandomStream::substream(std::uint64_t seed, std::uint64_t index) {
  RandomStream mixer(seed ^ (0xa0761d6478bd642fULL * (index + 1)));
  return RandomStream(mixer.next_u64());
}

Vec random_collision_free_configuration(const MassSystem& sys,
                                        RandomStream& rng, double min_sep,
                                        double norm) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vec x(sys.dof());
    for (int k = 0; k < sys.dof(); ++k) x[k] = rng.normal();
    x = project_center_of_mass(sys, x);
    double nrm = mass_norm(sys, x);
    if (nrm <= 0.0) continue;
    x *= norm / nrm;
    auto [lo, hi] = min_max_mutual_distance(sys, x);
    (void)hi;
    if (lo >= min_sep) return x;
  }
  throw ValidationError(
      "could not sample a configuration with the requested separation");
}

}  // namespace nbody

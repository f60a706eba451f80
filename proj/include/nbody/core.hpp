#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nbody {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Two bodies closer than the collision threshold. Carries the offending pair
/// so callers (optimizers, integrators) can report or back off.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(int i, int j, double separation, double time = -1.0,
                   long node = -1);
  int body_i;
  int body_j;
  double separation;
  double time;  // -1 when not tied to a time
  long node;    // -1 when not tied to a grid node
};

/// kα = 1 for a k needed by the correction recursion.
class ResonanceError : public std::runtime_error {
 public:
  ResonanceError(int k, double alpha);
  int k;
  double alpha;
};

/// An iterative solve ran out of iterations. Carries the best value reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& msg, double best_residual)
      : std::runtime_error(msg), best_residual(best_residual) {}
  double best_residual;
};

/// Adaptive integration drove the step size to zero, almost surely because a
/// pair separation is collapsing.
class CollisionApproachError : public std::runtime_error {
 public:
  explicit CollisionApproachError(double blow_up_time);
  double blow_up_time;
};

/// Input fails a precondition (regime, exponent range, shape, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Trajectory cannot be classified (e.g. not expansive).
class ClassificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Mass system and configurations
// ---------------------------------------------------------------------------

/// Masses plus ambient dimension. A configuration is stored as a flat
/// body-major vector of length N*d: coordinates of body i occupy
/// [i*d, (i+1)*d).
class MassSystem {
 public:
  MassSystem(std::vector<double> masses, int dim);

  int n_bodies() const { return static_cast<int>(masses_.size()); }
  int dim() const { return dim_; }
  int dof() const { return n_bodies() * dim_; }
  double mass(int i) const { return masses_[i]; }
  const std::vector<double>& masses() const { return masses_; }
  double total_mass() const { return total_mass_; }

  Eigen::VectorBlock<const Vec> body(const Vec& x, int i) const {
    return x.segment(i * dim_, dim_);
  }
  Eigen::VectorBlock<Vec> body(Vec& x, int i) const {
    return x.segment(i * dim_, dim_);
  }

  void check_shape(const Vec& x, const char* what) const;

 private:
  std::vector<double> masses_;
  int dim_;
  double total_mass_;
};

/// <x,y>_M = sum_i m_i <x_i, y_i>
double mass_inner_product(const MassSystem& sys, const Vec& x, const Vec& y);
double mass_norm_sq(const MassSystem& sys, const Vec& x);
double mass_norm(const MassSystem& sys, const Vec& x);

/// Dual norm ||w||_{M^-1} = sqrt(sum |w_i|^2 / m_i), the natural norm for
/// gradients/forces.
double dual_mass_norm(const MassSystem& sys, const Vec& w);

/// Barycenter (sum m_i r_i) / (sum m_i) as a d-vector.
Vec barycenter(const MassSystem& sys, const Vec& x);

/// Shift every body by -barycenter. Idempotent, keeps mutual distances.
Vec project_center_of_mass(const MassSystem& sys, const Vec& x);

bool is_barycentered(const MassSystem& sys, const Vec& x,
                     double tol_factor = 1e-12);

/// (min, max) over pairs i<j of Euclidean separations.
std::pair<double, double> min_max_mutual_distance(const MassSystem& sys,
                                                  const Vec& x);

/// Collision threshold for a configuration: eps_rel * max(1, R(x)) with
/// R(x) the largest mutual distance. The max(1, .) floor keeps the test
/// meaningful for N = 2 where min and max coincide.
double collision_threshold(const MassSystem& sys, const Vec& x,
                           double eps_rel = 1e-9);

bool is_collision_free(const MassSystem& sys, const Vec& x,
                       double eps_rel = 1e-9);

// ---------------------------------------------------------------------------
// Deterministic random stream
// ---------------------------------------------------------------------------

/// splitmix64-based stream. Used instead of <random> distributions so that
/// seeded runs produce identical bytes on any platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();              // [0,1)
  double normal();               // standard Gaussian (Box-Muller)
  /// Independent substream, e.g. one per multi-start index.
  static RandomStream substream(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Random zero-barycenter configuration with all pair separations >= min_sep,
/// rescaled so that ||x||_M = norm. Resamples internally; throws after too
/// many rejections.
Vec random_collision_free_configuration(const MassSystem& sys,
                                        RandomStream& rng, double min_sep,
                                        double norm);

}  // namespace nbody

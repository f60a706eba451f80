#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbody/central_config.hpp"
#include "nbody/potential.hpp"

#include <cmath>

using namespace nbody;

namespace {

Vec make_vec(std::initializer_list<double> v) {
  Vec x(static_cast<long>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

PotentialModel two_body(double alpha, double m = 1.0) {
  return PotentialModel(MassSystem({m, m}, 2), alpha);
}

Vec two_body_sep2() { return make_vec({1, 0, -1, 0}); }

Vec random_config(const MassSystem& sys, RandomStream& rng) {
  return random_collision_free_configuration(sys, rng, 0.5, 2.0);
}

}  // namespace

TEST_CASE("potential energy on hand examples") {
  CHECK(potential_energy(two_body(1.0), two_body_sep2()) ==
        doctest::Approx(0.5));
  CHECK(potential_energy(two_body(2.0), two_body_sep2()) ==
        doctest::Approx(0.25));

  PotentialModel tri(MassSystem({1, 1, 1}, 2), 1.0);
  double h = std::sqrt(3.0) / 2.0;
  Vec x = make_vec({0, 0, 1, 0, 0.5, h});
  CHECK(potential_energy(tri, x) == doctest::Approx(3.0));
}

TEST_CASE("potential energy rejects collisions") {
  PotentialModel tri(MassSystem({1, 1, 1}, 2), 1.0);
  Vec x = make_vec({0, 0, 0, 0, 3, 0});
  CHECK_THROWS_AS(potential_energy(tri, x), SingularityError);
  try {
    potential_energy(tri, x);
  } catch (const SingularityError& e) {
    CHECK(e.body_i == 0);
    CHECK(e.body_j == 1);
  }
}

TEST_CASE("gradient: hand value, finite differences, homogeneity, third law") {
  PotentialModel model = two_body(2.0);
  Vec a = two_body_sep2();
  Vec g = potential_gradient(model, a);
  CHECK(g[0] == doctest::Approx(-0.25));
  CHECK(g[1] == doctest::Approx(0.0));

  // finite-difference cross-check of the pair formula
  double h = 1e-6;
  for (int k = 0; k < 4; ++k) {
    Vec e = Vec::Zero(4);
    e[k] = 1.0;
    double fd = (potential_energy(model, a + h * e) -
                 potential_energy(model, a - h * e)) /
                (2.0 * h);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-8));
  }

  RandomStream rng(11);
  MassSystem sys({1.0, 2.0, 0.7}, 3);
  PotentialModel model3(sys, 1.3);
  Vec x = random_config(sys, rng);
  Vec gx = potential_gradient(model3, x);
  // degree -(1+alpha) homogeneity
  Vec g2 = potential_gradient(model3, Vec(2.0 * x));
  double scale = std::pow(2.0, -(1.0 + model3.alpha));
  CHECK((g2 - scale * gx).cwiseAbs().maxCoeff() <=
        1e-12 * gx.cwiseAbs().maxCoeff());
  // translation invariance: forces sum to zero
  Vec total = Vec::Zero(3);
  for (int i = 0; i < 3; ++i) total += sys.body(gx, i);
  CHECK(total.cwiseAbs().maxCoeff() <= 1e-13 * gx.cwiseAbs().maxCoeff());
}

TEST_CASE("mass gradient") {
  PotentialModel model = two_body(1.0);
  Vec a = two_body_sep2();
  CHECK((mass_gradient(model, a) - potential_gradient(model, a))
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0));

  PotentialModel uneven(MassSystem({2.0, 1.0}, 2), 1.0);
  Vec g = potential_gradient(uneven, a);
  Vec mg = mass_gradient(uneven, a);
  CHECK(mg[0] == doctest::Approx(0.5 * g[0]));
  CHECK(mg[2] == doctest::Approx(g[2]));
  // M * mass_gradient == gradient
  CHECK(2.0 * mg[0] == doctest::Approx(g[0]).epsilon(1e-14));
}

TEST_CASE("newton acceleration") {
  Vec a1 = newton_acceleration(two_body(1.0), two_body_sep2());
  CHECK(a1[0] == doctest::Approx(-0.25));  // -(2,0)/8
  Vec a2 = newton_acceleration(two_body(2.0), two_body_sep2());
  CHECK(a2[0] == doctest::Approx(-0.25));
  CHECK(a2[0] == doctest::Approx(-a2[2]));  // equal masses: antisymmetric
}

TEST_CASE("directional derivative: Euler identity and symmetry") {
  RandomStream rng(21);
  MassSystem sys({1.0, 1.5, 0.5}, 2);
  PotentialModel model(sys, 0.8);
  Vec a = random_config(sys, rng);

  // grad U homogeneous of degree -(1+alpha): grad^2 U(a) a = -(1+alpha) grad U(a)
  Vec lhs = directional_derivative(model, a, {a});
  Vec rhs = -(1.0 + model.alpha) * potential_gradient(model, a);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <=
        1e-11 * rhs.cwiseAbs().maxCoeff());

  Vec v = random_config(sys, rng), w = random_config(sys, rng);
  Vec vw = directional_derivative(model, a, {v, w});
  Vec wv = directional_derivative(model, a, {w, v});
  CHECK((vw - wv).cwiseAbs().maxCoeff() <= 1e-12 * vw.cwiseAbs().maxCoeff());
}

TEST_CASE("directional derivative q=1 matches finite differences") {
  RandomStream rng(31);
  MassSystem sys({1.0, 2.0}, 3);
  PotentialModel model(sys, 1.4);
  for (int trial = 0; trial < 10; ++trial) {
    Vec a = random_config(sys, rng);
    Vec v = random_config(sys, rng);
    Vec analytic = directional_derivative(model, a, {v});
    Vec fd = (potential_gradient(model, a + 3e-6 * v) -
              potential_gradient(model, a - 3e-6 * v)) /
             6e-6;
    CHECK((analytic - fd).cwiseAbs().maxCoeff() <=
          1e-6 * analytic.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("nested finite-difference ladder up to order 4") {
  RandomStream rng(41);
  for (int bodies : {2, 3}) {
    std::vector<double> masses(bodies, 1.0);
    if (bodies == 3) masses[2] = 2.0;
    MassSystem sys(masses, 2);
    PotentialModel model(sys, 0.6);
    Vec a = random_config(sys, rng);
    std::vector<Vec> dirs;
    for (int q = 1; q <= 4; ++q) dirs.push_back(random_config(sys, rng));

    for (int q = 2; q <= 4; ++q) {
      std::vector<Vec> low(dirs.begin(), dirs.begin() + (q - 1));
      const Vec& last = dirs[q - 1];
      double h = 1e-5;
      Vec fd = (directional_derivative(model, a + h * last, low) -
                directional_derivative(model, a - h * last, low)) /
               (2.0 * h);
      std::vector<Vec> full(dirs.begin(), dirs.begin() + q);
      Vec analytic = directional_derivative(model, a, full);
      CHECK((analytic - fd).cwiseAbs().maxCoeff() <=
            1e-5 * std::max(1.0, analytic.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("homogeneity chain for U, grad U, and the Hessian action") {
  RandomStream rng(51);
  MassSystem sys({1.0, 0.5, 2.0}, 2);
  PotentialModel model(sys, 1.1);
  Vec x = random_config(sys, rng);
  Vec v = random_config(sys, rng);
  for (double lam : {0.5, 2.0, 10.0}) {
    Vec lx = lam * x;
    double u_ratio = potential_energy(model, lx) / potential_energy(model, x);
    CHECK(u_ratio ==
          doctest::Approx(std::pow(lam, -model.alpha)).epsilon(1e-10));

    Vec g = potential_gradient(model, x);
    Vec gl = potential_gradient(model, lx);
    CHECK((gl - std::pow(lam, -(1.0 + model.alpha)) * g)
              .cwiseAbs()
              .maxCoeff() <= 1e-10 * gl.cwiseAbs().maxCoeff());

    Vec hv = directional_derivative(model, x, {v});
    Vec hvl = directional_derivative(model, lx, {v});
    CHECK((hvl - std::pow(lam, -(2.0 + model.alpha)) * hv)
              .cwiseAbs()
              .maxCoeff() <= 1e-10 * hvl.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("Hessian lower bound at the scaled central configuration") {
  // <grad^2 U(beta b_m) phi, phi> >= -2 alpha/(2+alpha)^2 ||phi||_M^2, the
  // t = 1 instance of the bound behind the parabolic estimates
  for (double alpha : {0.5, 1.0, 1.5}) {
    MassSystem sys({1.0, 1.0, 1.0}, 2);
    PotentialModel model(sys, alpha);
    CentralConfigOptions opts;
    opts.starts = 8;
    CentralConfiguration cc = find_central_configuration(model, opts);
    Vec x = cc.beta * cc.b_m;
    double bound = -2.0 * alpha / ((2.0 + alpha) * (2.0 + alpha));

    RandomStream rng(61);
    for (int trial = 0; trial < 100; ++trial) {
      Vec phi(sys.dof());
      for (int k = 0; k < sys.dof(); ++k) phi[k] = rng.normal();
      phi = project_center_of_mass(sys, phi);
      double quad = directional_derivative(model, x, {phi}).dot(phi);
      double norm2 = mass_norm_sq(sys, phi);
      CHECK(quad >= bound * norm2 - 1e-10 * norm2);
    }
  }
}

TEST_CASE("hessian_matrix agrees with the directional derivative") {
  RandomStream rng(71);
  MassSystem sys({1.0, 3.0}, 2);
  PotentialModel model(sys, 1.0);
  Vec a = random_config(sys, rng);
  Mat H = hessian_matrix(model, a);
  for (int trial = 0; trial < 5; ++trial) {
    Vec v(sys.dof());
    for (int k = 0; k < sys.dof(); ++k) v[k] = rng.normal();
    Vec hv = directional_derivative(model, a, {v});
    CHECK((H * v - hv).cwiseAbs().maxCoeff() <=
          1e-12 * hv.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("order cap") {
  MassSystem sys({1.0, 1.0}, 2);
  PotentialModel model(sys, 0.3);
  Vec a = two_body_sep2();
  std::vector<Vec> dirs(model.q_max + 1, a);
  CHECK_THROWS_AS(directional_derivative(model, a, dirs), ValidationError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbody/core.hpp"

using namespace nbody;

namespace {

Vec make_vec(std::initializer_list<double> v) {
  Vec x(static_cast<long>(v.size()));
  int i = 0;
  for (double c : v) x[i++] = c;
  return x;
}

}  // namespace

TEST_CASE("mass inner product on hand examples") {
  MassSystem equal({1.0, 1.0}, 2);
  Vec x = make_vec({1, 0, -1, 0});
  CHECK(mass_inner_product(equal, x, x) == doctest::Approx(2.0));

  MassSystem weighted({2.0, 3.0}, 2);
  Vec y = make_vec({1, 0, 0, 1});
  CHECK(mass_inner_product(weighted, y, y) == doctest::Approx(5.0));

  Vec u = make_vec({1, 0, 0, 0});
  Vec v = make_vec({0, 1, 0, 0});
  CHECK(mass_inner_product(weighted, u, v) == doctest::Approx(0.0));
}

TEST_CASE("mass inner product shape mismatch") {
  MassSystem sys({1.0, 1.0}, 2);
  Vec x = make_vec({1, 0, -1, 0});
  Vec bad = make_vec({1, 0, 0});
  CHECK_THROWS_AS(mass_inner_product(sys, x, bad), ValidationError);
}

TEST_CASE("barycenter projection") {
  MassSystem equal({1.0, 1.0}, 2);
  Vec x = project_center_of_mass(equal, make_vec({2, 0, 0, 0}));
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[2] == doctest::Approx(-1.0));

  // idempotence
  Vec y = project_center_of_mass(equal, x);
  CHECK((y - x).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  MassSystem uneven({1.0, 3.0}, 2);
  Vec z = project_center_of_mass(uneven, make_vec({4, 0, 0, 0}));
  CHECK(z[0] == doctest::Approx(3.0));
  CHECK(z[2] == doctest::Approx(-1.0));
  CHECK(is_barycentered(uneven, z));
}

TEST_CASE("min/max mutual distance") {
  MassSystem two({1.0, 1.0}, 2);
  auto [lo2, hi2] = min_max_mutual_distance(two, make_vec({1, 0, -1, 0}));
  CHECK(lo2 == doctest::Approx(2.0));
  CHECK(hi2 == doctest::Approx(2.0));

  MassSystem three({1.0, 1.0, 1.0}, 2);
  double h = std::sqrt(3.0) / 2.0;
  Vec tri = make_vec({0, 0, 1, 0, 0.5, h});
  auto [lo3, hi3] = min_max_mutual_distance(three, tri);
  CHECK(lo3 == doctest::Approx(1.0));
  CHECK(hi3 == doctest::Approx(1.0));

  Vec collide = make_vec({0, 0, 0, 0, 3, 0});
  auto [lo, hi] = min_max_mutual_distance(three, collide);
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(3.0));
  CHECK_FALSE(is_collision_free(three, collide));
}

TEST_CASE("mass norm positivity over random configurations") {
  MassSystem sys({0.5, 1.0, 2.5}, 3);
  RandomStream rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x(sys.dof());
    for (int k = 0; k < sys.dof(); ++k) x[k] = 3.0 * rng.normal();
    double n2 = mass_norm_sq(sys, x);
    CHECK(n2 >= 0.0);
    if (x.cwiseAbs().maxCoeff() > 0.0) CHECK(n2 > 0.0);
  }
  CHECK(mass_norm(sys, Vec::Zero(sys.dof())) == 0.0);
}

TEST_CASE("Cauchy-Schwarz in the mass metric") {
  MassSystem sys({1.0, 2.0, 0.3}, 2);
  RandomStream rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    Vec x(sys.dof()), y(sys.dof());
    for (int k = 0; k < sys.dof(); ++k) {
      x[k] = rng.normal();
      y[k] = rng.normal();
    }
    double lhs = std::abs(mass_inner_product(sys, x, y));
    double rhs = mass_norm(sys, x) * mass_norm(sys, y);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("barycenter projection preserves pairwise distances") {
  MassSystem sys({1.0, 4.0, 0.25, 2.0}, 3);
  RandomStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(sys.dof());
    for (int k = 0; k < sys.dof(); ++k) x[k] = 10.0 * rng.normal();
    Vec y = project_center_of_mass(sys, x);
    for (int i = 0; i < sys.n_bodies(); ++i)
      for (int j = i + 1; j < sys.n_bodies(); ++j) {
        double before = (sys.body(x, i) - sys.body(x, j)).norm();
        double after = (sys.body(y, i) - sys.body(y, j)).norm();
        CHECK(after == doctest::Approx(before).epsilon(1e-12));
      }
  }
}

TEST_CASE("system validation") {
  CHECK_THROWS_AS(MassSystem({1.0}, 2), ValidationError);
  CHECK_THROWS_AS(MassSystem({1.0, -1.0}, 2), ValidationError);
  CHECK_THROWS_AS(MassSystem({1.0, 1.0}, 1), ValidationError);
}

TEST_CASE("random stream is deterministic and seed-sensitive") {
  RandomStream a(123), b(123), c(124);
  for (int i = 0; i < 32; ++i) {
    double va = a.uniform();
    CHECK(va == b.uniform());
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  bool differs = false;
  RandomStream a2(123);
  for (int i = 0; i < 32; ++i) differs |= (a2.uniform() != c.uniform());
  CHECK(differs);
}

TEST_CASE("random collision-free configurations meet the request") {
  MassSystem sys({1.0, 1.0, 2.0}, 2);
  RandomStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x = random_collision_free_configuration(sys, rng, 0.3, 2.0);
    CHECK(mass_norm(sys, x) == doctest::Approx(2.0));
    CHECK(is_barycentered(sys, x));
    auto [lo, hi] = min_max_mutual_distance(sys, x);
    (void)hi;
    CHECK(lo >= 0.3);
  }
}

#include "hsalg/algebroid.hpp"
#include "hsalg/errors.hpp"
#include "hsalg/hypersurface.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace hsalg;

namespace {

std::vector<HypersurfacePatch> all_presets(int n) {
  std::vector<HypersurfacePatch> out;
  for (const auto& name : preset_names()) {
    if (name == "torus" && n != 2) continue;
    out.push_back(preset(name, n));
  }
  return out;
}

}  // namespace

TEST_SUITE("hypersurface") {
  TEST_CASE("chart validation and indexing") {
    CHECK_THROWS_AS(Chart(Vec::Constant(2, 1.0), Vec::Constant(2, 0.0), 5), InvalidArgument);
    CHECK_THROWS_AS(Chart(Vec::Zero(2), Vec::Ones(2), 1), InvalidArgument);
    const Chart c(Vec::Zero(2), Vec::Ones(2), std::vector<int>{3, 5});
    CHECK(c.node_count() == 15);
    CHECK(c.spacing(0) == doctest::Approx(0.5));
    CHECK(c.spacing(1) == doctest::Approx(0.25));
    for (int k = 0; k < c.node_count(); ++k) CHECK(c.flatten(c.unflatten(k)) == k);
    // first axis slowest
    CHECK(c.unflatten(5) == std::vector<int>{1, 0});
    CHECK((c.node({2, 4}) - Vec::Ones(2)).norm() == 0.0);
    CHECK(c.contains(c.center()));
    CHECK_FALSE(c.contains(Vec::Constant(2, 1.5)));
  }

  TEST_CASE("plane jacobian and normal") {
    const HypersurfacePatch plane = preset("plane", 2);
    Mat expected = Mat::Zero(3, 2);
    expected(0, 0) = expected(1, 1) = 1.0;
    CHECK((jacobian(plane, Vec::Constant(2, 0.3)) - expected).norm() == 0.0);
    CHECK((gauss_map(plane, Vec::Zero(2)) - Vec::Unit(3, 2)).norm() < 1e-15);
    const HypersurfacePatch flipped("plane-", plane.chart(), [](const Vec& u) {
      Vec x(3);
      x << u, 0.0;
      return x;
    }, -1);
    CHECK((gauss_map(flipped, Vec::Zero(2)) + Vec::Unit(3, 2)).norm() < 1e-12);
  }

  TEST_CASE("sphere jacobian: SPD metric and finite differences") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    const HypersurfacePatch numeric = sphere.without_derivatives();
    CHECK_FALSE(numeric.has_analytic_jacobian());
    for (int i = 0; i < 20; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 100 + i);
      CHECK(classical_first_form(sphere, u).llt().info() == Eigen::Success);
      CHECK((jacobian(sphere, u) - jacobian(numeric, u)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("rank deficiency is reported") {
    const Chart chart(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 5);
    const HypersurfacePatch pinched("pinched", chart, [](const Vec& u) {
      Vec x(3);
      x << u(0), u(0), 0.0;
      return x;
    });
    CHECK_THROWS_AS(jacobian(pinched, Vec::Zero(2)), RankDeficient);
    CHECK_THROWS_AS(gauss_map(pinched, Vec::Zero(2)), RankDeficient);
  }

  TEST_CASE("unit sphere: outward normal is the position") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    for (int i = 0; i < 20; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 200 + i);
      const Vec x = sphere.point(u);
      CHECK((gauss_map(sphere, u) - x.normalized()).norm() < 1e-10);
    }
  }

  TEST_CASE("normal is orthogonal to the tangent space on every preset") {
    for (int n : {1, 2, 3}) {
      for (const auto& patch : all_presets(n)) {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 20; ++i) {
          const Vec u = random_interior_point(patch.chart(), 300 + i);
          const Vec w = oracle::random_vec(n, rng);
          CHECK(std::abs(gauss_map(patch, u).dot(jacobian(patch, u) * w)) < 1e-10);
          CHECK(gauss_map(patch, u).norm() == doctest::Approx(1.0).epsilon(1e-14));
        }
      }
    }
  }

  TEST_CASE("first forms") {
    CHECK((classical_first_form(preset("plane", 2), Vec::Constant(2, 0.4)) - Mat::Identity(2, 2)).norm() == 0.0);
    const HypersurfacePatch sphere = preset("sphere", 2);
    for (int i = 0; i < 10; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 400 + i);
      CHECK((classical_first_form(sphere, u) - oracle::sphere_metric(u(0))).cwiseAbs().maxCoeff() < 1e-10);
    }
    // J = [[1,0],[0,1],[u1,u2]] at the origin
    CHECK((classical_first_form(preset("graph", 2), Vec::Zero(2)) - Mat::Identity(2, 2)).norm() < 1e-15);
  }

  TEST_CASE("second forms") {
    CHECK(classical_second_form(preset("plane", 2), Vec::Constant(2, -0.2)).norm() == 0.0);
    const HypersurfacePatch sphere = preset("sphere", 2);
    for (int i = 0; i < 10; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 500 + i);
      CHECK((classical_second_form(sphere, u) + classical_first_form(sphere, u)).cwiseAbs().maxCoeff() < 1e-10);
    }
    for (double R : {0.5, 1.0, 3.0}) {
      const HypersurfacePatch cyl = preset("cylinder", 2, {{"R", R}});
      const Vec u = random_interior_point(cyl.chart(), 600);
      const Mat shape = classical_first_form(cyl, u).inverse() * classical_second_form(cyl, u);
      Eigen::EigenSolver<Mat> es(shape);
      std::vector<double> k{es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
      std::sort(k.begin(), k.end());
      CHECK(k[0] == doctest::Approx(-1.0 / R).epsilon(1e-10));
      CHECK(std::abs(k[1]) < 1e-10);
    }
  }

  TEST_CASE("finite-difference second forms are symmetric and close to analytic") {
    for (int n : {1, 2, 3}) {
      for (const auto& patch : all_presets(n)) {
        const HypersurfacePatch numeric = patch.without_derivatives();
        for (int i = 0; i < 10; ++i) {
          const Vec u = random_interior_point(patch.chart(), 700 + i);
          const Mat II = classical_second_form(numeric, u);
          CHECK((II - II.transpose()).cwiseAbs().maxCoeff() < 1e-8);
          CHECK((II - classical_second_form(patch, u)).cwiseAbs().maxCoeff() < 1e-5);
        }
      }
    }
  }

  TEST_CASE("Gauss curvature of spheres") {
    for (double R : {0.5, 1.0, 2.0}) {
      const HypersurfacePatch sphere = preset("sphere", 2, {{"R", R}});
      double worst = 0.0;
      for (int i = 0; i < 100; ++i) {
        const Vec u = random_interior_point(sphere.chart(), 800 + i);
        const double K = classical_second_form(sphere, u).determinant() / classical_first_form(sphere, u).determinant();
        worst = std::max(worst, std::abs(K - 1.0 / (R * R)));
      }
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("preset defining equations") {
    for (int n : {1, 2, 3}) {
      const HypersurfacePatch sphere = preset("sphere", n);
      for (int i = 0; i < 20; ++i) {
        CHECK(sphere.point(random_interior_point(sphere.chart(), 900 + i)).norm() == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
    const HypersurfacePatch torus = preset("torus", 2);
    for (int i = 0; i < 20; ++i) {
      const Vec x = torus.point(random_interior_point(torus.chart(), 950 + i));
      const double rho = std::hypot(x(0), x(1)) - 2.0;
      CHECK(rho * rho + x(2) * x(2) == doctest::Approx(0.25).epsilon(1e-13));
    }
    const HypersurfacePatch graph = preset("graph", 2, {{"a", 0.7}});
    const Vec u = Vec::Constant(2, 0.3);
    const Vec x = graph.point(u);
    CHECK((x.head(2) - u).norm() == 0.0);
    CHECK(x(2) == doctest::Approx(0.7 * u.squaredNorm() / 2.0));
  }

  TEST_CASE("sphere chart avoids the poles") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    CHECK(sphere.chart().lower()(0) == doctest::Approx(0.2));
    CHECK(sphere.chart().upper()(0) == doctest::Approx(M_PI - 0.2));
  }

  TEST_CASE("presets: analytic derivatives, orientation, errors") {
    for (int n : {1, 2, 3}) {
      for (const auto& patch : all_presets(n)) {
        CHECK(patch.has_analytic_jacobian());
        CHECK(patch.has_analytic_hessian());
      }
    }
    // outward: nu points away from the centre
    const HypersurfacePatch cyl = preset("cylinder", 2);
    const Vec u = cyl.chart().center();
    Vec radial = cyl.point(u);
    radial(2) = 0.0;
    CHECK(gauss_map(cyl, u).dot(radial) > 0.0);

    try {
      preset("klein", 2);
      FAIL("expected UnknownPreset");
    } catch (const UnknownPreset& e) {
      const std::string what = e.what();
      for (const auto& name : preset_names()) CHECK(what.find(name) != std::string::npos);
    }
    CHECK_THROWS_AS(preset("torus", 3), InvalidArgument);
    CHECK_THROWS_AS(preset("torus", 2, {{"r", 3.0}}), InvalidArgument);
    CHECK_THROWS_AS(preset("sphere", 2, {{"radius", 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(preset("sphere", 0), InvalidArgument);
  }

  TEST_CASE("rigidly moved patch keeps its forms") {
    std::mt19937_64 rng(3);
    const RigidMotion phi(oracle::random_rotation(3, rng), oracle::random_vec(3, rng));
    const HypersurfacePatch sphere = preset("sphere", 2);
    const HypersurfacePatch moved = sphere.moved(phi);
    const Vec u = random_interior_point(sphere.chart(), 1);
    CHECK((moved.point(u) - phi.apply(sphere.point(u))).norm() < 1e-14);
    CHECK((classical_first_form(moved, u) - classical_first_form(sphere, u)).norm() < 1e-13);
    CHECK((classical_second_form(moved, u) - classical_second_form(sphere, u)).norm() < 1e-13);
    CHECK((gauss_map(moved, u) - phi.R() * gauss_map(sphere, u)).norm() < 1e-13);
  }
}

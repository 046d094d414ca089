#include "hsalg/errors.hpp"
#include "hsalg/fundamental_forms.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace hsalg;

TEST_SUITE("fundamental_forms") {
  TEST_CASE("iota reproduces the Jacobian") {
    for (int n : {1, 2, 3}) {
      for (const auto& name : preset_names()) {
        if (name == "torus" && n != 2) continue;
        const HypersurfacePatch patch = preset(name, n);
        for (int i = 0; i < 10; ++i) {
          const Vec u = random_interior_point(patch.chart(), 10 + i);
          INFO(name, " n=", n);
          CHECK((iota(patch, u) - jacobian(patch, u)).cwiseAbs().maxCoeff() < 1e-9);
        }
      }
    }
  }

  TEST_CASE("radical component ignores isotropy shifts") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    const AlgebroidFibre F = fibre(sphere, random_interior_point(sphere.chart(), 3));
    std::mt19937_64 rng(4);
    for (int c = 0; c < F.rank(); ++c) {
      const Vec a = F.basis.col(c);
      const Vec k = F.kernel_basis * oracle::random_vec(F.kernel_dim(), rng, 5.0);
      const Vec w = radical_component(F, a);
      CHECK((radical_component(F, a + k) - w).norm() < 1e-10);
      // w is the value of the Killing field at x
      CHECK((w - killing_eval(KillingField::from_coefficients(3, a), F.x)).norm() < 1e-10);
    }
  }

  TEST_CASE("a fibre with a missing isotropy direction is choice dependent") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    AlgebroidFibre F = fibre(sphere, random_interior_point(sphere.chart(), 5));
    const Vec dropped = F.kernel_basis.col(2);
    F.kernel_basis = Mat(F.kernel_basis.leftCols(2));
    CHECK_THROWS_AS(radical_component(F, dropped), ChoiceDependent);
    CHECK_THROWS_AS(radical_component(F, Vec::Zero(4)), DimensionMismatch);
  }

  TEST_CASE("induced Gauss map") {
    for (const auto& name : preset_names()) {
      const HypersurfacePatch patch = preset(name, 2);
      for (int i = 0; i < 10; ++i) {
        const Vec u = random_interior_point(patch.chart(), 20 + i);
        CHECK((gauss_from_omega(patch, u) - gauss_map(patch, u)).norm() < 1e-9);
      }
    }
    const HypersurfacePatch sphere = preset("sphere", 2);
    const Vec u = random_interior_point(sphere.chart(), 40);
    CHECK((gauss_from_omega(sphere, u) - sphere.point(u)).norm() < 1e-9);
    CHECK((gauss_from_omega(preset("plane", 2), Vec::Zero(2)) - Vec::Unit(3, 2)).norm() < 1e-12);
  }

  TEST_CASE("forms of the plane") {
    const OmegaForms f = omega_forms(preset("plane", 2), Vec::Constant(2, 0.3));
    CHECK((f.g_omega - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.II_omega.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(f.nu_omega.dot(f.iota.col(0)) == doctest::Approx(0.0));
  }

  TEST_CASE("forms of the unit sphere") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    for (int i = 0; i < 20; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 50 + i);
      const OmegaForms f = omega_forms(sphere, u);
      const Mat g = oracle::sphere_metric(u(0));
      CHECK((f.g_omega - g).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((f.II_omega + g).cwiseAbs().maxCoeff() < 1e-6);
    }
  }

  TEST_CASE("omega forms agree with the classical forms") {
    for (int n : {1, 2, 3}) {
      for (const auto& name : preset_names()) {
        if (name == "torus" && n != 2) continue;
        const HypersurfacePatch patch = preset(name, n);
        double g_err = 0.0, II_err = 0.0, asym = 0.0, normal = 0.0;
        for (int i = 0; i < 100; ++i) {
          const Vec u = random_interior_point(patch.chart(), 1000 + i);
          const OmegaForms f = omega_forms(patch, u);
          g_err = std::max(g_err, (f.g_omega - classical_first_form(patch, u)).cwiseAbs().maxCoeff());
          II_err = std::max(II_err, (f.II_omega - classical_second_form(patch, u)).cwiseAbs().maxCoeff());
          asym = std::max(asym, f.II_asymmetry);
          normal = std::max(normal, (f.nu_omega.transpose() * f.iota).cwiseAbs().maxCoeff());
        }
        INFO(name, " n=", n);
        CHECK(g_err < 1e-6);
        CHECK(II_err < 1e-6);
        CHECK(asym < 1e-6);
        CHECK(normal < 1e-10);
      }
    }
  }

  TEST_CASE("edge points use one-sided differences") {
    const HypersurfacePatch sphere = preset("sphere", 2);
    const Vec corner = sphere.chart().lower();
    const OmegaForms f = omega_forms(sphere, corner);
    CHECK((f.II_omega - classical_second_form(sphere, corner)).cwiseAbs().maxCoeff() < 1e-5);
  }
}

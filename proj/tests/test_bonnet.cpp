#include "hsalg/bonnet.hpp"
#include "hsalg/errors.hpp"
#include "hsalg/fundamental_forms.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace hsalg;

namespace {

TensorFieldPair sphere_fields() { return TensorFieldPair::from_patch(preset("sphere", 2)); }

Vec pt(double a, double b) {
  Vec u(2);
  u << a, b;
  return u;
}

// Reconstructed positions of `result` against the patch at the same nodes.
double aligned_rms(const ReconstructionResult& result, const HypersurfacePatch& patch) {
  std::vector<Vec> truth;
  for (int k = 0; k < result.chart.node_count(); ++k) truth.push_back(patch.point(result.chart.node(result.chart.unflatten(k))));
  return align_rigid(as_cloud(result.positions), as_cloud(truth)).rms;
}

}  // namespace

TEST_SUITE("bonnet") {
  TEST_CASE("Christoffel symbols") {
    const TensorFieldPair flat = TensorFieldPair::from_patch(preset("plane", 2));
    for (const Mat& G : christoffel(flat, Vec::Constant(2, 0.1))) CHECK(G.cwiseAbs().maxCoeff() < 1e-12);

    const TensorFieldPair sphere = sphere_fields();
    for (int i = 0; i < 10; ++i) {
      const Vec u = random_interior_point(sphere.chart(), 10 + i);
      const auto G = christoffel(sphere, u);
      const auto expected = oracle::sphere_christoffel(u(0));
      for (int k = 0; k < 2; ++k) {
        CHECK((G[k] - expected[k]).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((G[k] - G[k].transpose()).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
  }

  TEST_CASE("Gauss-Codazzi residuals") {
    const TensorFieldPair sphere = sphere_fields();
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const GaussCodazziResidual r = gauss_codazzi_residual(sphere, random_interior_point(sphere.chart(), 30 + i));
      worst = std::max({worst, r.gauss, r.codazzi});
    }
    CHECK(worst < 1e-5);

    const GaussCodazziResidual flat = gauss_codazzi_residual(TensorFieldPair::from_patch(preset("plane", 2)), Vec::Zero(2));
    CHECK(flat.gauss < 1e-12);
    CHECK(flat.codazzi < 1e-12);

    // a scaled second form breaks Gauss by 0.21 K g_00 g_11
    const TensorFieldPair scaled = sphere.with_second_form([&sphere](const Vec& u) { return Mat(1.1 * sphere.II(u)); });
    CHECK(gauss_codazzi_residual(scaled, sphere.chart().center()).gauss > 0.1);

    const TensorFieldPair bumped = perturb_second_form(sphere, 0.1);
    const Vec off = sphere.chart().center() + 0.1 * (sphere.chart().upper() - sphere.chart().lower());
    CHECK(gauss_codazzi_residual(bumped, off).codazzi > 1e-3);
  }

  TEST_CASE("frame form structure") {
    const TensorFieldPair plane = TensorFieldPair::from_patch(preset("plane", 2));
    const auto Theta = frame_form(plane, Vec::Constant(2, 0.5));
    REQUIRE(Theta.size() == 2);
    for (int j = 0; j < 2; ++j) {
      Mat expected = Mat::Zero(4, 4);
      expected(j, 3) = 1.0;
      CHECK((Theta[j] - expected).cwiseAbs().maxCoeff() < 1e-12);
    }

    const TensorFieldPair sphere = sphere_fields();
    const Vec u = random_interior_point(sphere.chart(), 50);
    const auto S = frame_form(sphere, u);
    const auto G = oracle::sphere_christoffel(u(0));
    const Mat g = oracle::sphere_metric(u(0));
    const Mat II = -g;
    const Mat W = g.inverse() * II;
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) CHECK(S[j](k, i) == doctest::Approx(G[k](i, j)).epsilon(1e-7));
        CHECK(S[j](2, i) == doctest::Approx(II(i, j)).epsilon(1e-10));
        CHECK(S[j](i, 2) == doctest::Approx(-W(i, j)).epsilon(1e-10));
      }
      CHECK(S[j](j, 3) == 1.0);
      CHECK(S[j].row(3).norm() == 0.0);
    }

    // linear in II: the normal row scales, the Christoffel block does not
    const TensorFieldPair doubled = sphere.with_second_form([&sphere](const Vec& p) { return Mat(2.0 * sphere.II(p)); });
    const auto D = frame_form(doubled, u);
    for (int j = 0; j < 2; ++j) {
      CHECK((D[j].row(2) - 2.0 * S[j].row(2)).norm() < 1e-12);
      CHECK((D[j].topLeftCorner(2, 2) - S[j].topLeftCorner(2, 2)).norm() < 1e-12);
    }
  }

  TEST_CASE("flatness holds for consistent data") {
    for (const std::string name : {"sphere", "cylinder", "graph", "torus"}) {
      const TensorFieldPair fields = TensorFieldPair::from_patch(preset(name, 2));
      for (int i = 0; i < 5; ++i) {
        INFO(name);
        CHECK(flatness_residual(fields, random_interior_point(fields.chart(), 60 + i)) < 1e-4);
      }
    }
    const TensorFieldPair bumped = perturb_second_form(sphere_fields(), 0.1);
    const Vec off = bumped.chart().center() + 0.1 * (bumped.chart().upper() - bumped.chart().lower());
    CHECK(flatness_residual(bumped, off) > 1e-3);
  }

  TEST_CASE("frames") {
    const TensorFieldPair sphere = sphere_fields();
    const Vec u0 = sphere.chart().center();
    const FrameState F = FrameState::initial(sphere, u0);
    CHECK(F.gram_drift(sphere.g(u0)) < 1e-14);
    CHECK(F.position().norm() == 0.0);
    CHECK((F.normal() - Vec::Unit(3, 2)).norm() == 0.0);

    const FrameState truth = FrameState::from_patch(preset("sphere", 2), u0);
    CHECK(truth.gram_drift(sphere.g(u0)) < 1e-12);

    Mat E = truth.matrix();
    E.topLeftCorner(3, 2) *= 1.01;
    FrameState noisy(E);
    CHECK(noisy.gram_drift(sphere.g(u0)) > 1e-3);
    noisy.reorthonormalize(sphere.g(u0));
    CHECK(noisy.gram_drift(sphere.g(u0)) < 1e-13);
    CHECK((noisy.position() - truth.position()).norm() == 0.0);
  }

  TEST_CASE("integration along the plane is exact") {
    const TensorFieldPair plane = TensorFieldPair::from_patch(preset("plane", 2));
    const FrameState start = FrameState::initial(plane, Vec::Zero(2));
    const FrameState end = integrate_path(plane, {Vec::Zero(2), pt(0.5, -0.25)}, start);
    CHECK((end.position() - Vec(Vec::Unit(3, 0) * 0.5 - Vec::Unit(3, 1) * 0.25)).norm() < 1e-13);
    CHECK((end.tangent_frame() - start.tangent_frame()).norm() < 1e-13);
  }

  TEST_CASE("integration follows the true frame") {
    const HypersurfacePatch patch = preset("sphere", 2);
    const TensorFieldPair sphere = TensorFieldPair::from_patch(patch);
    const Vec a = pt(0.6, 0.3);
    const Vec b = pt(1.9, 2.1);
    IntegrationStats stats;
    const FrameState end = integrate_path(sphere, {a, pt(1.9, 0.3), b}, FrameState::from_patch(patch, a), {}, &stats);
    const FrameState truth = FrameState::from_patch(patch, b);
    CHECK((end.matrix() - truth.matrix()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(stats.steps == static_cast<int>(std::ceil(512 * 1.3)) + static_cast<int>(std::ceil(512 * 1.8)));
    CHECK(stats.max_drift_before < 1e-9);
    CHECK(stats.max_drift_after < 1e-13);
  }

  TEST_CASE("RK4 converges at fourth order") {
    const TensorFieldPair sphere = sphere_fields();
    const ChartPath path{pt(0.5, 0.2), pt(2.5, 0.2), pt(2.5, 2.9)};
    const FrameState start = FrameState::initial(sphere, path.front());
    std::vector<Vec> ends;
    for (double spu : {16.0, 32.0, 64.0}) {
      IntegrationOptions opt;
      opt.steps_per_unit = spu;
      opt.reorthonormalize_every = 1 << 30;
      ends.push_back(integrate_path(sphere, path, start, opt).position());
    }
    const double order = oracle::observed_order(ends[0], ends[1], ends[2]);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
  }

  TEST_CASE("holonomy") {
    const TensorFieldPair sphere = sphere_fields();
    const Chart& c = sphere.chart();
    const Vec lo = c.lower() + 0.1 * (c.upper() - c.lower());
    const Vec hi = c.upper() - 0.1 * (c.upper() - c.lower());
    const ChartPath loop = rectangle_loop(c.center(), 0, 1, lo(0), hi(0), lo(1), hi(1));
    REQUIRE(loop.size() == 5);
    CHECK((loop.front() - loop.back()).norm() == 0.0);
    CHECK(holonomy_loop(sphere, loop) < 1e-6);
    CHECK(holonomy_loop(perturb_second_form(sphere, 0.1), loop) > 1e-3);

    const ChartPath degenerate{pt(1.0, 1.0), pt(2.0, 1.0), pt(1.0, 1.0)};
    CHECK(holonomy_loop(sphere, degenerate) < 1e-12);

    CHECK_THROWS_AS(holonomy_loop(sphere, {pt(1.0, 1.0), pt(2.0, 1.0)}), InvalidArgument);
    CHECK_THROWS_AS(holonomy_loop(sphere, rectangle_loop(c.center(), 0, 1, 0.0, 1.0, 0.0, 1.0)), PathOutsideChart);
  }

  TEST_CASE("integration errors") {
    const TensorFieldPair sphere = sphere_fields();
    const FrameState start = FrameState::initial(sphere, sphere.chart().center());
    CHECK_THROWS_AS(integrate_path(sphere, {sphere.chart().center(), pt(-1.0, 1.0)}, start), PathOutsideChart);
    IntegrationOptions coarse;
    coarse.steps_per_unit = 1.0;
    coarse.reorthonormalize_every = 1;
    coarse.max_drift = 1e-8;
    CHECK_THROWS_AS(integrate_path(sphere, {pt(0.3, 0.3), pt(2.8, 2.8)}, FrameState::initial(sphere, pt(0.3, 0.3)), coarse),
                    GramDrift);
    CHECK_THROWS_AS(integrate_path(sphere, {Vec::Zero(3)}, start), DimensionMismatch);

    const TensorFieldPair singular(Chart(Vec::Zero(2), Vec::Ones(2), 5), [](const Vec&) { return Mat(Mat::Zero(2, 2)); },
                                   [](const Vec&) { return Mat(Mat::Zero(2, 2)); });
    CHECK_THROWS_AS(singular.g(Vec::Zero(2)), SingularMetric);
    const TensorFieldPair skew(Chart(Vec::Zero(2), Vec::Ones(2), 5), [](const Vec&) { return Mat(Mat::Identity(2, 2)); },
                               [](const Vec&) {
                                 Mat m = Mat::Zero(2, 2);
                                 m(0, 1) = 1.0;
                                 return m;
                               });
    CHECK_THROWS_AS(skew.II(Vec::Zero(2)), InvalidArgument);
  }

  TEST_CASE("grid reconstruction of the sphere") {
    const HypersurfacePatch patch = preset("sphere", 2).with_chart(preset("sphere", 2).chart().with_grid({17, 17}));
    const TensorFieldPair fields = TensorFieldPair::from_patch(patch);
    const Vec u0 = patch.chart().center();
    ReconstructionOptions opt;
    opt.integration.steps_per_unit = 256;
    const ReconstructionResult r = reconstruct_grid(fields, u0, FrameState::initial(fields, u0), opt);
    CHECK(r.positions.size() == 289);
    CHECK(r.normals.size() == 289);
    CHECK(r.path_independence < 1e-6);
    CHECK(r.path_independence_nodes > 0);
    REQUIRE(r.holonomy.size() == 1);
    CHECK(r.holonomy[0].deviation < 1e-6);
    CHECK(r.verification.nodes == 13 * 13);
    CHECK(r.verification.g_max_error < 1e-3);
    CHECK(r.verification.II_max_error < 1e-3);
    CHECK(r.steps_per_unit == 256);
    CHECK(aligned_rms(r, patch) < 1e-8);
    for (const Vec& x : r.positions) CHECK((x - r.positions[0]).norm() < 2.0 + 1e-9);

    // starting from the true frame reproduces the patch without alignment
    const ReconstructionResult direct = reconstruct_grid(fields, u0, FrameState::from_patch(patch, u0), opt);
    double worst = 0.0;
    for (int k = 0; k < patch.chart().node_count(); ++k) {
      const Vec u = patch.chart().node(patch.chart().unflatten(k));
      worst = std::max(worst, (direct.positions[k] - patch.point(u)).norm());
      CHECK((direct.normals[k] - gauss_map(patch, u)).norm() < 1e-7);
    }
    CHECK(worst < 1e-8);

    opt.threads = 3;
    const ReconstructionResult threaded = reconstruct_grid(fields, u0, FrameState::initial(fields, u0), opt);
    for (std::size_t k = 0; k < r.positions.size(); ++k) CHECK((threaded.positions[k] - r.positions[k]).norm() == 0.0);
  }

  TEST_CASE("round trip through the omega forms") {
    for (const std::string name : {"sphere", "cylinder", "graph"}) {
      const HypersurfacePatch base = preset(name, 2);
      const HypersurfacePatch patch = base.with_chart(base.chart().with_grid({17, 17}));
      const TensorFieldPair fields = TensorFieldPair::from_omega(patch);
      const Vec u0 = patch.chart().center();
      ReconstructionOptions opt;
      opt.integration.steps_per_unit = 128;
      const ReconstructionResult r = reconstruct_grid(fields, u0, FrameState::initial(fields, u0), opt);
      INFO(name);
      CHECK(aligned_rms(r, patch) < 1e-4 * patch.chart().diameter());
    }
  }

  TEST_CASE("reconstruction in other dimensions") {
    for (int n : {1, 3}) {
      const HypersurfacePatch base = preset("sphere", n);
      const HypersurfacePatch patch = base.with_chart(base.chart().with_grid(std::vector<int>(n, n == 1 ? 33 : 7)));
      const TensorFieldPair fields = TensorFieldPair::from_patch(patch);
      const Vec u0 = patch.chart().center();
      ReconstructionOptions opt;
      opt.integration.steps_per_unit = 128;
      const ReconstructionResult r = reconstruct_grid(fields, u0, FrameState::initial(fields, u0), opt);
      INFO(n);
      CHECK(r.path_independence < 1e-6);
      CHECK(aligned_rms(r, patch) < 1e-7);
      if (n == 1) CHECK(r.holonomy.empty());
    }
  }

  TEST_CASE("grid-interpolated fields") {
    const Chart chart(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), 9);
    std::vector<Mat> g(chart.node_count(), Mat::Identity(2, 2));
    std::vector<Mat> II(chart.node_count(), Mat::Zero(2, 2));
    const TensorFieldPair plane = TensorFieldPair::from_grid(chart, g, II);
    CHECK(plane.fd_step() == doctest::Approx(0.25));
    const ReconstructionResult r = reconstruct_grid(plane, Vec::Zero(2), FrameState::initial(plane, Vec::Zero(2)));
    for (int k = 0; k < chart.node_count(); ++k) {
      Vec expected(3);
      expected << chart.node(chart.unflatten(k)), 0.0;
      CHECK((r.positions[k] - expected).norm() < 1e-12);
    }
    CHECK_THROWS_AS(TensorFieldPair::from_grid(chart, std::vector<Mat>(3, Mat::Identity(2, 2)), II), DimensionMismatch);
  }

  TEST_CASE("rigid alignment") {
    std::mt19937_64 rng(70);
    Mat cloud(3, 20);
    for (int k = 0; k < 20; ++k) cloud.col(k) = oracle::random_vec(3, rng);
    const Alignment self = align_rigid(cloud, cloud);
    CHECK(self.rms < 1e-14);
    CHECK((self.motion.R() - Mat::Identity(3, 3)).norm() < 1e-12);

    const RigidMotion phi(oracle::random_rotation(3, rng), oracle::random_vec(3, rng, 4.0));
    Mat moved(3, 20);
    for (int k = 0; k < 20; ++k) moved.col(k) = phi.apply(cloud.col(k));
    const Alignment found = align_rigid(cloud, moved);
    CHECK(found.rms < 1e-12);
    CHECK((found.motion.R() - phi.R()).norm() < 1e-12);
    CHECK((found.motion.t() - phi.t()).norm() < 1e-12);

    // a reflected tetrahedron cannot be matched by a proper motion
    Mat tet(3, 4);
    tet << 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
    Mat mirrored = tet;
    mirrored.row(2) *= -1.0;
    const Alignment mirror = align_rigid(tet, mirrored);
    CHECK(mirror.rms > 1e-2);
    CHECK(mirror.motion.R().determinant() == doctest::Approx(1.0));

    CHECK_THROWS_AS(align_rigid(cloud.leftCols(2), moved.leftCols(2)), DegenerateCloud);
    Mat line(3, 5);
    for (int k = 0; k < 5; ++k) line.col(k) = k * Vec::Unit(3, 0);
    CHECK_THROWS_AS(align_rigid(line, line), DegenerateCloud);
  }
}

#pragma once

// Reconstruction of a hypersurface from (metric, second form) data by
// integrating the Gauss-Weingarten frame equations, with the Gauss-Codazzi
// residuals, path-independence and loop holonomy as consistency diagnostics.
//
// Frames live in homogeneous (n+2) x (n+2) matrices F = [[E, p], [0, 1]]
// whose columns are the tangent frame e_0 .. e_{n-1}, the normal nu, and the
// position p. Along a chart path F' = F * sum_j Theta_j gamma'_j.

#include "hsalg/hypersurface.hpp"
#include "hsalg/killing.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hsalg {

using MatrixField = std::function<Mat(const Vec&)>;

/// (g, II) on a chart. g must be SPD (Cholesky succeeds) and II symmetric
/// to 1e-10 wherever queried.
class TensorFieldPair {
 public:
  TensorFieldPair(Chart chart, MatrixField g, MatrixField II, double fd_step = 1e-5,
                  double nested_step = 1e-4);

  /// Multilinear interpolation of per-node values (row-major node order,
  /// first axis slowest). Difference steps default to the grid spacing.
  static TensorFieldPair from_grid(const Chart& chart, std::vector<Mat> g_nodes,
                                   std::vector<Mat> II_nodes);
  /// Classical first and second forms of a patch.
  static TensorFieldPair from_patch(const HypersurfacePatch& patch);
  /// g_omega, II_omega of a patch.
  static TensorFieldPair from_omega(const HypersurfacePatch& patch);

  const Chart& chart() const { return chart_; }
  int n() const { return chart_.n(); }
  double fd_step() const { return fd_step_; }
  double nested_step() const { return nested_step_; }

  /// Throws SingularMetric if g(u) is not SPD.
  Mat g(const Vec& u) const;
  /// Throws InvalidArgument if II(u) is not symmetric.
  Mat II(const Vec& u) const;

  TensorFieldPair with_second_form(MatrixField II) const;

 private:
  Chart chart_;
  MatrixField g_;
  MatrixField II_;
  double fd_step_;
  double nested_step_;
};

/// II + amplitude * b(u) e_0 e_0^T, b a Gaussian bump centred in the chart
/// (width a quarter of each side). Violates Codazzi wherever b varies across
/// axis 0 for n >= 2.
TensorFieldPair perturb_second_form(const TensorFieldPair& fields, double amplitude);

/// Christoffel symbols: result[k](i, j) = Gamma^k_ij.
std::vector<Mat> christoffel(const TensorFieldPair& fields, const Vec& u);

struct GaussCodazziResidual {
  double gauss = 0.0;    // max |R_ijkl - (II_ik II_jl - II_il II_jk)|
  double codazzi = 0.0;  // max |nabla_i II_jk - nabla_j II_ik|
};

GaussCodazziResidual gauss_codazzi_residual(const TensorFieldPair& fields, const Vec& u);

/// Theta_j, j = 0 .. n-1: d_j e_i = Gamma^k_ij e_k + II_ij nu,
/// d_j nu = -g^{kl} II_lj e_k, d_j p = e_j.
std::vector<Mat> frame_form(const TensorFieldPair& fields, const Vec& u);

/// max |d_i Theta_j - d_j Theta_i + [Theta_i, Theta_j]| (nested differences).
double flatness_residual(const TensorFieldPair& fields, const Vec& u);

class FrameState {
 public:
  explicit FrameState(Mat homogeneous);
  /// Gram-compatible frame at u0: tangent block from the Cholesky factor of
  /// g(u0), normal along the last axis, position at the origin.
  static FrameState initial(const TensorFieldPair& fields, const Vec& u0);
  /// The true frame [J | nu | f] of a patch at u.
  static FrameState from_patch(const HypersurfacePatch& patch, const Vec& u);

  int n() const { return static_cast<int>(F_.rows()) - 2; }
  const Mat& matrix() const { return F_; }
  Mat& matrix() { return F_; }
  Vec position() const { return F_.col(n() + 1).head(n() + 1); }
  Vec normal() const { return F_.col(n()).head(n() + 1); }
  Mat tangent_frame() const { return F_.topLeftCorner(n() + 1, n()); }
  /// max |E^T E - diag(g, 1)|.
  double gram_drift(const Mat& g) const;
  /// Restores E^T E = diag(g, 1) by polar decomposition of E diag(g, 1)^{-1/2}.
  void reorthonormalize(const Mat& g);

 private:
  Mat F_;
};

struct IntegrationOptions {
  double steps_per_unit = 512.0;  // RK4 steps per unit chart length
  int reorthonormalize_every = 16;
  double max_drift = 1e-3;        // Gram drift allowed before a correction
};

struct IntegrationStats {
  int steps = 0;
  double max_drift_before = 0.0;
  double max_drift_after = 0.0;
};

/// Polyline through chart points.
using ChartPath = std::vector<Vec>;

/// Classical RK4 along each segment of the path. Throws PathOutsideChart and
/// GramDrift.
FrameState integrate_path(const TensorFieldPair& fields, const ChartPath& path,
                          const FrameState& initial, const IntegrationOptions& options = {},
                          IntegrationStats* stats = nullptr);

struct HolonomyEntry {
  ChartPath loop;
  double deviation = 0.0;
};

struct ReconstructionVerification {
  int nodes = 0;              // interior nodes compared
  double g_max_error = 0.0;
  double II_max_error = 0.0;
};

struct ReconstructionOptions {
  IntegrationOptions integration;
  int verify_stride = 4;  // node stride of the opposite-order recomputation
  int threads = 1;
};

struct ReconstructionResult {
  explicit ReconstructionResult(Chart c) : chart(std::move(c)) {}

  Chart chart;
  std::vector<Vec> positions;  // per node, row-major
  std::vector<Vec> normals;
  double path_independence = 0.0;
  int path_independence_nodes = 0;
  std::vector<HolonomyEntry> holonomy;
  ReconstructionVerification verification;
  IntegrationStats stats;
  double steps_per_unit = 0.0;
};

/// Staircase integration from u0 to every node of the chart grid (axis order
/// 0, 1, ...), a strided recomputation in the opposite axis order, a loop
/// holonomy entry, and the recovered forms on interior nodes.
ReconstructionResult reconstruct_grid(const TensorFieldPair& fields, const Vec& u0,
                                      const FrameState& initial,
                                      const ReconstructionOptions& options = {});

/// |F_final - F_initial|_Frobenius around a closed polyline, starting from
/// FrameState::initial at the loop's first point.
double holonomy_loop(const TensorFieldPair& fields, const ChartPath& loop,
                     const IntegrationOptions& options = {});

/// Axis-aligned rectangle in the (axis_a, axis_b) plane through `base`,
/// traversed lower-left, lower-right, upper-right, upper-left, back.
ChartPath rectangle_loop(const Vec& base, int axis_a, int axis_b, double lo_a, double hi_a,
                         double lo_b, double hi_b);

struct Alignment {
  RigidMotion motion;  // maps cloud a onto cloud b
  double rms = 0.0;
};

/// Optimal proper rigid motion between corresponding point clouds (columns).
/// Throws DegenerateCloud for fewer than N points or a covariance of rank
/// below N - 1.
Alignment align_rigid(const Mat& cloud_a, const Mat& cloud_b);

/// Stacks points as columns.
Mat as_cloud(const std::vector<Vec>& points);

}  // namespace hsalg

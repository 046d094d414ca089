#pragma once

// Parametrized hypersurface patches f: U -> R^{n+1} over a box chart U in
// R^n, with the classical differential-geometric quantities used as ground
// truth elsewhere.

#include "hsalg/killing.hpp"
#include "hsalg/linalg.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsalg {

/// Box U = [lower, upper] in R^n with a sampling grid.
class Chart {
 public:
  Chart(Vec lower, Vec upper, std::vector<int> grid);
  /// Same box, `samples` nodes per axis.
  Chart(Vec lower, Vec upper, int samples);

  int n() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<int>& grid() const { return grid_; }

  Vec center() const { return 0.5 * (lower_ + upper_); }
  double spacing(int axis) const;
  double coordinate(int axis, int index) const;
  /// Chart point of a grid multi-index.
  Vec node(const std::vector<int>& index) const;
  int node_count() const;
  /// Row-major (first axis slowest) multi-index of a flat node id.
  std::vector<int> unflatten(int flat) const;
  int flatten(const std::vector<int>& index) const;

  bool contains(const Vec& u) const;
  /// Whether the box of half-width `margin` around u lies inside the chart.
  bool contains_with_margin(const Vec& u, double margin) const;
  double diameter() const { return (upper_ - lower_).norm(); }

  Chart with_grid(std::vector<int> grid) const { return {lower_, upper_, std::move(grid)}; }

 private:
  Vec lower_;
  Vec upper_;
  std::vector<int> grid_;
};

using PointMap = std::function<Vec(const Vec&)>;
using JacobianMap = std::function<Mat(const Vec&)>;
/// Second partials of an R^N-valued map: entry i * n + j is d^2 f / du_i du_j.
using SecondPartials = std::vector<Vec>;
using HessianMap = std::function<SecondPartials(const Vec&)>;

class HypersurfacePatch {
 public:
  HypersurfacePatch(std::string name, Chart chart, PointMap immersion, int orientation = 1,
                    std::optional<JacobianMap> jacobian = std::nullopt,
                    std::optional<HessianMap> hessian = std::nullopt);

  const std::string& name() const { return name_; }
  const Chart& chart() const { return chart_; }
  int n() const { return chart_.n(); }
  int ambient_dim() const { return n() + 1; }
  int orientation() const { return orientation_; }
  bool has_analytic_jacobian() const { return jacobian_.has_value(); }
  bool has_analytic_hessian() const { return hessian_.has_value(); }

  Vec point(const Vec& u) const { return immersion_(u); }
  const std::optional<JacobianMap>& analytic_jacobian() const { return jacobian_; }
  const std::optional<HessianMap>& analytic_hessian() const { return hessian_; }

  /// phi o f, keeping analytic derivatives and orientation.
  HypersurfacePatch moved(const RigidMotion& phi) const;
  /// Same immersion with analytic derivatives dropped (finite-difference mode).
  HypersurfacePatch without_derivatives() const;
  HypersurfacePatch with_chart(Chart chart) const;

 private:
  std::string name_;
  Chart chart_;
  PointMap immersion_;
  int orientation_;
  std::optional<JacobianMap> jacobian_;
  std::optional<HessianMap> hessian_;
};

/// Relative smallest-singular-value threshold for the immersion condition.
inline constexpr double kImmersionTol = 1e-8;
/// Relative step of the first-derivative difference quotient.
inline constexpr double kFirstDerivativeStep = 1e-6;
/// Step of the second-derivative difference quotients.
inline constexpr double kSecondDerivativeStep = 1e-4;

/// (n+1) x n differential. Throws RankDeficient if f is not an immersion at u.
Mat jacobian(const HypersurfacePatch& patch, const Vec& u);

SecondPartials second_partials(const HypersurfacePatch& patch, const Vec& u);

/// Unit normal with det[J | nu] * orientation > 0.
Vec gauss_map(const HypersurfacePatch& patch, const Vec& u);

/// J^T J.
Mat classical_first_form(const HypersurfacePatch& patch, const Vec& u);

/// II_ij = <d^2 f / du_i du_j, nu>.
Mat classical_second_form(const HypersurfacePatch& patch, const Vec& u);

/// Named preset parameters (R, r, a, ...). Missing entries take defaults.
using PresetParams = std::map<std::string, double>;

/// Names accepted by preset().
const std::vector<std::string>& preset_names();

/// plane, sphere(R), cylinder(R), graph(a: h = a |u|^2 / 2), torus(R, r; n = 2).
/// All presets carry analytic derivatives. Throws UnknownPreset for other
/// names and InvalidArgument for unsupported dimensions or parameters.
HypersurfacePatch preset(const std::string& name, int n, const PresetParams& params = {});

/// Graph u -> (u, h(u)) of a user-supplied height function.
struct HeightFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};
HypersurfacePatch graph_patch(const HeightFunction& h, Chart chart);

}  // namespace hsalg

#pragma once

// The Lie algebroid A = {(X, x) in g x Sigma : X(x) tangent to Sigma} of a
// hypersurface patch: fibres, anchor, the bracket on sections, the bracket of
// a general action algebroid, and residual checks of the algebroid identities.

#include "hsalg/hypersurface.hpp"
#include "hsalg/killing.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace hsalg {

/// Relative singular-value threshold for every rank decision on fibres.
inline constexpr double kFibreRankTol = 1e-8;

/// A|_x at one chart point. All matrices act on g-coefficient vectors.
struct AlgebroidFibre {
  Vec u;
  Vec x;              // f(u)
  Mat jacobian;       // (n+1) x n
  Vec normal;         // nu(u)
  Mat basis;          // dim g x rank, orthonormal columns spanning A|_x
  Mat anchor_matrix;  // n x rank, anchor of each basis column in chart coordinates
  Mat kernel_basis;   // dim g x k, orthonormal columns spanning h|_x = ker(anchor)

  int n() const { return static_cast<int>(u.size()); }
  int ambient_dim() const { return static_cast<int>(x.size()); }
  int rank() const { return static_cast<int>(basis.cols()); }
  int kernel_dim() const { return static_cast<int>(kernel_basis.cols()); }
};

/// Fibre of A at u: the null space of X -> <X(f(u)), nu(u)>.
AlgebroidFibre fibre(const HypersurfacePatch& patch, const Vec& u);

/// Completes a fibre from an explicit basis (anchor matrix and kernel are
/// recomputed). Used to build perturbed fibres for negative controls.
AlgebroidFibre fibre_from_basis(const Vec& u, const Vec& x, const Mat& J, const Vec& nu,
                                const Mat& basis);

/// Tangent vector (chart coordinates) w with J w = X(f(u)), X having
/// g-coefficients a. Throws NotTangent if the least-squares residual exceeds
/// 1e-9 (1 + |X(f(u))|).
Vec anchor(const AlgebroidFibre& fibre, const Vec& a);

/// Same as anchor() without building a full fibre.
Vec anchor_at(const HypersurfacePatch& patch, const Vec& u, const Vec& a);

/// rho(u) = Ev(f(u))^T nu(u): the functional whose kernel is A|_x.
Vec tangency_functional(const Vec& x, const Vec& nu);

enum class DerivativeMode {
  Analytic,          // use analytic derivatives wherever a section provides them
  FiniteDifference,  // difference quotients for section derivatives
};

/// Smooth g-valued map on the chart (a section of the trivial bundle g x U).
struct RawMap {
  std::function<Vec(const Vec&)> value;
  std::optional<std::function<Mat(const Vec&)>> jacobian;  // dim g x n
};

/// A section of A, represented as the pointwise orthogonal projection onto
/// A|_x of a raw g-valued map.
class Section {
 public:
  Section(std::shared_ptr<const HypersurfacePatch> patch, RawMap raw);

  const HypersurfacePatch& patch() const { return *patch_; }
  const std::shared_ptr<const HypersurfacePatch>& patch_ptr() const { return patch_; }
  const RawMap& raw_map() const { return raw_; }

  /// Projected g-coefficients at u.
  Vec operator()(const Vec& u) const;
  Vec raw(const Vec& u) const { return raw_.value(u); }

  /// Analytic derivatives need a raw Jacobian and analytic patch derivatives.
  bool has_analytic_derivative() const;
  /// dim g x n matrix of partial derivatives of the projected section.
  /// Throws InvalidArgument if !has_analytic_derivative().
  Mat derivative(const Vec& u) const;

 private:
  std::shared_ptr<const HypersurfacePatch> patch_;
  RawMap raw_;
};

struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// f Y.
Section scale_section(const ScalarField& f, const Section& Y);

/// Degree <= 2 polynomial map R^n -> R^m in (u - center).
class PolynomialMap {
 public:
  PolynomialMap(Vec center, Vec constant, Mat linear, std::vector<Mat> quadratic);
  /// Coefficients uniform in [-1, 1] drawn from `seed`.
  static PolynomialMap random(int out_dim, const Vec& center, std::uint64_t seed);

  int out_dim() const { return static_cast<int>(constant_.size()); }
  Vec operator()(const Vec& u) const;
  Mat jacobian(const Vec& u) const;

 private:
  Vec center_;
  Vec constant_;
  Mat linear_;                  // m x n
  std::vector<Mat> quadratic_;  // per output: symmetric n x n, value = d^T Q d
};

/// Random section: projected degree-2 polynomial raw map, seeded.
Section random_section(std::shared_ptr<const HypersurfacePatch> patch, std::uint64_t seed);
ScalarField random_scalar_field(const Vec& center, int n, std::uint64_t seed);

struct BracketOptions {
  DerivativeMode mode = DerivativeMode::FiniteDifference;
  double step = 1e-5;
};

struct BracketValue {
  Vec value;                 // g-coefficients, not re-projected
  double tangency_residual;  // |<[X,Y](f(u)), nu(u)>|
};

/// [X, Y] = nabla_{#X} Y - nabla_{#Y} X + {X, Y}. Throws StencilOutOfDomain
/// unless u is at least 3 steps inside the chart.
BracketValue section_bracket(const Section& X, const Section& Y, const Vec& u,
                             const BracketOptions& options = {});

/// u -> [X, Y](u) as a section (re-projected; no analytic derivative).
Section bracket_section(const Section& X, const Section& Y, const BracketOptions& options = {});

/// Jacobi-Lie bracket (DV) U - (DU) V of vector fields, by central differences.
Vec jacobi_lie_bracket(const std::function<Vec(const Vec&)>& U,
                       const std::function<Vec(const Vec&)>& V, const Vec& x, double step);

/// Infinitesimal action xi -> xi^dagger of a Lie algebra on a manifold chart.
struct LieAlgebraAction {
  int manifold_dim;
  int algebra_dim;
  std::function<Vec(const Vec& xi, const Vec& m)> infinitesimal;
  std::function<Vec(const Vec&, const Vec&)> bracket;
  std::function<bool(const Vec&)> contains;  // empty: whole R^manifold_dim
};

/// g acting on R^N by Killing fields.
LieAlgebraAction killing_action(int ambient);

using AlgebraValuedMap = std::function<Vec(const Vec&)>;

/// Action-algebroid bracket on g x M at m. Throws StencilOutOfDomain if the
/// difference stencil leaves the action's domain.
Vec action_algebroid_bracket(const LieAlgebraAction& action, const AlgebraValuedMap& X,
                             const AlgebraValuedMap& Y, const Vec& m, double step = 1e-5);

struct ResidualStat {
  double max = 0.0;
  double mean = 0.0;
  int samples = 0;
  double tolerance = 0.0;
  bool pass = true;
};

struct ResidualReport {
  std::map<std::string, ResidualStat> entries;

  bool all_pass() const;
  /// Componentwise maximum; means are sample-weighted.
  void merge(const ResidualReport& other);
};

struct ResidualOptions {
  DerivativeMode mode = DerivativeMode::FiniteDifference;
  int samples = 100;
  std::uint64_t seed = 1;
  double step = 1e-5;
  double nested_step = 1e-3;  // outer step of nested differences (Jacobi)
  int threads = 1;
  /// Default tolerance: 1e-6 analytic, 1e-4 finite differences.
  std::optional<double> tolerance;
  std::map<std::string, double> tolerance_overrides;
};

/// Residual names reported by identity_residuals().
const std::vector<std::string>& residual_names();

/// Random-sample check of the algebroid identities on a patch: leibniz,
/// jacobi, anchor_morphism, closure, antisymmetry, well_definedness (two raw
/// extensions of the same sections) and ambient_extension (bracket through
/// the action algebroid on R^{n+1}).
ResidualReport identity_residuals(const HypersurfacePatch& patch, const ResidualOptions& options);

/// Random interior chart point, keeping `margin_fraction` of each side free.
Vec random_interior_point(const Chart& chart, std::uint64_t seed, double margin_fraction = 0.05);

}  // namespace hsalg

#pragma once

// The logarithmic derivative omega: A -> g of an embedding (inclusion of A
// in g x Sigma followed by projection to g), its morphism equation, its
// behaviour under rigid motions, and the hypotheses of the reconstruction
// theorem checked numerically.

#include "hsalg/algebroid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hsalg {

/// omega(a) for a g-coefficient vector a in A|_x.
KillingField omega(const AlgebroidFibre& fibre, const Vec& a);

/// |omega([X,Y]) - (nabla_{#X} omega(Y) - nabla_{#Y} omega(X) + {omega X, omega Y})|
/// at u. The two sides are evaluated by separate code paths: the left through
/// section_bracket, the right through fibre-level anchors and structure
/// constants, differentiating with analytic derivatives when the bracket used
/// difference quotients and vice versa (difference quotients on both sides
/// when the sections have no analytic derivative).
double morphism_residual(const Section& X, const Section& Y, const Vec& u,
                         const BracketOptions& options = {});

struct BonnetConditionReport {
  Vec u0;
  Vec x0;  // f(u0)
  int n = 0;
  int sample_points = 0;

  // (1) rank A = n(n+3)/2
  bool rank_ok = false;
  int expected_rank = 0;
  int min_rank = 0;
  int max_rank = 0;
  // (2) anchor surjective
  bool transitive_ok = false;
  int min_anchor_rank = 0;
  // (3) omega injective on fibres
  bool injective_ok = false;
  double min_injectivity_singular_value = 0.0;
  // (4) omega(h_x0) transverse to rad g
  bool transverse_ok = false;
  int kernel_dim = 0;
  int transverse_defect = 0;

  std::optional<Vec> m0;
  double m0_residual = 0.0;        // least-squares residual of the common-zero solve
  double m0_distance = 0.0;        // |m0 - f(u0)|
  double m0_max_field_value = 0.0; // max |W_i(m0)| over the basis of omega(h_x0)

  double rank_tolerance = kFibreRankTol;
  double injectivity_threshold = 1e-10;
  std::vector<std::string> failures;

  bool all_pass() const { return rank_ok && transitive_ok && injective_ok && transverse_ok; }
};

struct BonnetCheckOptions {
  int samples = 25;
  std::uint64_t seed = 7;
};

/// Conditions (1)-(3) on `samples` random chart points plus u0; (4) and the
/// recovery of m0 at u0. Numerical failures are recorded, never thrown.
BonnetConditionReport check_bonnet_conditions(const HypersurfacePatch& patch, const Vec& u0,
                                              const BonnetCheckOptions& options = {});

/// Same checks on explicitly supplied fibres; `base` plays the role of
/// A|_x0 and is included in the rank sample.
BonnetConditionReport evaluate_bonnet_conditions(const std::vector<AlgebroidFibre>& sample,
                                                 const AlgebroidFibre& base);

/// Largest principal angle between Ad_phi(omega(A|_x)) and the fibre of the
/// moved patch phi o f at the same chart point.
double ad_equivariance_residual(const HypersurfacePatch& patch, const RigidMotion& phi,
                                const Vec& u);

}  // namespace hsalg

#pragma once

// First and second fundamental forms derived from the logarithmic derivative:
// the inclusion iota: T_x Sigma -> R^{n+1} obtained from E/h ~ rad g, the
// induced Gauss map, and the tensors g_omega, II_omega.

#include "hsalg/algebroid.hpp"

namespace hsalg {

struct OmegaForms {
  Vec u;
  Mat iota;        // (n+1) x n
  Vec nu_omega;    // unit normal to iota(T_x Sigma)
  Mat g_omega;     // iota^T iota
  Mat II_omega;    // symmetrized -<iota e_i, d_j nu_omega>
  double II_asymmetry = 0.0;  // max |II_ij - II_ji| before symmetrizing
};

/// Agreement required between two anchor preimages in iota().
inline constexpr double kChoiceTol = 1e-10;

/// The unique w in rad g ~ R^{n+1} with a - w in h|_x, for a in A|_x.
/// Solves a = (0, w) + k with k in h|_x; throws ChoiceDependent if the
/// decomposition does not exist (a broken fibre).
Vec radical_component(const AlgebroidFibre& fibre, const Vec& a);

/// iota on the chart basis, one column per direction. Each column is
/// computed from two anchor preimages differing by an element of h|_x;
/// throws ChoiceDependent if they disagree beyond kChoiceTol.
Mat iota(const AlgebroidFibre& fibre);
Mat iota(const HypersurfacePatch& patch, const Vec& u);

/// Unit normal to the columns of iota with det[iota | nu] * orientation > 0.
Vec gauss_from_omega(const HypersurfacePatch& patch, const Vec& u);

/// g_omega and II_omega at u; d nu_omega by central differences of
/// gauss_from_omega (one-sided at the chart edges).
OmegaForms omega_forms(const HypersurfacePatch& patch, const Vec& u, double step = 1e-5);

}  // namespace hsalg

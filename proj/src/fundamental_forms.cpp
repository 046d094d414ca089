#include "hsalg/fundamental_forms.hpp"

#include "hsalg/errors.hpp"

#include <algorithm>

namespace hsalg {

Vec radical_component(const AlgebroidFibre& fibre, const Vec& a) {
  const int N = fibre.ambient_dim();
  const int dim = algebra_dimension(N);
  if (a.size() != dim) throw DimensionMismatch("radical_component: wrong coefficient length");
  // columns: rad g (translations), then h|_x
  Mat system(dim, N + fibre.kernel_dim());
  system.leftCols(N) = radical(N).coefficient_matrix();
  system.rightCols(fibre.kernel_dim()) = fibre.kernel_basis;
  const Vec solution = system.colPivHouseholderQr().solve(a);
  const double residual = (system * solution - a).norm();
  if (residual > kChoiceTol * (1.0 + a.norm())) {
    throw ChoiceDependent("radical_component: a is not in rad g + h|_x (residual " +
                          std::to_string(residual) + ")");
  }
  return solution.head(N);
}

Mat iota(const AlgebroidFibre& fibre) {
  const int n = fibre.n();
  const int N = fibre.ambient_dim();
  const auto pinv = fibre.anchor_matrix.completeOrthogonalDecomposition();
  Mat out(N, n);
  for (int j = 0; j < n; ++j) {
    const Vec coords = pinv.solve(Vec(Vec::Unit(n, j)));
    const Vec a = fibre.basis * coords;
    // second preimage: shift by a fixed element of h|_x
    Vec shift = Vec::Zero(a.size());
    for (int k = 0; k < fibre.kernel_dim(); ++k) shift += (1.0 + 0.5 * k) * fibre.kernel_basis.col(k);
    const Vec w = radical_component(fibre, a);
    const Vec w_alt = radical_component(fibre, a + shift);
    if ((w - w_alt).norm() > kChoiceTol * (1.0 + w.norm())) {
      throw ChoiceDependent("iota: preimages of the same tangent vector disagree");
    }
    out.col(j) = w;
  }
  return out;
}

Mat iota(const HypersurfacePatch& patch, const Vec& u) { return iota(fibre(patch, u)); }

Vec gauss_from_omega(const HypersurfacePatch& patch, const Vec& u) {
  return oriented_normal(iota(patch, u), patch.orientation());
}

OmegaForms omega_forms(const HypersurfacePatch& patch, const Vec& u, double step) {
  const int n = patch.n();
  OmegaForms out;
  out.u = u;
  out.iota = iota(patch, u);
  out.nu_omega = oriented_normal(out.iota, patch.orientation());
  out.g_omega = out.iota.transpose() * out.iota;

  const Chart& chart = patch.chart();
  auto normal_at = [&patch](const Vec& p) { return gauss_from_omega(patch, p); };
  Mat II(n, n);
  for (int j = 0; j < n; ++j) {
    const Vec dnu = box_partial(normal_at, u, j, step, chart.lower(), chart.upper());
    for (int i = 0; i < n; ++i) II(i, j) = -out.iota.col(i).dot(dnu);
  }
  out.II_asymmetry = (II - II.transpose()).cwiseAbs().maxCoeff();
  out.II_omega = 0.5 * (II + II.transpose());
  return out;
}

}  // namespace hsalg

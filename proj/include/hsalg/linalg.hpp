#pragma once

#include "hsalg/errors.hpp"

#include <Eigen/Dense>

#include <functional>

namespace hsalg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Number of singular values above `rel_tol` times the largest one.
/// A zero matrix (or an empty one) has rank 0.
int numerical_rank(const Mat& m, double rel_tol);

/// Singular values in decreasing order.
Vec singular_values(const Mat& m);

/// Orthonormal basis of ker(m), as columns. Singular values below
/// `rel_tol` times the largest count as zero.
Mat nullspace(const Mat& m, double rel_tol);

/// Orthonormal basis of the column space of m.
Mat range_basis(const Mat& m, double rel_tol);

/// Largest principal angle (radians) between the column spans of a and b.
/// Both inputs are orthonormalized first; computed through the sine so that
/// small angles are resolved to round-off.
double largest_principal_angle(const Mat& a, const Mat& b, double rel_tol = 1e-12);

/// Unit vector orthogonal to the n columns of an (n+1) x n matrix, signed so
/// that det[m | nu] * orientation > 0.
Vec oriented_normal(const Mat& m, int orientation);

/// Symmetric positive square root of an SPD matrix.
Mat spd_sqrt(const Mat& spd);

// Central-difference helpers. `step` is the absolute step in the argument.

/// d/dt f(x + t dir) at t = 0; fourth-order central stencil, samples within
/// 2 * step of x along dir.
Vec directional_derivative(const std::function<Vec(const Vec&)>& f, const Vec& x,
                           const Vec& dir, double step);

/// Columns are the partial derivatives of f at x.
Mat jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& x, double step);

/// Partial derivative along `axis` of a map sampled only inside the box
/// [lower, upper]: central differences where the stencil fits, second-order
/// one-sided differences at the edges. Throws StencilOutOfDomain if the box is
/// thinner than two steps.
template <class F>
auto box_partial(const F& f, const Vec& u, int axis, double step, const Vec& lower,
                 const Vec& upper) -> decltype(f(u)) {
  auto shifted = [&](double t) {
    Vec p = u;
    p(axis) += t;
    return f(p);
  };
  const double c = u(axis);
  if (c - step >= lower(axis) && c + step <= upper(axis)) {
    return (shifted(step) - shifted(-step)) / (2.0 * step);
  }
  if (c + 2.0 * step <= upper(axis)) {
    return (-3.0 * f(u) + 4.0 * shifted(step) - shifted(2.0 * step)) / (2.0 * step);
  }
  if (c - 2.0 * step >= lower(axis)) {
    return (3.0 * f(u) - 4.0 * shifted(-step) + shifted(-2.0 * step)) / (2.0 * step);
  }
  throw StencilOutOfDomain("difference stencil does not fit inside the chart");
}

}  // namespace hsalg

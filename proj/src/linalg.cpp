#include "hsalg/linalg.hpp"

#include "hsalg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hsalg {

Vec singular_values(const Mat& m) {
  if (m.size() == 0) return Vec();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

int numerical_rank(const Mat& m, double rel_tol) {
  const Vec s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

Mat nullspace(const Mat& m, double rel_tol) {
  const Eigen::Index cols = m.cols();
  if (m.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  int rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > rel_tol * s(0)) ++rank;
    }
  }
  return svd.matrixV().rightCols(cols - rank);
}

Mat range_basis(const Mat& m, double rel_tol) {
  if (m.size() == 0) return Mat(m.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  int rank = 0;
  if (s(0) > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > rel_tol * s(0)) ++rank;
    }
  }
  return svd.matrixU().leftCols(rank);
}

double largest_principal_angle(const Mat& a, const Mat& b, double rel_tol) {
  if (a.rows() != b.rows()) {
    throw DimensionMismatch("principal angle: ambient dimensions differ");
  }
  const Mat qa = range_basis(a, rel_tol);
  const Mat qb = range_basis(b, rel_tol);
  if (qa.cols() != qb.cols()) return M_PI / 2;
  if (qa.cols() == 0) return 0.0;
  // sin of the largest angle = || (I - Qb Qb^T) Qa ||_2
  const Mat residual = qa - qb * (qb.transpose() * qa);
  const Vec s = singular_values(residual);
  const double sine = std::min(1.0, s.size() ? s(0) : 0.0);
  return std::asin(sine);
}

Vec oriented_normal(const Mat& m, int orientation) {
  const Eigen::Index dim = m.rows();
  if (m.cols() != dim - 1) {
    throw DimensionMismatch("oriented_normal expects an (n+1) x n matrix");
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
  Vec nu = svd.matrixU().col(dim - 1);
  Mat frame(dim, dim);
  frame << m, nu;
  if (frame.determinant() * orientation < 0.0) nu = -nu;
  return nu;
}

Mat spd_sqrt(const Mat& spd) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(spd);
  const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Vec directional_derivative(const std::function<Vec(const Vec&)>& f, const Vec& x,
                           const Vec& dir, double step) {
  const double len = dir.norm();
  if (len == 0.0) return Vec::Zero(f(x).size());
  const Vec unit = dir / len;
  auto at = [&](double t) { return f(x + t * unit); };
  return (at(-2.0 * step) - 8.0 * at(-step) + 8.0 * at(step) - at(2.0 * step)) * (len / (12.0 * step));
}

Mat jacobian_fd(const std::function<Vec(const Vec&)>& f, const Vec& x, double step) {
  Mat out;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    const Vec col = (f(xp) - f(xm)) / (2.0 * step);
    if (j == 0) out.resize(col.size(), x.size());
    out.col(j) = col;
  }
  return out;
}

}  // namespace hsalg

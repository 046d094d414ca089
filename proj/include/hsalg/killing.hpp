#pragma once

// The Lie algebra g of Killing fields on R^N (N = n + 1): fields x -> S x + v
// with S skew. Coefficient vectors are taken in the canonical basis
//   E_ij - E_ji (i < j, lexicographic) with v = 0, then e_0 .. e_{N-1},
// which is orthonormal for <(S1,v1),(S2,v2)> = 1/2 tr(S1^T S2) + v1.v2.

#include "hsalg/linalg.hpp"

#include <vector>

namespace hsalg {

/// dim g for ambient dimension N: N(N+1)/2.
constexpr int algebra_dimension(int ambient) { return ambient * (ambient + 1) / 2; }

class KillingField {
 public:
  /// Throws InvalidArgument unless S is square, skew to 1e-12 entrywise, and
  /// v has matching size.
  KillingField(Mat S, Vec v);

  static KillingField zero(int ambient);
  static KillingField translation(Vec v);
  static KillingField from_coefficients(int ambient, const Vec& coeffs);

  int ambient_dim() const { return static_cast<int>(v_.size()); }
  const Mat& S() const { return S_; }
  const Vec& v() const { return v_; }

  Vec coefficients() const;

  /// Canonical norm (see file comment); equals the Euclidean norm of
  /// coefficients().
  double norm() const;

  KillingField operator+(const KillingField& other) const;
  KillingField operator-(const KillingField& other) const;
  KillingField operator*(double s) const;

 private:
  Mat S_;
  Vec v_;
};

class RigidMotion {
 public:
  /// Orientation-preserving only: R^T R = I to 1e-12 and det R = +1.
  RigidMotion(Mat R, Vec t);

  static RigidMotion identity(int ambient);

  int ambient_dim() const { return static_cast<int>(t_.size()); }
  const Mat& R() const { return R_; }
  const Vec& t() const { return t_; }

  Vec apply(const Vec& x) const { return R_ * x + t_; }
  RigidMotion inverse() const;
  RigidMotion compose(const RigidMotion& inner) const;  // this o inner
  /// (N+1) x (N+1) homogeneous matrix [[R, t], [0, 1]].
  Mat homogeneous() const;

 private:
  Mat R_;
  Vec t_;
};

/// A linear subspace of g given by linearly independent Killing fields.
class Subspace {
 public:
  /// Throws InvalidArgument if the basis is rank deficient or mixes
  /// ambient dimensions.
  Subspace(int ambient, std::vector<KillingField> basis);

  int ambient_dim() const { return ambient_; }
  int dimension() const { return static_cast<int>(basis_.size()); }
  const std::vector<KillingField>& basis() const { return basis_; }
  /// dim g x dimension() matrix of coefficient columns.
  Mat coefficient_matrix() const;

 private:
  int ambient_;
  std::vector<KillingField> basis_;
};

Vec killing_eval(const KillingField& X, const Vec& x);

/// Jacobi-Lie bracket with the convention [U, V] = (DV) U - (DU) V:
/// ([X, Y]) = (S_Y S_X - S_X S_Y, S_Y v_X - S_X v_Y).
KillingField killing_bracket(const KillingField& X, const KillingField& Y);

/// Canonical basis of g on R^{n+1}; (n+1)(n+2)/2 fields.
std::vector<KillingField> canonical_basis(int n);

/// Pushforward of X under phi: (R S R^T, R v - R S R^T t).
KillingField adjoint_pushforward(const RigidMotion& phi, const KillingField& X);

/// The constant fields, rad g.
Subspace radical(int ambient);

/// Killing fields vanishing at m: (S, -S m) over the skew basis.
Subspace isotropy_basis(const Vec& m);

/// N x dim g matrix taking coefficient vectors to their value at x.
Mat evaluation_matrix(const Vec& x);

struct CommonZero {
  Vec point;
  double residual = 0.0;
};

/// Least-squares common zero of a subspace of dimension n(n+1)/2. Throws
/// DegenerateSystem when the stacked system has rank < N and NoCommonZero
/// when the residual exceeds 1e-8 (1 + |m|).
CommonZero common_zero(const Subspace& W);

struct Transversality {
  bool transverse = false;
  int defect = 0;  // dim g - dim(W + rad g)
};

/// Whether W + rad g = g; rank threshold 1e-10 relative to the largest
/// singular value.
Transversality transverse_to_radical(const Subspace& W);

/// Precomputed structure constants of g, for brackets on coefficient vectors.
class StructureConstants {
 public:
  explicit StructureConstants(int ambient);
  int ambient_dim() const { return ambient_; }
  int dimension() const { return dim_; }
  Vec bracket(const Vec& a, const Vec& b) const;

 private:
  int ambient_;
  int dim_;
  std::vector<Mat> ad_;  // ad_[i] * b = [basis_i, b]
};

}  // namespace hsalg

#include "hsalg/killing.hpp"

#include "hsalg/errors.hpp"

#include <cmath>
#include <string>

namespace hsalg {

namespace {

constexpr double kSkewTol = 1e-12;
constexpr double kOrthoTol = 1e-12;
constexpr double kRankTol = 1e-10;

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                            " vs " + std::to_string(b));
  }
}

}  // namespace

KillingField::KillingField(Mat S, Vec v) : S_(std::move(S)), v_(std::move(v)) {
  if (S_.rows() != S_.cols() || S_.rows() != v_.size()) {
    throw InvalidArgument("KillingField: S must be N x N and v of length N");
  }
  if (S_.size() > 0 && (S_ + S_.transpose()).cwiseAbs().maxCoeff() > kSkewTol) {
    throw InvalidArgument("KillingField: S is not skew-symmetric");
  }
}

KillingField KillingField::zero(int ambient) {
  return {Mat::Zero(ambient, ambient), Vec::Zero(ambient)};
}

KillingField KillingField::translation(Vec v) {
  const auto N = v.size();
  return {Mat::Zero(N, N), std::move(v)};
}

KillingField KillingField::from_coefficients(int ambient, const Vec& coeffs) {
  if (coeffs.size() != algebra_dimension(ambient)) {
    throw DimensionMismatch("KillingField::from_coefficients: expected " +
                            std::to_string(algebra_dimension(ambient)) + " coefficients, got " +
                            std::to_string(coeffs.size()));
  }
  Mat S = Mat::Zero(ambient, ambient);
  int k = 0;
  for (int i = 0; i < ambient; ++i) {
    for (int j = i + 1; j < ambient; ++j, ++k) {
      S(i, j) = coeffs(k);
      S(j, i) = -coeffs(k);
    }
  }
  return {std::move(S), coeffs.tail(ambient)};
}

Vec KillingField::coefficients() const {
  const int N = ambient_dim();
  Vec out(algebra_dimension(N));
  int k = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j, ++k) {
      out(k) = 0.5 * (S_(i, j) - S_(j, i));
    }
  }
  out.tail(N) = v_;
  return out;
}

double KillingField::norm() const { return std::sqrt(0.5 * S_.squaredNorm() + v_.squaredNorm()); }

KillingField KillingField::operator+(const KillingField& other) const {
  require_same_dim(ambient_dim(), other.ambient_dim(), "KillingField +");
  return {S_ + other.S_, v_ + other.v_};
}

KillingField KillingField::operator-(const KillingField& other) const {
  require_same_dim(ambient_dim(), other.ambient_dim(), "KillingField -");
  return {S_ - other.S_, v_ - other.v_};
}

KillingField KillingField::operator*(double s) const { return {S_ * s, v_ * s}; }

RigidMotion::RigidMotion(Mat R, Vec t) : R_(std::move(R)), t_(std::move(t)) {
  const auto N = t_.size();
  if (R_.rows() != N || R_.cols() != N) {
    throw InvalidArgument("RigidMotion: R must be N x N and t of length N");
  }
  if ((R_.transpose() * R_ - Mat::Identity(N, N)).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw InvalidArgument("RigidMotion: R is not orthogonal");
  }
  if (R_.determinant() < 0.0) {
    throw InvalidArgument("RigidMotion: reflections are not supported (det R = -1)");
  }
}

RigidMotion RigidMotion::identity(int ambient) {
  return {Mat::Identity(ambient, ambient), Vec::Zero(ambient)};
}

RigidMotion RigidMotion::inverse() const {
  return {R_.transpose(), -(R_.transpose() * t_)};
}

RigidMotion RigidMotion::compose(const RigidMotion& inner) const {
  require_same_dim(ambient_dim(), inner.ambient_dim(), "RigidMotion::compose");
  return {R_ * inner.R_, R_ * inner.t_ + t_};
}

Mat RigidMotion::homogeneous() const {
  const auto N = t_.size();
  Mat H = Mat::Identity(N + 1, N + 1);
  H.topLeftCorner(N, N) = R_;
  H.topRightCorner(N, 1) = t_;
  return H;
}

Subspace::Subspace(int ambient, std::vector<KillingField> basis)
    : ambient_(ambient), basis_(std::move(basis)) {
  for (const auto& X : basis_) {
    require_same_dim(ambient_, X.ambient_dim(), "Subspace");
  }
  if (!basis_.empty() && numerical_rank(coefficient_matrix(), kRankTol) != dimension()) {
    throw InvalidArgument("Subspace: basis is not linearly independent");
  }
}

Mat Subspace::coefficient_matrix() const {
  Mat out(algebra_dimension(ambient_), dimension());
  for (int i = 0; i < dimension(); ++i) out.col(i) = basis_[i].coefficients();
  return out;
}

Vec killing_eval(const KillingField& X, const Vec& x) {
  require_same_dim(X.ambient_dim(), static_cast<int>(x.size()), "killing_eval");
  return X.S() * x + X.v();
}

KillingField killing_bracket(const KillingField& X, const KillingField& Y) {
  require_same_dim(X.ambient_dim(), Y.ambient_dim(), "killing_bracket");
  Mat S = Y.S() * X.S() - X.S() * Y.S();
  // the commutator of skew matrices is skew up to rounding; restore exactly
  S = 0.5 * (S - S.transpose()).eval();
  return {std::move(S), Y.S() * X.v() - X.S() * Y.v()};
}

std::vector<KillingField> canonical_basis(int n) {
  if (n < 1) throw InvalidArgument("canonical_basis: n must be >= 1");
  const int N = n + 1;
  std::vector<KillingField> out;
  out.reserve(algebra_dimension(N));
  for (int k = 0; k < algebra_dimension(N); ++k) {
    out.push_back(KillingField::from_coefficients(N, Vec::Unit(algebra_dimension(N), k)));
  }
  return out;
}

KillingField adjoint_pushforward(const RigidMotion& phi, const KillingField& X) {
  require_same_dim(phi.ambient_dim(), X.ambient_dim(), "adjoint_pushforward");
  Mat S = phi.R() * X.S() * phi.R().transpose();
  S = 0.5 * (S - S.transpose()).eval();
  Vec v = phi.R() * X.v() - S * phi.t();
  return {std::move(S), std::move(v)};
}

Subspace radical(int ambient) {
  std::vector<KillingField> basis;
  for (int k = 0; k < ambient; ++k) basis.push_back(KillingField::translation(Vec::Unit(ambient, k)));
  return {ambient, std::move(basis)};
}

Subspace isotropy_basis(const Vec& m) {
  const int N = static_cast<int>(m.size());
  std::vector<KillingField> basis;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      Mat S = Mat::Zero(N, N);
      S(i, j) = 1.0;
      S(j, i) = -1.0;
      Vec v = -(S * m);
      basis.emplace_back(std::move(S), std::move(v));
    }
  }
  return {N, std::move(basis)};
}

Mat evaluation_matrix(const Vec& x) {
  const int N = static_cast<int>(x.size());
  Mat E = Mat::Zero(N, algebra_dimension(N));
  int k = 0;
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j, ++k) {
      E(i, k) = x(j);
      E(j, k) = -x(i);
    }
  }
  E.rightCols(N).setIdentity();
  return E;
}

CommonZero common_zero(const Subspace& W) {
  const int N = W.ambient_dim();
  const int expected = N * (N - 1) / 2;
  if (W.dimension() != expected) {
    throw InvalidArgument("common_zero: subspace must have dimension " + std::to_string(expected));
  }
  Mat A(N * W.dimension(), N);
  Vec b(N * W.dimension());
  for (int i = 0; i < W.dimension(); ++i) {
    A.middleRows(i * N, N) = W.basis()[i].S();
    b.segment(i * N, N) = -W.basis()[i].v();
  }
  if (numerical_rank(A, kRankTol) < N) {
    throw DegenerateSystem("common_zero: stacked system has rank < N; zero is not unique");
  }
  CommonZero out;
  out.point = A.colPivHouseholderQr().solve(b);
  out.residual = (A * out.point - b).norm();
  if (out.residual >= 1e-8 * (1.0 + out.point.norm())) {
    throw NoCommonZero("common_zero: residual " + std::to_string(out.residual) +
                       " exceeds threshold");
  }
  return out;
}

Transversality transverse_to_radical(const Subspace& W) {
  const int N = W.ambient_dim();
  const int dim = algebra_dimension(N);
  Mat M(dim, W.dimension() + N);
  M << W.coefficient_matrix(), radical(N).coefficient_matrix();
  const int rank = numerical_rank(M, kRankTol);
  return {rank == dim, dim - rank};
}

StructureConstants::StructureConstants(int ambient)
    : ambient_(ambient), dim_(algebra_dimension(ambient)) {
  const auto basis = canonical_basis(ambient - 1);
  ad_.reserve(dim_);
  for (int i = 0; i < dim_; ++i) {
    Mat ad(dim_, dim_);
    for (int j = 0; j < dim_; ++j) ad.col(j) = killing_bracket(basis[i], basis[j]).coefficients();
    ad_.push_back(std::move(ad));
  }
}

Vec StructureConstants::bracket(const Vec& a, const Vec& b) const {
  if (a.size() != dim_ || b.size() != dim_) {
    throw DimensionMismatch("StructureConstants::bracket: wrong coefficient length");
  }
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (a(i) != 0.0) out.noalias() += a(i) * (ad_[i] * b);
  }
  return out;
}

}  // namespace hsalg

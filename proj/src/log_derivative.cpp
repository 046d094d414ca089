#include "hsalg/log_derivative.hpp"

#include "hsalg/errors.hpp"

#include <algorithm>
#include <limits>

namespace hsalg {

KillingField omega(const AlgebroidFibre& fibre, const Vec& a) {
  return KillingField::from_coefficients(fibre.ambient_dim(), a);
}

namespace {

// omega(Y) at u as a Killing field, through the fibre at u
KillingField omega_of_section(const Section& Y, const Vec& u) {
  return omega(fibre(Y.patch(), u), Y(u));
}

// fourth-order central difference of u -> omega(Y)(u) along dir
Vec omega_derivative(const Section& Y, const Vec& u, const Vec& dir, double step) {
  const double len = dir.norm();
  if (len == 0.0) return Vec::Zero(algebra_dimension(Y.patch().ambient_dim()));
  const Vec e = dir / len;
  auto at = [&](double t) { return omega_of_section(Y, u + t * e).coefficients(); };
  return (at(-2 * step) - 8.0 * at(-step) + 8.0 * at(step) - at(2 * step)) * (len / (12.0 * step));
}

}  // namespace

double morphism_residual(const Section& X, const Section& Y, const Vec& u,
                         const BracketOptions& options) {
  const HypersurfacePatch& patch = X.patch();
  const AlgebroidFibre here = fibre(patch, u);

  const Vec left = omega(here, section_bracket(X, Y, u, options).value).coefficients();

  const KillingField oX = omega(here, X(u));
  const KillingField oY = omega(here, Y(u));
  const Vec wX = anchor(here, oX.coefficients());
  const Vec wY = anchor(here, oY.coefficients());
  // the right side uses the other derivative method from the bracket, so the
  // two sides share no difference quotients when analytic derivatives exist
  const bool analytic = X.has_analytic_derivative() && Y.has_analytic_derivative();
  const bool bracket_analytic = analytic && options.mode == DerivativeMode::Analytic;
  Vec dY, dX;
  if (analytic && !bracket_analytic) {
    dY = Y.derivative(u) * wX;
    dX = X.derivative(u) * wY;
  } else {
    dY = omega_derivative(Y, u, wX, options.step);
    dX = omega_derivative(X, u, wY, options.step);
  }
  const StructureConstants constants(patch.ambient_dim());
  const Vec right = dY - dX + constants.bracket(oX.coefficients(), oY.coefficients());
  return (left - right).norm();
}

BonnetConditionReport evaluate_bonnet_conditions(const std::vector<AlgebroidFibre>& sample,
                                                 const AlgebroidFibre& base) {
  BonnetConditionReport report;
  const int n = base.n();
  report.n = n;
  report.u0 = base.u;
  report.x0 = base.x;
  report.expected_rank = n * (n + 3) / 2;
  report.sample_points = static_cast<int>(sample.size()) + 1;
  report.min_rank = std::numeric_limits<int>::max();
  report.max_rank = 0;
  report.min_anchor_rank = std::numeric_limits<int>::max();
  report.min_injectivity_singular_value = std::numeric_limits<double>::infinity();

  auto visit = [&](const AlgebroidFibre& F) {
    const int rank = numerical_rank(F.basis, kFibreRankTol);
    report.min_rank = std::min(report.min_rank, rank);
    report.max_rank = std::max(report.max_rank, rank);
    report.min_anchor_rank =
        std::min(report.min_anchor_rank, numerical_rank(F.anchor_matrix, kFibreRankTol));
    const Vec s = singular_values(F.basis);
    const double smallest = s.size() ? s(s.size() - 1) : 0.0;
    report.min_injectivity_singular_value = std::min(report.min_injectivity_singular_value, smallest);
  };
  visit(base);
  for (const auto& F : sample) visit(F);

  report.rank_ok = report.min_rank == report.expected_rank && report.max_rank == report.expected_rank;
  report.transitive_ok = report.min_anchor_rank == n;
  report.injective_ok = report.min_injectivity_singular_value > report.injectivity_threshold;
  if (!report.rank_ok) report.failures.push_back("rank: fibre rank differs from n(n+3)/2");
  if (!report.transitive_ok) report.failures.push_back("transitivity: anchor is not surjective");
  if (!report.injective_ok) report.failures.push_back("injectivity: omega degenerates on a fibre");

  // (4) at the base point
  const int N = base.ambient_dim();
  report.kernel_dim = base.kernel_dim();
  try {
    std::vector<KillingField> fields;
    for (int i = 0; i < base.kernel_dim(); ++i) fields.push_back(omega(base, base.kernel_basis.col(i)));
    const Subspace W(N, fields);
    const Transversality t = transverse_to_radical(W);
    report.transverse_ok = t.transverse;
    report.transverse_defect = t.defect;
    if (!t.transverse) {
      report.failures.push_back("transversality: omega(h_x0) + rad g has defect " +
                                std::to_string(t.defect));
    }
    const CommonZero zero = common_zero(W);
    report.m0 = zero.point;
    report.m0_residual = zero.residual;
    report.m0_distance = (zero.point - base.x).norm();
    for (const auto& Wi : W.basis()) {
      report.m0_max_field_value = std::max(report.m0_max_field_value, killing_eval(Wi, zero.point).norm());
    }
  } catch (const Error& e) {
    report.failures.push_back(std::string("base point: ") + e.what());
  }
  return report;
}

BonnetConditionReport check_bonnet_conditions(const HypersurfacePatch& patch, const Vec& u0,
                                              const BonnetCheckOptions& options) {
  std::vector<AlgebroidFibre> sample;
  std::vector<std::string> errors;
  for (int i = 0; i < options.samples; ++i) {
    const Vec u = random_interior_point(patch.chart(), options.seed + static_cast<std::uint64_t>(i));
    try {
      sample.push_back(fibre(patch, u));
    } catch (const Error& e) {
      errors.push_back(std::string("sample point: ") + e.what());
    }
  }
  BonnetConditionReport report;
  try {
    report = evaluate_bonnet_conditions(sample, fibre(patch, u0));
  } catch (const Error& e) {
    report.u0 = u0;
    report.n = patch.n();
    report.expected_rank = patch.n() * (patch.n() + 3) / 2;
    report.failures.push_back(std::string("base point: ") + e.what());
  }
  if (!errors.empty()) {
    // a fibre that could not be built counts against conditions (1)-(3)
    report.rank_ok = report.transitive_ok = report.injective_ok = false;
    report.failures.insert(report.failures.end(), errors.begin(), errors.end());
  }
  report.sample_points = options.samples + 1;
  return report;
}

double ad_equivariance_residual(const HypersurfacePatch& patch, const RigidMotion& phi,
                                const Vec& u) {
  const AlgebroidFibre original = fibre(patch, u);
  const AlgebroidFibre moved = fibre(patch.moved(phi), u);
  Mat pushed(original.basis.rows(), original.basis.cols());
  for (int c = 0; c < original.rank(); ++c) {
    pushed.col(c) = adjoint_pushforward(phi, omega(original, original.basis.col(c))).coefficients();
  }
  return largest_principal_angle(pushed, moved.basis);
}

}  // namespace hsalg

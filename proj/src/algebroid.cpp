#include "hsalg/algebroid.hpp"

#include "hsalg/errors.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace hsalg {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct PointGeometry {
  Vec x;
  Mat J;
  Vec nu;
};

PointGeometry geometry_at(const HypersurfacePatch& patch, const Vec& u) {
  PointGeometry g{patch.point(u), jacobian(patch, u), Vec()};
  g.nu = oriented_normal(g.J, patch.orientation());
  return g;
}

// least-squares preimage under J, no tangency check
Vec anchor_lsq(const HypersurfacePatch& patch, const Vec& u, const Vec& a) {
  const Vec x = patch.point(u);
  const Mat J = jacobian(patch, u);
  return J.householderQr().solve(evaluation_matrix(x) * a);
}

Vec project_onto_fibre(const Vec& raw, const Vec& x, const Vec& nu) {
  const Vec rho = tangency_functional(x, nu);
  const double norm2 = rho.squaredNorm();
  return raw - rho * (rho.dot(raw) / norm2);
}

void require_stencil(const Chart& chart, const Vec& u, double step, const char* what) {
  if (!chart.contains_with_margin(u, 3.0 * step)) {
    throw StencilOutOfDomain(std::string(what) + ": point is within 3 steps of the chart boundary");
  }
}

}  // namespace

Vec tangency_functional(const Vec& x, const Vec& nu) { return evaluation_matrix(x).transpose() * nu; }

AlgebroidFibre fibre_from_basis(const Vec& u, const Vec& x, const Mat& J, const Vec& nu,
                                const Mat& basis) {
  AlgebroidFibre out;
  out.u = u;
  out.x = x;
  out.jacobian = J;
  out.normal = nu;
  out.basis = basis;
  out.anchor_matrix = J.householderQr().solve(evaluation_matrix(x) * basis);
  out.kernel_basis = basis * nullspace(out.anchor_matrix, kFibreRankTol);
  return out;
}

AlgebroidFibre fibre(const HypersurfacePatch& patch, const Vec& u) {
  const PointGeometry geo = geometry_at(patch, u);
  const Vec rho = tangency_functional(geo.x, geo.nu);
  const Mat basis = nullspace(rho.transpose(), kFibreRankTol);
  return fibre_from_basis(u, geo.x, geo.J, geo.nu, basis);
}

Vec anchor(const AlgebroidFibre& fibre, const Vec& a) {
  if (a.size() != algebra_dimension(fibre.ambient_dim())) {
    throw DimensionMismatch("anchor: coefficient vector has wrong length");
  }
  const Vec value = evaluation_matrix(fibre.x) * a;
  const Vec w = fibre.jacobian.householderQr().solve(value);
  const double residual = (fibre.jacobian * w - value).norm();
  if (residual > 1e-9 * (1.0 + value.norm())) {
    throw NotTangent("anchor: Killing field is not tangent at the base point (residual " +
                     std::to_string(residual) + ")");
  }
  return w;
}

Vec anchor_at(const HypersurfacePatch& patch, const Vec& u, const Vec& a) {
  const PointGeometry geo = geometry_at(patch, u);
  AlgebroidFibre light;
  light.u = u;
  light.x = geo.x;
  light.jacobian = geo.J;
  light.normal = geo.nu;
  return anchor(light, a);
}

Section::Section(std::shared_ptr<const HypersurfacePatch> patch, RawMap raw)
    : patch_(std::move(patch)), raw_(std::move(raw)) {
  if (!patch_ || !raw_.value) throw InvalidArgument("Section: patch and raw map are required");
}

Vec Section::operator()(const Vec& u) const {
  const PointGeometry geo = geometry_at(*patch_, u);
  return project_onto_fibre(raw_.value(u), geo.x, geo.nu);
}

bool Section::has_analytic_derivative() const {
  return raw_.jacobian.has_value() && patch_->has_analytic_jacobian() &&
         patch_->has_analytic_hessian();
}

Mat Section::derivative(const Vec& u) const {
  if (!has_analytic_derivative()) {
    throw InvalidArgument("Section::derivative: analytic derivatives unavailable");
  }
  const int n = patch_->n();
  const PointGeometry geo = geometry_at(*patch_, u);
  const SecondPartials d2 = second_partials(*patch_, u);
  Mat II(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) II(i, j) = d2[i * n + j].dot(geo.nu);
  }
  const Mat g = geo.J.transpose() * geo.J;
  // Weingarten: d nu / du_k = -J g^{-1} II e_k
  const Mat dnu = -geo.J * g.ldlt().solve(II);

  const Vec r = raw_.value(u);
  const Mat Dr = (*raw_.jacobian)(u);
  const Vec rho = tangency_functional(geo.x, geo.nu);
  const double len = rho.norm();
  const Vec rho_hat = rho / len;
  const Mat Ex = evaluation_matrix(geo.x);

  Mat out(r.size(), n);
  for (int k = 0; k < n; ++k) {
    Mat Edx = evaluation_matrix(Vec(geo.J.col(k)));
    Edx.rightCols(geo.x.size()).setZero();
    const Vec drho = Edx.transpose() * geo.nu + Ex.transpose() * dnu.col(k);
    const Vec drho_hat = (drho - rho_hat * rho_hat.dot(drho)) / len;
    const Vec dr = Dr.col(k);
    out.col(k) = dr - rho_hat * rho_hat.dot(dr) - drho_hat * rho_hat.dot(r) - rho_hat * drho_hat.dot(r);
  }
  return out;
}

Section scale_section(const ScalarField& f, const Section& Y) {
  RawMap raw;
  raw.value = [f, y = Y.raw_map().value](const Vec& u) -> Vec { return f.value(u) * y(u); };
  if (Y.raw_map().jacobian && f.gradient) {
    raw.jacobian = [f, y = Y.raw_map().value, dy = *Y.raw_map().jacobian](const Vec& u) -> Mat {
      return y(u) * f.gradient(u).transpose() + f.value(u) * dy(u);
    };
  }
  return {Y.patch_ptr(), std::move(raw)};
}

PolynomialMap::PolynomialMap(Vec center, Vec constant, Mat linear, std::vector<Mat> quadratic)
    : center_(std::move(center)),
      constant_(std::move(constant)),
      linear_(std::move(linear)),
      quadratic_(std::move(quadratic)) {
  if (linear_.rows() != constant_.size() || linear_.cols() != center_.size() ||
      quadratic_.size() != static_cast<std::size_t>(constant_.size())) {
    throw DimensionMismatch("PolynomialMap: inconsistent coefficient shapes");
  }
}

PolynomialMap PolynomialMap::random(int out_dim, const Vec& center, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  const auto n = center.size();
  Vec c(out_dim);
  for (int i = 0; i < out_dim; ++i) c(i) = coeff(rng);
  Mat L(out_dim, n);
  for (int i = 0; i < out_dim; ++i)
    for (Eigen::Index j = 0; j < n; ++j) L(i, j) = coeff(rng);
  std::vector<Mat> Q(out_dim, Mat::Zero(n, n));
  for (int m = 0; m < out_dim; ++m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        // monomial coefficient of d_i d_j
        const double a = coeff(rng);
        if (i == j) {
          Q[m](i, i) = a;
        } else {
          Q[m](i, j) = 0.5 * a;
          Q[m](j, i) = 0.5 * a;
        }
      }
    }
  }
  return {center, c, L, Q};
}

Vec PolynomialMap::operator()(const Vec& u) const {
  const Vec d = u - center_;
  Vec out = constant_ + linear_ * d;
  for (int m = 0; m < out_dim(); ++m) out(m) += d.dot(quadratic_[m] * d);
  return out;
}

Mat PolynomialMap::jacobian(const Vec& u) const {
  const Vec d = u - center_;
  Mat out = linear_;
  for (int m = 0; m < out_dim(); ++m) out.row(m) += 2.0 * (quadratic_[m] * d).transpose();
  return out;
}

Section random_section(std::shared_ptr<const HypersurfacePatch> patch, std::uint64_t seed) {
  const int dim = algebra_dimension(patch->ambient_dim());
  const auto poly = PolynomialMap::random(dim, patch->chart().center(), seed);
  RawMap raw{[poly](const Vec& u) { return poly(u); },
             [poly](const Vec& u) { return poly.jacobian(u); }};
  return {std::move(patch), std::move(raw)};
}

ScalarField random_scalar_field(const Vec& center, int n, std::uint64_t seed) {
  if (center.size() != n) throw DimensionMismatch("random_scalar_field: center has wrong size");
  const auto poly = PolynomialMap::random(1, center, seed);
  return {[poly](const Vec& u) { return poly(u)(0); },
          [poly](const Vec& u) -> Vec { return poly.jacobian(u).row(0).transpose(); }};
}

namespace {

Vec derivative_along(const Section& s, const Vec& u, const Vec& dir, const BracketOptions& opt) {
  if (opt.mode == DerivativeMode::Analytic && s.has_analytic_derivative()) {
    return s.derivative(u) * dir;
  }
  return directional_derivative([&s](const Vec& p) { return s(p); }, u, dir, opt.step);
}

}  // namespace

BracketValue section_bracket(const Section& X, const Section& Y, const Vec& u,
                             const BracketOptions& options) {
  const HypersurfacePatch& patch = X.patch();
  if (Y.patch().ambient_dim() != patch.ambient_dim()) {
    throw DimensionMismatch("section_bracket: sections live on different patches");
  }
  require_stencil(patch.chart(), u, options.step, "section_bracket");
  const PointGeometry geo = geometry_at(patch, u);
  const Vec a = project_onto_fibre(X.raw(u), geo.x, geo.nu);
  const Vec b = project_onto_fibre(Y.raw(u), geo.x, geo.nu);
  const Mat Ex = evaluation_matrix(geo.x);
  const auto qr = geo.J.householderQr();
  const Vec wX = qr.solve(Ex * a);
  const Vec wY = qr.solve(Ex * b);

  const int N = patch.ambient_dim();
  const Vec naive = killing_bracket(KillingField::from_coefficients(N, a),
                                    KillingField::from_coefficients(N, b))
                        .coefficients();
  BracketValue out;
  out.value = derivative_along(Y, u, wX, options) - derivative_along(X, u, wY, options) + naive;
  out.tangency_residual = std::abs((Ex * out.value).dot(geo.nu));
  return out;
}

Section bracket_section(const Section& X, const Section& Y, const BracketOptions& options) {
  RawMap raw{[X, Y, options](const Vec& u) { return section_bracket(X, Y, u, options).value; },
             std::nullopt};
  return {X.patch_ptr(), std::move(raw)};
}

Vec jacobi_lie_bracket(const std::function<Vec(const Vec&)>& U,
                       const std::function<Vec(const Vec&)>& V, const Vec& x, double step) {
  return directional_derivative(V, x, U(x), step) - directional_derivative(U, x, V(x), step);
}

LieAlgebraAction killing_action(int ambient) {
  LieAlgebraAction action;
  action.manifold_dim = ambient;
  action.algebra_dim = algebra_dimension(ambient);
  action.infinitesimal = [](const Vec& xi, const Vec& m) -> Vec { return evaluation_matrix(m) * xi; };
  action.bracket = [ambient](const Vec& a, const Vec& b) {
    return killing_bracket(KillingField::from_coefficients(ambient, a),
                           KillingField::from_coefficients(ambient, b))
        .coefficients();
  };
  return action;
}

Vec action_algebroid_bracket(const LieAlgebraAction& action, const AlgebraValuedMap& X,
                             const AlgebraValuedMap& Y, const Vec& m, double step) {
  if (m.size() != action.manifold_dim) {
    throw DimensionMismatch("action_algebroid_bracket: point has wrong dimension");
  }
  const Vec a = X(m);
  const Vec b = Y(m);
  const Vec tX = action.infinitesimal(a, m);
  const Vec tY = action.infinitesimal(b, m);
  if (action.contains) {
    for (const Vec* t : {&tX, &tY}) {
      const double len = t->norm();
      if (len == 0.0) continue;
      const Vec d = (*t) * (step / len);
      if (!action.contains(m + d) || !action.contains(m - d)) {
        throw StencilOutOfDomain("action_algebroid_bracket: stencil leaves the manifold chart");
      }
    }
  }
  return directional_derivative(Y, m, tX, step) - directional_derivative(X, m, tY, step) +
         action.bracket(a, b);
}

bool ResidualReport::all_pass() const {
  for (const auto& [name, stat] : entries) {
    (void)name;
    if (!stat.pass) return false;
  }
  return true;
}

void ResidualReport::merge(const ResidualReport& other) {
  for (const auto& [name, stat] : other.entries) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      entries.emplace(name, stat);
      continue;
    }
    ResidualStat& mine = it->second;
    const int total = mine.samples + stat.samples;
    if (total > 0) mine.mean = (mine.mean * mine.samples + stat.mean * stat.samples) / total;
    mine.samples = total;
    mine.max = std::max(mine.max, stat.max);
    mine.tolerance = std::min(mine.tolerance, stat.tolerance);
    mine.pass = mine.pass && stat.pass && mine.max < mine.tolerance;
  }
}

const std::vector<std::string>& residual_names() {
  static const std::vector<std::string> names{"leibniz",         "jacobi",
                                              "anchor_morphism", "closure",
                                              "antisymmetry",    "well_definedness",
                                              "ambient_extension"};
  return names;
}

Vec random_interior_point(const Chart& chart, std::uint64_t seed, double margin_fraction) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec u(chart.n());
  for (int i = 0; i < chart.n(); ++i) {
    const double width = chart.upper()(i) - chart.lower()(i);
    const double lo = chart.lower()(i) + margin_fraction * width;
    u(i) = lo + unit(rng) * (1.0 - 2.0 * margin_fraction) * width;
  }
  return u;
}

namespace {

Vec random_vector(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out(i) = coeff(rng);
  return out;
}

// Foot point of y on the patch, by Gauss-Newton from `start`.
Vec retract(const HypersurfacePatch& patch, const Vec& y, const Vec& start) {
  Vec u = start;
  for (int it = 0; it < 50; ++it) {
    const Mat J = jacobian(patch, u);
    const Vec du = J.householderQr().solve(y - patch.point(u));
    u += du;
    if (du.norm() < 1e-15 * (1.0 + u.norm())) break;
  }
  return u;
}

std::vector<double> sample_residuals(const std::shared_ptr<const HypersurfacePatch>& patch,
                                     const ResidualOptions& opt, std::uint64_t s) {
  const Chart& chart = patch->chart();
  const int n = patch->n();
  const int N = patch->ambient_dim();
  const Vec u = random_interior_point(chart, mix_seed(s, 0));
  const Section X = random_section(patch, mix_seed(s, 1));
  const Section Y = random_section(patch, mix_seed(s, 2));
  const Section Z = random_section(patch, mix_seed(s, 3));
  const ScalarField f = random_scalar_field(chart.center(), n, mix_seed(s, 4));

  const BracketOptions inner{opt.mode, opt.step};
  const BracketOptions outer{opt.mode, opt.nested_step};

  const BracketValue XY = section_bracket(X, Y, u, inner);
  const Vec YX = section_bracket(Y, X, u, inner).value;

  // [X, fY] - f [X, Y] - df(#X) Y
  const Vec wX = anchor_lsq(*patch, u, X(u));
  const Vec leibniz_rhs = f.value(u) * XY.value + f.gradient(u).dot(wX) * Y(u);
  const double leibniz =
      (section_bracket(X, scale_section(f, Y), u, inner).value - leibniz_rhs).norm();

  const Vec cyclic = section_bracket(bracket_section(X, Y, inner), Z, u, outer).value +
                     section_bracket(bracket_section(Y, Z, inner), X, u, outer).value +
                     section_bracket(bracket_section(Z, X, inner), Y, u, outer).value;

  // #[X, Y] against the Jacobi-Lie bracket of the anchored vector fields
  auto anchored = [&patch](const Section& S) {
    return [&patch, S](const Vec& p) { return anchor_lsq(*patch, p, S(p)); };
  };
  const Vec left = anchor_lsq(*patch, u, XY.value);
  const Vec right = jacobi_lie_bracket(anchored(X), anchored(Y), u, opt.step);

  // same sections through raw maps differing by multiples of the constraint
  auto shifted = [&patch](const Section& S, std::uint64_t seed) {
    const ScalarField c = random_scalar_field(patch->chart().center(), patch->n(), seed);
    RawMap raw{[&patch, c, r = S.raw_map().value](const Vec& p) -> Vec {
                 const Vec x = patch->point(p);
                 const Vec nu = gauss_map(*patch, p);
                 return r(p) + c.value(p) * tangency_functional(x, nu);
               },
               std::nullopt};
    return Section(patch, std::move(raw));
  };
  const Vec XY_shifted =
      section_bracket(shifted(X, mix_seed(s, 5)), shifted(Y, mix_seed(s, 6)), u, inner).value;

  // ambient extensions X~(y) = X(r(y)) + d(y) C with d the normal offset
  const Vec C1 = random_vector(algebra_dimension(N), mix_seed(s, 7));
  const Vec C2 = random_vector(algebra_dimension(N), mix_seed(s, 8));
  auto extend = [&patch, &u](const Section& S, const Vec& C) {
    return [&patch, &u, S, C](const Vec& y) -> Vec {
      const Vec foot = retract(*patch, y, u);
      const double offset = gauss_map(*patch, foot).dot(y - patch->point(foot));
      return S(foot) + offset * C;
    };
  };
  const Vec ambient = action_algebroid_bracket(killing_action(N), extend(X, C1), extend(Y, C2),
                                               patch->point(u), opt.step);

  return {leibniz,
          cyclic.norm(),
          (left - right).norm(),
          XY.tangency_residual,
          (XY.value + YX).norm(),
          (XY_shifted - XY.value).norm(),
          (ambient - XY.value).norm()};
}

}  // namespace

ResidualReport identity_residuals(const HypersurfacePatch& patch_in, const ResidualOptions& opt) {
  const auto patch = std::make_shared<const HypersurfacePatch>(patch_in);
  const auto& names = residual_names();
  const int samples = std::max(opt.samples, 1);
  std::vector<std::vector<double>> values(samples);

  auto work = [&](int start, int stride) {
    for (int i = start; i < samples; i += stride) {
      try {
        values[i] = sample_residuals(patch, opt, mix_seed(opt.seed, static_cast<std::uint64_t>(i)));
      } catch (const std::exception&) {
        values[i].assign(names.size(), std::numeric_limits<double>::infinity());
      }
    }
  };
  const int threads = std::max(1, std::min(opt.threads, samples));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  const double default_tol =
      opt.tolerance.value_or(opt.mode == DerivativeMode::Analytic ? 1e-6 : 1e-4);
  ResidualReport report;
  for (std::size_t k = 0; k < names.size(); ++k) {
    ResidualStat stat;
    stat.samples = samples;
    const auto ov = opt.tolerance_overrides.find(names[k]);
    stat.tolerance = ov == opt.tolerance_overrides.end() ? default_tol : ov->second;
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
      stat.max = std::max(stat.max, values[i][k]);
      sum += values[i][k];
    }
    stat.mean = sum / samples;
    stat.pass = stat.max < stat.tolerance;
    report.entries[names[k]] = stat;
  }
  return report;
}

}  // namespace hsalg

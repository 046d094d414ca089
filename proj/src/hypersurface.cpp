#include "hsalg/hypersurface.hpp"

#include "hsalg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hsalg {

Chart::Chart(Vec lower, Vec upper, std::vector<int> grid)
    : lower_(std::move(lower)), upper_(std::move(upper)), grid_(std::move(grid)) {
  if (lower_.size() < 1 || lower_.size() != upper_.size() ||
      static_cast<std::size_t>(lower_.size()) != grid_.size()) {
    throw InvalidArgument("Chart: lower, upper and grid must have the same positive length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_(i) < upper_(i))) throw InvalidArgument("Chart: lower must be < upper on every axis");
    if (grid_[i] < 2) throw InvalidArgument("Chart: grid needs at least 2 samples per axis");
  }
}

Chart::Chart(Vec lower, Vec upper, int samples)
    : Chart(lower, upper, std::vector<int>(static_cast<std::size_t>(lower.size()), samples)) {}

double Chart::spacing(int axis) const {
  return (upper_(axis) - lower_(axis)) / (grid_[axis] - 1);
}

double Chart::coordinate(int axis, int index) const {
  if (index == grid_[axis] - 1) return upper_(axis);
  return lower_(axis) + index * spacing(axis);
}

Vec Chart::node(const std::vector<int>& index) const {
  Vec u(n());
  for (int a = 0; a < n(); ++a) u(a) = coordinate(a, index[a]);
  return u;
}

int Chart::node_count() const {
  return std::accumulate(grid_.begin(), grid_.end(), 1, std::multiplies<>());
}

std::vector<int> Chart::unflatten(int flat) const {
  std::vector<int> index(grid_.size());
  for (int a = n() - 1; a >= 0; --a) {
    index[a] = flat % grid_[a];
    flat /= grid_[a];
  }
  return index;
}

int Chart::flatten(const std::vector<int>& index) const {
  int flat = 0;
  for (int a = 0; a < n(); ++a) flat = flat * grid_[a] + index[a];
  return flat;
}

bool Chart::contains(const Vec& u) const { return contains_with_margin(u, 0.0); }

bool Chart::contains_with_margin(const Vec& u, double margin) const {
  if (u.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) - margin < lower_(i) || u(i) + margin > upper_(i)) return false;
  }
  return true;
}

HypersurfacePatch::HypersurfacePatch(std::string name, Chart chart, PointMap immersion,
                                     int orientation, std::optional<JacobianMap> jacobian,
                                     std::optional<HessianMap> hessian)
    : name_(std::move(name)),
      chart_(std::move(chart)),
      immersion_(std::move(immersion)),
      orientation_(orientation),
      jacobian_(std::move(jacobian)),
      hessian_(std::move(hessian)) {
  if (orientation_ != 1 && orientation_ != -1) {
    throw InvalidArgument("HypersurfacePatch: orientation must be +1 or -1");
  }
}

HypersurfacePatch HypersurfacePatch::moved(const RigidMotion& phi) const {
  if (phi.ambient_dim() != ambient_dim()) {
    throw DimensionMismatch("HypersurfacePatch::moved: motion acts on the wrong dimension");
  }
  PointMap f = [inner = immersion_, phi](const Vec& u) { return phi.apply(inner(u)); };
  std::optional<JacobianMap> J;
  if (jacobian_) J = [inner = *jacobian_, R = phi.R()](const Vec& u) -> Mat { return R * inner(u); };
  std::optional<HessianMap> H;
  if (hessian_) {
    H = [inner = *hessian_, R = phi.R()](const Vec& u) {
      SecondPartials out = inner(u);
      for (auto& d : out) d = R * d;
      return out;
    };
  }
  return {name_ + "+moved", chart_, std::move(f), orientation_, std::move(J), std::move(H)};
}

HypersurfacePatch HypersurfacePatch::without_derivatives() const {
  return {name_, chart_, immersion_, orientation_};
}

HypersurfacePatch HypersurfacePatch::with_chart(Chart chart) const {
  if (chart.n() != n()) throw DimensionMismatch("with_chart: dimension differs");
  return {name_, std::move(chart), immersion_, orientation_, jacobian_, hessian_};
}

Mat jacobian(const HypersurfacePatch& patch, const Vec& u) {
  if (u.size() != patch.n()) throw DimensionMismatch("jacobian: chart point has wrong dimension");
  Mat J;
  if (patch.analytic_jacobian()) {
    J = (*patch.analytic_jacobian())(u);
  } else {
    J.resize(patch.ambient_dim(), patch.n());
    for (int j = 0; j < patch.n(); ++j) {
      const double h = kFirstDerivativeStep * std::max(1.0, std::abs(u(j)));
      Vec up = u, um = u;
      up(j) += h;
      um(j) -= h;
      J.col(j) = (patch.point(up) - patch.point(um)) / (2.0 * h);
    }
  }
  const Vec s = singular_values(J);
  if (s.size() == 0 || !(s(s.size() - 1) > kImmersionTol * s(0))) {
    throw RankDeficient("jacobian: patch '" + patch.name() + "' is not immersive at the queried point");
  }
  return J;
}

SecondPartials second_partials(const HypersurfacePatch& patch, const Vec& u) {
  if (patch.analytic_hessian()) return (*patch.analytic_hessian())(u);
  const int n = patch.n();
  const double h = kSecondDerivativeStep;
  SecondPartials out(static_cast<std::size_t>(n * n));
  const Vec f0 = patch.point(u);
  for (int i = 0; i < n; ++i) {
    Vec up = u, um = u;
    up(i) += h;
    um(i) -= h;
    out[i * n + i] = (patch.point(up) - 2.0 * f0 + patch.point(um)) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Vec pp = u, pm = u, mp = u, mm = u;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      out[i * n + j] =
          (patch.point(pp) - patch.point(pm) - patch.point(mp) + patch.point(mm)) / (4.0 * h * h);
      out[j * n + i] = out[i * n + j];
    }
  }
  return out;
}

Vec gauss_map(const HypersurfacePatch& patch, const Vec& u) {
  return oriented_normal(jacobian(patch, u), patch.orientation());
}

Mat classical_first_form(const HypersurfacePatch& patch, const Vec& u) {
  const Mat J = jacobian(patch, u);
  return J.transpose() * J;
}

Mat classical_second_form(const HypersurfacePatch& patch, const Vec& u) {
  const Vec nu = gauss_map(patch, u);
  const SecondPartials d2 = second_partials(patch, u);
  const int n = patch.n();
  Mat II(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) II(i, j) = d2[i * n + j].dot(nu);
  }
  return II;
}

namespace {

double param(const PresetParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown_params(const PresetParams& params, std::initializer_list<const char*> allowed,
                           const std::string& name) {
  for (const auto& [key, value] : params) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidArgument("preset '" + name + "' does not take parameter '" + key + "'");
    }
  }
}

// Orientation making the given reference normal field the Gauss map.
int orientation_towards(const JacobianMap& J, const PointMap& reference, const Vec& u) {
  const Mat Ju = J(u);
  Mat frame(Ju.rows(), Ju.cols() + 1);
  frame << Ju, reference(u);
  return frame.determinant() > 0.0 ? 1 : -1;
}

// Hyperspherical coordinates: every component is a product of one-variable
// factors 1, sin or cos, so all partial derivatives follow from replacing
// factors by their derivatives.
enum class Factor { One, Sin, Cos };

double factor_derivative(Factor f, int order, double a) {
  switch (f) {
    case Factor::One:
      return order == 0 ? 1.0 : 0.0;
    case Factor::Sin:
      return order == 0 ? std::sin(a) : order == 1 ? std::cos(a) : -std::sin(a);
    case Factor::Cos:
      return order == 0 ? std::cos(a) : order == 1 ? -std::sin(a) : -std::cos(a);
  }
  return 0.0;
}

struct SphereTable {
  int n;
  std::vector<std::vector<Factor>> factors;  // per ambient component

  explicit SphereTable(int n_) : n(n_) {
    // raw component k: prod_{i<k} sin u_i * cos u_k (k < n), or prod sin (k = n);
    // stored cyclically shifted so that raw component 0 comes last.
    std::vector<std::vector<Factor>> raw(n + 1, std::vector<Factor>(n, Factor::One));
    for (int k = 0; k <= n; ++k) {
      for (int i = 0; i < n; ++i) {
        if (i < k) raw[k][i] = Factor::Sin;
        else if (i == k) raw[k][i] = Factor::Cos;
      }
    }
    factors.resize(n + 1);
    for (int k = 1; k <= n; ++k) factors[k - 1] = raw[k];
    factors[n] = raw[0];
  }

  // orders[i] = derivative order applied to variable i
  Vec eval(const Vec& u, const std::vector<int>& orders, double R) const {
    Vec out(n + 1);
    for (int k = 0; k <= n; ++k) {
      double prod = R;
      for (int i = 0; i < n && prod != 0.0; ++i) prod *= factor_derivative(factors[k][i], orders[i], u(i));
      out(k) = prod;
    }
    return out;
  }
};

HypersurfacePatch make_plane(int n) {
  Chart chart(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0), 33);
  PointMap f = [n](const Vec& u) {
    Vec x = Vec::Zero(n + 1);
    x.head(n) = u;
    return x;
  };
  JacobianMap J = [n](const Vec&) {
    Mat m = Mat::Zero(n + 1, n);
    m.topRows(n).setIdentity();
    return m;
  };
  HessianMap H = [n](const Vec&) { return SecondPartials(n * n, Vec::Zero(n + 1)); };
  return {"plane", chart, f, 1, J, H};
}

HypersurfacePatch make_sphere(int n, double R) {
  Chart chart(Vec::Constant(n, 0.2), Vec::Constant(n, M_PI - 0.2), 33);
  const SphereTable table(n);
  PointMap f = [table, R](const Vec& u) { return table.eval(u, std::vector<int>(table.n, 0), R); };
  JacobianMap J = [table, R](const Vec& u) {
    Mat m(table.n + 1, table.n);
    for (int j = 0; j < table.n; ++j) {
      std::vector<int> orders(table.n, 0);
      orders[j] = 1;
      m.col(j) = table.eval(u, orders, R);
    }
    return m;
  };
  HessianMap H = [table, R](const Vec& u) {
    const int n = table.n;
    SecondPartials out(n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::vector<int> orders(n, 0);
        orders[i] += 1;
        orders[j] += 1;
        out[i * n + j] = table.eval(u, orders, R);
      }
    }
    return out;
  };
  const int orientation = orientation_towards(J, f, chart.center());
  return {"sphere", chart, f, orientation, J, H};
}

HypersurfacePatch make_cylinder(int n, double R) {
  Vec lower = Vec::Constant(n, -1.0), upper = Vec::Constant(n, 1.0);
  lower(0) = 0.0;
  upper(0) = M_PI;
  Chart chart(lower, upper, 33);
  PointMap f = [n, R](const Vec& u) {
    Vec x(n + 1);
    x(0) = R * std::cos(u(0));
    x(1) = R * std::sin(u(0));
    x.tail(n - 1) = u.tail(n - 1);
    return x;
  };
  JacobianMap J = [n, R](const Vec& u) {
    Mat m = Mat::Zero(n + 1, n);
    m(0, 0) = -R * std::sin(u(0));
    m(1, 0) = R * std::cos(u(0));
    for (int j = 1; j < n; ++j) m(j + 1, j) = 1.0;
    return m;
  };
  HessianMap H = [n, R](const Vec& u) {
    SecondPartials out(n * n, Vec::Zero(n + 1));
    out[0](0) = -R * std::cos(u(0));
    out[0](1) = -R * std::sin(u(0));
    return out;
  };
  PointMap outward = [n](const Vec& u) {
    Vec x = Vec::Zero(n + 1);
    x(0) = std::cos(u(0));
    x(1) = std::sin(u(0));
    return x;
  };
  const int orientation = orientation_towards(J, outward, chart.center());
  return {"cylinder", chart, f, orientation, J, H};
}

HypersurfacePatch make_torus(double R, double r) {
  Chart chart(Vec::Constant(2, 0.1), Vec::Constant(2, 2.0 * M_PI - 0.1), 33);
  PointMap f = [R, r](const Vec& u) {
    const double rho = R + r * std::cos(u(1));
    return Vec{{rho * std::cos(u(0)), rho * std::sin(u(0)), r * std::sin(u(1))}};
  };
  JacobianMap J = [R, r](const Vec& u) {
    const double cu = std::cos(u(0)), su = std::sin(u(0));
    const double cv = std::cos(u(1)), sv = std::sin(u(1));
    const double rho = R + r * cv;
    Mat m(3, 2);
    m << -rho * su, -r * sv * cu,
          rho * cu, -r * sv * su,
          0.0,       r * cv;
    return m;
  };
  HessianMap H = [R, r](const Vec& u) {
    const double cu = std::cos(u(0)), su = std::sin(u(0));
    const double cv = std::cos(u(1)), sv = std::sin(u(1));
    const double rho = R + r * cv;
    const Vec uu{{-rho * cu, -rho * su, 0.0}};
    const Vec uv{{r * sv * su, -r * sv * cu, 0.0}};
    const Vec vv{{-r * cv * cu, -r * cv * su, -r * sv}};
    return SecondPartials{uu, uv, uv, vv};
  };
  PointMap outward = [](const Vec& u) {
    const double cv = std::cos(u(1));
    return Vec{{cv * std::cos(u(0)), cv * std::sin(u(0)), std::sin(u(1))}};
  };
  const int orientation = orientation_towards(J, outward, chart.center());
  return {"torus", chart, f, orientation, J, H};
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"plane", "sphere", "cylinder", "graph", "torus"};
  return names;
}

HypersurfacePatch graph_patch(const HeightFunction& h, Chart chart) {
  const int n = chart.n();
  PointMap f = [n, value = h.value](const Vec& u) {
    Vec x(n + 1);
    x.head(n) = u;
    x(n) = value(u);
    return x;
  };
  JacobianMap J = [n, grad = h.gradient](const Vec& u) {
    Mat m = Mat::Zero(n + 1, n);
    m.topRows(n).setIdentity();
    m.row(n) = grad(u).transpose();
    return m;
  };
  HessianMap H = [n, hess = h.hessian](const Vec& u) {
    const Mat d2 = hess(u);
    SecondPartials out(n * n, Vec::Zero(n + 1));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out[i * n + j](n) = d2(i, j);
    }
    return out;
  };
  return {"graph", std::move(chart), f, 1, J, H};
}

HypersurfacePatch preset(const std::string& name, int n, const PresetParams& params) {
  if (n < 1) throw InvalidArgument("preset: n must be >= 1");
  if (name == "plane") {
    reject_unknown_params(params, {}, name);
    return make_plane(n);
  }
  if (name == "sphere") {
    reject_unknown_params(params, {"R"}, name);
    const double R = param(params, "R", 1.0);
    if (!(R > 0.0)) throw InvalidArgument("sphere: R must be positive");
    return make_sphere(n, R);
  }
  if (name == "cylinder") {
    reject_unknown_params(params, {"R"}, name);
    const double R = param(params, "R", 1.0);
    if (!(R > 0.0)) throw InvalidArgument("cylinder: R must be positive");
    return make_cylinder(n, R);
  }
  if (name == "graph") {
    reject_unknown_params(params, {"a"}, name);
    const double a = param(params, "a", 1.0);
    HeightFunction h{[a](const Vec& u) { return 0.5 * a * u.squaredNorm(); },
                     [a](const Vec& u) -> Vec { return a * u; },
                     [a, n](const Vec&) -> Mat { return a * Mat::Identity(n, n); }};
    return graph_patch(h, Chart(Vec::Constant(n, -1.0), Vec::Constant(n, 1.0), 33));
  }
  if (name == "torus") {
    reject_unknown_params(params, {"R", "r"}, name);
    if (n != 2) throw InvalidArgument("torus: only n = 2 is supported");
    const double R = param(params, "R", 2.0), r = param(params, "r", 0.5);
    if (!(r > 0.0 && r < R)) throw InvalidArgument("torus: need 0 < r < R");
    return make_torus(R, r);
  }
  std::string valid;
  for (const auto& p : preset_names()) valid += (valid.empty() ? "" : ", ") + p;
  throw UnknownPreset("unknown preset '" + name + "' (valid: " + valid + ")");
}

}  // namespace hsalg

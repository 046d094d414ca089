#include "hsalg/bonnet.hpp"

#include "hsalg/errors.hpp"
#include "hsalg/fundamental_forms.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace hsalg {

TensorFieldPair::TensorFieldPair(Chart chart, MatrixField g, MatrixField II, double fd_step,
                                 double nested_step)
    : chart_(std::move(chart)), g_(std::move(g)), II_(std::move(II)), fd_step_(fd_step),
      nested_step_(nested_step) {
  if (!g_ || !II_) throw InvalidArgument("TensorFieldPair: empty field callback");
  if (!(fd_step_ > 0.0) || !(nested_step_ > 0.0)) {
    throw InvalidArgument("TensorFieldPair: difference steps must be positive");
  }
}

namespace {

// Multilinear interpolation of node values on a chart grid.
class GridInterpolant {
 public:
  GridInterpolant(Chart chart, std::vector<Mat> values)
      : chart_(std::move(chart)), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != chart_.node_count()) {
      throw DimensionMismatch("grid field: expected " + std::to_string(chart_.node_count()) +
                              " node values, got " + std::to_string(values_.size()));
    }
  }

  Mat operator()(const Vec& u) const {
    const int n = chart_.n();
    std::vector<int> base(n);
    std::vector<double> frac(n);
    for (int a = 0; a < n; ++a) {
      const int cells = chart_.grid()[a] - 1;
      const double s = (u(a) - chart_.lower()(a)) / chart_.spacing(a);
      const int i = std::clamp(static_cast<int>(std::floor(s)), 0, cells - 1);
      base[a] = i;
      frac[a] = std::clamp(s - i, 0.0, 1.0);
    }
    Mat out = Mat::Zero(values_.front().rows(), values_.front().cols());
    std::vector<int> idx(n);
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1.0;
      for (int a = 0; a < n; ++a) {
        const bool hi = (corner >> a) & 1;
        idx[a] = base[a] + (hi ? 1 : 0);
        w *= hi ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) out += w * values_[chart_.flatten(idx)];
    }
    return out;
  }

 private:
  Chart chart_;
  std::vector<Mat> values_;
};

Vec flatten(const std::vector<Mat>& ms) {
  Eigen::Index total = 0;
  for (const auto& m : ms) total += m.size();
  Vec out(total);
  Eigen::Index at = 0;
  for (const auto& m : ms) {
    out.segment(at, m.size()) = Eigen::Map<const Vec>(m.data(), m.size());
    at += m.size();
  }
  return out;
}

// Gram target diag(g, 1) for the frame block.
Mat frame_gram(const Mat& g) {
  const int n = static_cast<int>(g.rows());
  Mat G = Mat::Zero(n + 1, n + 1);
  G.topLeftCorner(n, n) = g;
  G(n, n) = 1.0;
  return G;
}

}  // namespace

TensorFieldPair TensorFieldPair::from_grid(const Chart& chart, std::vector<Mat> g_nodes,
                                           std::vector<Mat> II_nodes) {
  for (int a = 0; a < chart.n(); ++a) {
    if (chart.grid()[a] < 3) throw InvalidArgument("grid fields need at least 3 nodes per axis");
  }
  double h = chart.spacing(0);
  for (int a = 1; a < chart.n(); ++a) h = std::min(h, chart.spacing(a));
  GridInterpolant g(chart, std::move(g_nodes));
  GridInterpolant II(chart, std::move(II_nodes));
  return TensorFieldPair(chart, g, II, h, h);
}

TensorFieldPair TensorFieldPair::from_patch(const HypersurfacePatch& patch) {
  return TensorFieldPair(
      patch.chart(), [patch](const Vec& u) { return classical_first_form(patch, u); },
      [patch](const Vec& u) {
        const Mat II = classical_second_form(patch, u);
        return Mat(0.5 * (II + II.transpose()));
      });
}

TensorFieldPair TensorFieldPair::from_omega(const HypersurfacePatch& patch) {
  return TensorFieldPair(
      patch.chart(),
      [patch](const Vec& u) {
        const Mat i = iota(patch, u);
        return Mat(i.transpose() * i);
      },
      [patch](const Vec& u) { return omega_forms(patch, u).II_omega; });
}

Mat TensorFieldPair::g(const Vec& u) const {
  if (u.size() != n()) throw DimensionMismatch("TensorFieldPair::g: wrong chart dimension");
  const Mat raw = g_(u);
  if (raw.rows() != n() || raw.cols() != n()) throw DimensionMismatch("metric has wrong shape");
  const Mat sym = 0.5 * (raw + raw.transpose());
  if (!sym.allFinite() || sym.llt().info() != Eigen::Success) {
    throw SingularMetric("metric is not positive definite at the queried point");
  }
  return sym;
}

Mat TensorFieldPair::II(const Vec& u) const {
  if (u.size() != n()) throw DimensionMismatch("TensorFieldPair::II: wrong chart dimension");
  const Mat raw = II_(u);
  if (raw.rows() != n() || raw.cols() != n()) throw DimensionMismatch("second form has wrong shape");
  if (!raw.allFinite()) throw InvalidArgument("second form is not finite");
  if ((raw - raw.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("second form is not symmetric");
  }
  return raw;
}

TensorFieldPair TensorFieldPair::with_second_form(MatrixField II) const {
  return TensorFieldPair(chart_, g_, std::move(II), fd_step_, nested_step_);
}

TensorFieldPair perturb_second_form(const TensorFieldPair& fields, double amplitude) {
  const Chart chart = fields.chart();
  const TensorFieldPair base = fields;
  return fields.with_second_form([base, chart, amplitude](const Vec& u) {
    const Vec width = 0.25 * (chart.upper() - chart.lower());
    const double b = std::exp(-0.5 * (u - chart.center()).cwiseQuotient(width).squaredNorm());
    Mat II = base.II(u);
    II(0, 0) += amplitude * b;
    return II;
  });
}

std::vector<Mat> christoffel(const TensorFieldPair& fields, const Vec& u) {
  const int n = fields.n();
  const Chart& chart = fields.chart();
  const Mat g = fields.g(u);
  const Mat ginv = g.llt().solve(Mat::Identity(n, n));
  auto metric = [&fields](const Vec& p) { return fields.g(p); };
  std::vector<Mat> dg(n);
  for (int l = 0; l < n; ++l) dg[l] = box_partial(metric, u, l, fields.fd_step(), chart.lower(), chart.upper());

  // first kind: G(l, i, j) = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
  std::vector<Mat> first(n, Mat(n, n));
  for (int l = 0; l < n; ++l) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) first[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
    }
  }
  std::vector<Mat> gamma(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) gamma[k] += ginv(k, l) * first[l];
  }
  return gamma;
}

GaussCodazziResidual gauss_codazzi_residual(const TensorFieldPair& fields, const Vec& u) {
  const int n = fields.n();
  const Chart& chart = fields.chart();
  const Mat g = fields.g(u);
  const Mat II = fields.II(u);
  const std::vector<Mat> G = christoffel(fields, u);

  auto gamma_flat = [&fields](const Vec& p) { return flatten(christoffel(fields, p)); };
  auto second = [&fields](const Vec& p) { return fields.II(p); };
  std::vector<Vec> dG(n);  // flat d_i Gamma
  std::vector<Mat> dII(n);
  for (int i = 0; i < n; ++i) {
    dG[i] = box_partial(gamma_flat, u, i, fields.nested_step(), chart.lower(), chart.upper());
    dII[i] = box_partial(second, u, i, fields.fd_step(), chart.lower(), chart.upper());
  }
  // Gamma^m_jl in flat storage: column-major per matrix, gamma[m](j, l)
  auto dGamma = [&](int i, int m, int j, int l) { return dG[i](m * n * n + l * n + j); };

  GaussCodazziResidual out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        Vec Rm(n);  // R^m_ijl
        for (int m = 0; m < n; ++m) {
          double r = dGamma(i, m, j, l) - dGamma(j, m, i, l);
          for (int p = 0; p < n; ++p) r += G[m](i, p) * G[p](j, l) - G[m](j, p) * G[p](i, l);
          Rm(m) = r;
        }
        for (int k = 0; k < n; ++k) {
          const double Rijkl = g.row(k).dot(Rm);
          const double rhs = II(i, k) * II(j, l) - II(i, l) * II(j, k);
          out.gauss = std::max(out.gauss, std::abs(Rijkl - rhs));
        }
      }
    }
  }
  auto nabla = [&](int i, int j, int k) {
    double v = dII[i](j, k);
    for (int m = 0; m < n; ++m) v -= G[m](i, j) * II(m, k) + G[m](i, k) * II(j, m);
    return v;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) out.codazzi = std::max(out.codazzi, std::abs(nabla(i, j, k) - nabla(j, i, k)));
    }
  }
  return out;
}

std::vector<Mat> frame_form(const TensorFieldPair& fields, const Vec& u) {
  const int n = fields.n();
  const Mat g = fields.g(u);
  const Mat II = fields.II(u);
  const Mat shape = g.llt().solve(II);  // g^{-1} II
  const std::vector<Mat> G = christoffel(fields, u);
  std::vector<Mat> theta(n, Mat::Zero(n + 2, n + 2));
  for (int j = 0; j < n; ++j) {
    Mat& T = theta[j];
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) T(k, i) = G[k](i, j);
      T(n, i) = II(i, j);
    }
    for (int k = 0; k < n; ++k) T(k, n) = -shape(k, j);
    T(j, n + 1) = 1.0;
  }
  return theta;
}

double flatness_residual(const TensorFieldPair& fields, const Vec& u) {
  const int n = fields.n();
  const Chart& chart = fields.chart();
  const std::vector<Mat> theta = frame_form(fields, u);
  std::vector<std::vector<Mat>> d(n);  // d[i][j] = d_i Theta_j
  for (int i = 0; i < n; ++i) {
    auto form = [&fields](const Vec& p) { return flatten(frame_form(fields, p)); };
    const Vec flat = box_partial(form, u, i, fields.nested_step(), chart.lower(), chart.upper());
    const int size = (n + 2) * (n + 2);
    for (int j = 0; j < n; ++j) d[i].push_back(Eigen::Map<const Mat>(flat.data() + j * size, n + 2, n + 2));
  }
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Mat c = d[i][j] - d[j][i] + theta[i] * theta[j] - theta[j] * theta[i];
      worst = std::max(worst, c.cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

FrameState::FrameState(Mat homogeneous) : F_(std::move(homogeneous)) {
  if (F_.rows() != F_.cols() || F_.rows() < 3) throw DimensionMismatch("FrameState: bad shape");
}

FrameState FrameState::initial(const TensorFieldPair& fields, const Vec& u0) {
  const int n = fields.n();
  const Mat L = fields.g(u0).llt().matrixL();
  Mat F = Mat::Identity(n + 2, n + 2);
  F.topLeftCorner(n, n) = L.transpose();
  return FrameState(F);
}

FrameState FrameState::from_patch(const HypersurfacePatch& patch, const Vec& u) {
  const int n = patch.n();
  Mat F = Mat::Identity(n + 2, n + 2);
  F.block(0, 0, n + 1, n) = jacobian(patch, u);
  F.block(0, n, n + 1, 1) = gauss_map(patch, u);
  F.block(0, n + 1, n + 1, 1) = patch.point(u);
  return FrameState(F);
}

double FrameState::gram_drift(const Mat& g) const {
  const Mat E = F_.topLeftCorner(n() + 1, n() + 1);
  return (E.transpose() * E - frame_gram(g)).cwiseAbs().maxCoeff();
}

void FrameState::reorthonormalize(const Mat& g) {
  const Mat G = frame_gram(g);
  const Mat root = spd_sqrt(G);
  const Mat inv_root = root.inverse();
  const Mat E = F_.topLeftCorner(n() + 1, n() + 1);
  Eigen::JacobiSVD<Mat> svd(E * inv_root, Eigen::ComputeFullU | Eigen::ComputeFullV);
  F_.topLeftCorner(n() + 1, n() + 1) = svd.matrixU() * svd.matrixV().transpose() * root;
}

namespace {

constexpr double kChartSlack = 1e-12;

bool inside(const Chart& chart, const Vec& u) {
  for (int a = 0; a < chart.n(); ++a) {
    const double slack = kChartSlack * (1.0 + std::abs(chart.upper()(a) - chart.lower()(a)));
    if (!(u(a) >= chart.lower()(a) - slack && u(a) <= chart.upper()(a) + slack)) return false;
  }
  return true;
}

// Clamp round-off excursions back into the box.
Vec clamp_to(const Chart& chart, const Vec& u) {
  return u.cwiseMax(chart.lower()).cwiseMin(chart.upper());
}

Mat generator(const TensorFieldPair& fields, const Vec& u, const Vec& velocity) {
  const std::vector<Mat> theta = frame_form(fields, u);
  Mat A = Mat::Zero(fields.n() + 2, fields.n() + 2);
  for (int j = 0; j < fields.n(); ++j) {
    if (velocity(j) != 0.0) A += velocity(j) * theta[j];
  }
  return A;
}

void merge_stats(IntegrationStats& into, const IntegrationStats& from) {
  into.steps += from.steps;
  into.max_drift_before = std::max(into.max_drift_before, from.max_drift_before);
  into.max_drift_after = std::max(into.max_drift_after, from.max_drift_after);
}

}  // namespace

FrameState integrate_path(const TensorFieldPair& fields, const ChartPath& path,
                          const FrameState& initial, const IntegrationOptions& options,
                          IntegrationStats* stats) {
  const Chart& chart = fields.chart();
  const int n = fields.n();
  if (initial.n() != n) throw DimensionMismatch("integrate_path: frame dimension differs from chart");
  if (!(options.steps_per_unit > 0.0) || options.reorthonormalize_every < 1) {
    throw InvalidArgument("integrate_path: steps per unit and correction period must be positive");
  }
  for (const Vec& p : path) {
    if (p.size() != n) throw DimensionMismatch("integrate_path: path point has wrong dimension");
    if (!inside(chart, p)) throw PathOutsideChart("integrate_path: path leaves the chart");
  }

  IntegrationStats local;
  Mat F = initial.matrix();
  int counter = 0;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const Vec a = clamp_to(chart, path[s]);
    const Vec b = clamp_to(chart, path[s + 1]);
    const Vec velocity = b - a;
    const double length = velocity.norm();
    if (length == 0.0) continue;
    const int steps = std::max(1, static_cast<int>(std::ceil(options.steps_per_unit * length - 1e-9)));
    const double h = 1.0 / steps;
    Mat A0 = generator(fields, a, velocity);
    for (int k = 0; k < steps; ++k) {
      const double t0 = k * h;
      const Vec mid = clamp_to(chart, a + (t0 + 0.5 * h) * velocity);
      const Vec end = k + 1 == steps ? b : Vec(clamp_to(chart, a + (t0 + h) * velocity));
      const Mat Am = generator(fields, mid, velocity);
      const Mat A1 = generator(fields, end, velocity);
      const Mat k1 = F * A0;
      const Mat k2 = (F + 0.5 * h * k1) * Am;
      const Mat k3 = (F + 0.5 * h * k2) * Am;
      const Mat k4 = (F + h * k3) * A1;
      F += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      A0 = A1;
      ++local.steps;
      if (++counter % options.reorthonormalize_every == 0) {
        FrameState state(F);
        const Mat g = fields.g(end);
        const double before = state.gram_drift(g);
        local.max_drift_before = std::max(local.max_drift_before, before);
        if (before > options.max_drift) {
          throw GramDrift("integrate_path: Gram drift " + std::to_string(before) +
                          " before correction; increase the step count");
        }
        state.reorthonormalize(g);
        local.max_drift_after = std::max(local.max_drift_after, state.gram_drift(g));
        F = state.matrix();
      }
    }
  }
  if (stats) merge_stats(*stats, local);
  return FrameState(F);
}

namespace {

// Visits node index lists per axis in the given axis order, sharing path
// prefixes: a line sweep along order[0] from u0, then from each reached node
// a sweep along order[1], and so on.
struct SweepPlan {
  const TensorFieldPair* fields;
  std::vector<int> order;
  std::vector<std::vector<int>> indices;  // per axis, ascending
  IntegrationOptions integration;
};

using NodeVisit = std::function<void(const std::vector<int>&, const FrameState&)>;

// Nodes along `axis` reachable from p in sweep order: upward then downward.
std::vector<std::vector<int>> directions(const SweepPlan& plan, int axis, double from) {
  const Chart& chart = plan.fields->chart();
  std::vector<int> up, down;
  for (int i : plan.indices[axis]) (chart.coordinate(axis, i) >= from ? up : down).push_back(i);
  std::reverse(down.begin(), down.end());
  return {up, down};
}

void sweep(const SweepPlan& plan, int level, const Vec& p, const FrameState& F,
           std::vector<int>& index, const NodeVisit& visit, IntegrationStats& stats) {
  const int n = plan.fields->n();
  if (level == n) {
    visit(index, F);
    return;
  }
  const int axis = plan.order[level];
  for (const auto& run : directions(plan, axis, p(axis))) {
    Vec cur = p;
    FrameState state = F;
    for (int i : run) {
      Vec next = cur;
      next(axis) = plan.fields->chart().coordinate(axis, i);
      state = integrate_path(*plan.fields, {cur, next}, state, plan.integration, &stats);
      cur = next;
      index[axis] = i;
      sweep(plan, level + 1, cur, state, index, visit, stats);
    }
  }
}

// Runs the sweep with the first-level subtrees distributed over threads.
IntegrationStats run_sweep(const SweepPlan& plan, const Vec& u0, const FrameState& initial,
                           int threads, const NodeVisit& visit) {
  const int n = plan.fields->n();
  const int axis = plan.order[0];
  struct Task {
    Vec point;
    FrameState frame;
    int node;
  };
  std::vector<Task> tasks;
  IntegrationStats total;
  for (const auto& run : directions(plan, axis, u0(axis))) {
    Vec cur = u0;
    FrameState state = initial;
    for (int i : run) {
      Vec next = cur;
      next(axis) = plan.fields->chart().coordinate(axis, i);
      state = integrate_path(*plan.fields, {cur, next}, state, plan.integration, &total);
      cur = next;
      tasks.push_back({cur, state, i});
    }
  }

  std::vector<IntegrationStats> per_task(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  auto work = [&](int start, int stride) {
    for (std::size_t t = start; t < tasks.size(); t += stride) {
      try {
        std::vector<int> index(n, 0);
        index[axis] = tasks[t].node;
        sweep(plan, 1, tasks[t].point, tasks[t].frame, index, visit, per_task[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (errors[t]) std::rethrow_exception(errors[t]);
    merge_stats(total, per_task[t]);
  }
  return total;
}

// Fourth-order first-derivative weights at offsets -2..2.
constexpr double kD1[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
// Fourth-order second-derivative weights at offsets -2..2.
constexpr double kD2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};

ReconstructionVerification verify(const TensorFieldPair& fields, const std::vector<Vec>& positions,
                                  const std::vector<Vec>& normals) {
  const Chart& chart = fields.chart();
  const int n = chart.n();
  ReconstructionVerification out;
  for (int a = 0; a < n; ++a) {
    if (chart.grid()[a] < 5) return out;
  }
  for (int flat = 0; flat < chart.node_count(); ++flat) {
    const std::vector<int> idx = chart.unflatten(flat);
    bool interior = true;
    for (int a = 0; a < n; ++a) interior = interior && idx[a] >= 2 && idx[a] <= chart.grid()[a] - 3;
    if (!interior) continue;
    auto at = [&](int a, int da, int b, int db) {
      std::vector<int> k = idx;
      k[a] += da;
      k[b] += db;
      return positions[chart.flatten(k)];
    };
    const int N = n + 1;
    Mat J(N, n);
    for (int a = 0; a < n; ++a) {
      Vec d = Vec::Zero(N);
      for (int s = -2; s <= 2; ++s) d += kD1[s + 2] * at(a, s, a, 0);
      J.col(a) = d / chart.spacing(a);
    }
    const Vec& nu = normals[flat];
    Mat II(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        Vec d = Vec::Zero(N);
        if (a == b) {
          for (int s = -2; s <= 2; ++s) d += kD2[s + 2] * at(a, s, a, 0);
          d /= chart.spacing(a) * chart.spacing(a);
        } else {
          for (int s = -2; s <= 2; ++s) {
            for (int t = -2; t <= 2; ++t) {
              const double w = kD1[s + 2] * kD1[t + 2];
              if (w != 0.0) d += w * at(a, s, b, t);
            }
          }
          d /= chart.spacing(a) * chart.spacing(b);
        }
        II(a, b) = II(b, a) = d.dot(nu);
      }
    }
    const Vec u = chart.node(idx);
    out.g_max_error = std::max(out.g_max_error, (J.transpose() * J - fields.g(u)).cwiseAbs().maxCoeff());
    out.II_max_error = std::max(out.II_max_error, (II - fields.II(u)).cwiseAbs().maxCoeff());
    ++out.nodes;
  }
  return out;
}

}  // namespace

ReconstructionResult reconstruct_grid(const TensorFieldPair& fields, const Vec& u0,
                                      const FrameState& initial,
                                      const ReconstructionOptions& options) {
  const Chart& chart = fields.chart();
  const int n = chart.n();
  if (u0.size() != n) throw DimensionMismatch("reconstruct_grid: u0 has wrong dimension");
  if (!inside(chart, u0)) throw PathOutsideChart("reconstruct_grid: u0 lies outside the chart");
  if (options.verify_stride < 1) throw InvalidArgument("reconstruct_grid: verify stride must be positive");

  ReconstructionResult result(chart);
  result.steps_per_unit = options.integration.steps_per_unit;
  result.positions.assign(chart.node_count(), Vec());
  result.normals.assign(chart.node_count(), Vec());

  SweepPlan forward{&fields, {}, {}, options.integration};
  for (int a = 0; a < n; ++a) {
    forward.order.push_back(a);
    std::vector<int> all(chart.grid()[a]);
    for (int i = 0; i < chart.grid()[a]; ++i) all[i] = i;
    forward.indices.push_back(all);
  }
  result.stats = run_sweep(forward, u0, initial, options.threads,
                           [&](const std::vector<int>& idx, const FrameState& F) {
                             const int flat = chart.flatten(idx);
                             result.positions[flat] = F.position();
                             result.normals[flat] = F.normal();
                           });

  // Opposite axis order on a strided subset of nodes.
  SweepPlan reverse{&fields, {}, {}, options.integration};
  for (int a = n - 1; a >= 0; --a) reverse.order.push_back(a);
  for (int a = 0; a < n; ++a) {
    std::vector<int> some;
    for (int i = 0; i < chart.grid()[a]; i += options.verify_stride) some.push_back(i);
    if (some.back() != chart.grid()[a] - 1) some.push_back(chart.grid()[a] - 1);
    reverse.indices.push_back(some);
  }
  const int compared = [&] {
    int c = 1;
    for (const auto& v : reverse.indices) c *= static_cast<int>(v.size());
    return c;
  }();
  std::vector<double> gaps(chart.node_count(), 0.0);
  merge_stats(result.stats, run_sweep(reverse, u0, initial, options.threads,
                                      [&](const std::vector<int>& idx, const FrameState& F) {
                                        const int flat = chart.flatten(idx);
                                        gaps[flat] = (F.position() - result.positions[flat]).norm();
                                      }));
  result.path_independence = *std::max_element(gaps.begin(), gaps.end());
  result.path_independence_nodes = compared;

  if (n >= 2) {
    const Vec inset = 0.1 * (chart.upper() - chart.lower());
    const Vec lo = chart.lower() + inset;
    const Vec hi = chart.upper() - inset;
    HolonomyEntry entry;
    entry.loop = rectangle_loop(u0, 0, 1, lo(0), hi(0), lo(1), hi(1));
    entry.deviation = holonomy_loop(fields, entry.loop, options.integration);
    result.holonomy.push_back(entry);
  }

  result.verification = verify(fields, result.positions, result.normals);
  return result;
}

double holonomy_loop(const TensorFieldPair& fields, const ChartPath& loop,
                     const IntegrationOptions& options) {
  if (loop.size() < 2) throw InvalidArgument("holonomy_loop: a loop needs at least two points");
  const Vec& first = loop.front();
  if ((loop.back() - first).norm() > 1e-12 * (1.0 + first.norm())) {
    throw InvalidArgument("holonomy_loop: path is not closed");
  }
  for (const Vec& p : loop) {
    if (p.size() != fields.n()) throw DimensionMismatch("holonomy_loop: point has wrong dimension");
    if (!inside(fields.chart(), p)) throw PathOutsideChart("holonomy_loop: loop leaves the chart");
  }
  const FrameState start = FrameState::initial(fields, first);
  const FrameState end = integrate_path(fields, loop, start, options);
  return (end.matrix() - start.matrix()).norm();
}

ChartPath rectangle_loop(const Vec& base, int axis_a, int axis_b, double lo_a, double hi_a,
                         double lo_b, double hi_b) {
  if (axis_a == axis_b || axis_a < 0 || axis_b < 0 || axis_a >= base.size() || axis_b >= base.size()) {
    throw InvalidArgument("rectangle_loop: need two distinct chart axes");
  }
  auto corner = [&](double a, double b) {
    Vec p = base;
    p(axis_a) = a;
    p(axis_b) = b;
    return p;
  };
  return {corner(lo_a, lo_b), corner(hi_a, lo_b), corner(hi_a, hi_b), corner(lo_a, hi_b), corner(lo_a, lo_b)};
}

Alignment align_rigid(const Mat& cloud_a, const Mat& cloud_b) {
  if (cloud_a.rows() != cloud_b.rows() || cloud_a.cols() != cloud_b.cols()) {
    throw DimensionMismatch("align_rigid: clouds differ in shape");
  }
  const int N = static_cast<int>(cloud_a.rows());
  const Eigen::Index count = cloud_a.cols();
  if (count < N) throw DegenerateCloud("align_rigid: need at least N points");
  const Vec ca = cloud_a.rowwise().mean();
  const Vec cb = cloud_b.rowwise().mean();
  const Mat A = cloud_a.colwise() - ca;
  const Mat B = cloud_b.colwise() - cb;
  const Mat H = A * B.transpose();
  if (numerical_rank(H, 1e-10) < N - 1) throw DegenerateCloud("align_rigid: covariance is rank deficient");
  Eigen::JacobiSVD<Mat> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat& U = svd.matrixU();
  const Mat& V = svd.matrixV();
  Vec d = Vec::Ones(N);
  if ((V * U.transpose()).determinant() < 0.0) d(N - 1) = -1.0;
  const Mat R = V * d.asDiagonal() * U.transpose();
  const Vec t = cb - R * ca;
  const Mat residual = (R * cloud_a).colwise() + t - cloud_b;
  const double rms = std::sqrt(residual.squaredNorm() / static_cast<double>(count));
  return Alignment{RigidMotion(R, t), rms};
}

Mat as_cloud(const std::vector<Vec>& points) {
  if (points.empty()) return Mat();
  Mat out(points.front().size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = points[i];
  return out;
}

}  // namespace hsalg

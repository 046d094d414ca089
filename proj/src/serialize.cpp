#include "hsalg/serialize.hpp"

#include "hsalg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hsalg {

namespace {

void write_string(std::string& out, const std::string& s) {
  // nlohmann handles escaping; a single-element dump gives the quoted form
  out += Json(s).dump();
}

void write(std::string& out, const Json& j, int indent, int depth) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        write_string(out, it.key());
        out += pretty ? ": " : ":";
        write(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat && pretty ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        write(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      // keep a float marker so the value re-parses as floating point
      if (std::string(buf).find_first_of(".eEn") == std::string::npos) out += ".0";
      return;
    }
    default:
      out += j.dump();
  }
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("field '" + field + "': " + what);
}

const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) field_error(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

Vec vec_from(const Json& j, const std::string& path) {
  const auto v = numbers(j, path);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat mat_from_rows(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a non-empty array of rows");
  const auto first = numbers(j[0], path + "[0]");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = numbers(j[r], path + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) field_error(path, "rows differ in length");
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

std::vector<Mat> node_matrices(const Json& j, const std::string& name, int nodes, int n) {
  if (!j.is_array()) field_error(name, "expected an array with one entry per node");
  if (static_cast<int>(j.size()) != nodes) {
    field_error(name, "expected " + std::to_string(nodes) + " node entries, got " + std::to_string(j.size()));
  }
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    const std::string path = name + "[" + std::to_string(k) + "]";
    const auto v = numbers(j[static_cast<std::size_t>(k)], path);
    if (static_cast<int>(v.size()) != n * n) {
      field_error(path, "expected " + std::to_string(n * n) + " numbers (row-major " + std::to_string(n) +
                            "x" + std::to_string(n) + ")");
    }
    Mat m(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) m(r, c) = v[static_cast<std::size_t>(r * n + c)];
    }
    out.push_back(m);
  }
  return out;
}

Json row_major(const Mat& m) {
  Json flat = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

}  // namespace

std::string dump_json(const Json& value, int indent) {
  std::string out;
  write(out, value, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

Json to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const Mat& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vec(m.row(r).transpose())));
  return out;
}

Json to_json(const KillingField& X) { return Json{{"S", to_json(X.S())}, {"v", to_json(X.v())}}; }

Json to_json(const RigidMotion& phi) { return Json{{"R", to_json(phi.R())}, {"t", to_json(phi.t())}}; }

Json to_json(const ResidualReport& report) {
  Json entries = Json::object();
  for (const auto& [name, s] : report.entries) {
    entries[name] = Json{{"max", s.max},
                         {"mean", s.mean},
                         {"samples", s.samples},
                         {"tolerance", s.tolerance},
                         {"pass", s.pass}};
  }
  return Json{{"pass", report.all_pass()}, {"residuals", entries}};
}

Json to_json(const BonnetConditionReport& r) {
  Json out;
  out["pass"] = r.all_pass();
  out["n"] = r.n;
  out["u0"] = to_json(r.u0);
  out["x0"] = to_json(r.x0);
  out["sample_points"] = r.sample_points;
  out["rank"] = Json{{"pass", r.rank_ok},
                     {"expected", r.expected_rank},
                     {"min", r.min_rank},
                     {"max", r.max_rank},
                     {"tolerance", r.rank_tolerance}};
  out["transitivity"] = Json{{"pass", r.transitive_ok}, {"min_anchor_rank", r.min_anchor_rank}};
  out["injectivity"] = Json{{"pass", r.injective_ok},
                            {"min_singular_value", r.min_injectivity_singular_value},
                            {"threshold", r.injectivity_threshold}};
  out["transversality"] = Json{{"pass", r.transverse_ok},
                               {"kernel_dim", r.kernel_dim},
                               {"defect", r.transverse_defect}};
  Json m0 = Json::object();
  m0["point"] = r.m0 ? to_json(*r.m0) : Json(nullptr);
  m0["residual"] = r.m0_residual;
  m0["distance_to_x0"] = r.m0_distance;
  m0["max_field_value"] = r.m0_max_field_value;
  out["m0"] = m0;
  out["failures"] = r.failures;
  return out;
}

Json to_json(const Chart& chart) {
  return Json{{"lower", to_json(chart.lower())}, {"upper", to_json(chart.upper())}, {"grid", chart.grid()}};
}

Json to_json(const IntegrationStats& s) {
  return Json{{"steps", s.steps}, {"max_drift_before", s.max_drift_before}, {"max_drift_after", s.max_drift_after}};
}

Json to_json(const ReconstructionResult& r) {
  Json holonomy = Json::array();
  for (const auto& h : r.holonomy) {
    Json loop = Json::array();
    for (const auto& p : h.loop) loop.push_back(to_json(p));
    holonomy.push_back(Json{{"loop", loop}, {"deviation", h.deviation}});
  }
  return Json{{"chart", to_json(r.chart)},
              {"steps_per_unit", r.steps_per_unit},
              {"path_independence", Json{{"residual", r.path_independence}, {"nodes", r.path_independence_nodes}}},
              {"holonomy", holonomy},
              {"verification", Json{{"nodes", r.verification.nodes},
                                    {"g_max_error", r.verification.g_max_error},
                                    {"II_max_error", r.verification.II_max_error}}},
              {"integration", to_json(r.stats)}};
}

KillingField killing_field_from_json(const Json& j) {
  return KillingField(mat_from_rows(require(j, "S", ""), "S"), vec_from(require(j, "v", ""), "v"));
}

RigidMotion rigid_motion_from_json(const Json& j) {
  return RigidMotion(mat_from_rows(require(j, "R", ""), "R"), vec_from(require(j, "t", ""), "t"));
}

Chart chart_from_json(const Json& j) {
  const Vec lower = vec_from(require(j, "lower", "chart"), "chart.lower");
  const Vec upper = vec_from(require(j, "upper", "chart"), "chart.upper");
  const Json& grid = require(j, "grid", "chart");
  std::vector<int> g;
  if (grid.is_number_integer()) {
    g.assign(static_cast<std::size_t>(lower.size()), grid.get<int>());
  } else if (grid.is_array()) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!grid[i].is_number_integer()) field_error("chart.grid[" + std::to_string(i) + "]", "expected an integer");
      g.push_back(grid[i].get<int>());
    }
  } else {
    field_error("chart.grid", "expected an integer or an array of integers");
  }
  if (lower.size() == 0 || lower.size() != upper.size() || static_cast<Eigen::Index>(g.size()) != lower.size()) {
    field_error("chart", "lower, upper and grid must have the same positive length");
  }
  try {
    return Chart(lower, upper, g);
  } catch (const Error& e) {
    field_error("chart", e.what());
  }
}

Json fields_to_json(const TensorFieldPair& fields) {
  const Chart& chart = fields.chart();
  Json g = Json::array();
  Json II = Json::array();
  for (int k = 0; k < chart.node_count(); ++k) {
    const Vec u = chart.node(chart.unflatten(k));
    g.push_back(row_major(fields.g(u)));
    II.push_back(row_major(fields.II(u)));
  }
  return Json{{"chart", to_json(chart)}, {"g", g}, {"II", II}};
}

TensorFieldPair fields_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("line " + std::to_string(line) + ": " + e.what());
  }
  const Chart chart = chart_from_json(require(j, "chart", ""));
  const int n = chart.n();
  auto g = node_matrices(require(j, "g", ""), "g", chart.node_count(), n);
  auto II = node_matrices(require(j, "II", ""), "II", chart.node_count(), n);
  for (int k = 0; k < chart.node_count(); ++k) {
    const std::string at = "[" + std::to_string(k) + "]";
    const Mat& m = g[static_cast<std::size_t>(k)];
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 || m.llt().info() != Eigen::Success) {
      field_error("g" + at, "metric is not symmetric positive definite");
    }
    const Mat& s = II[static_cast<std::size_t>(k)];
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) field_error("II" + at, "not symmetric");
  }
  try {
    return TensorFieldPair::from_grid(chart, std::move(g), std::move(II));
  } catch (const Error& e) {
    throw ParseError(std::string("fields: ") + e.what());
  }
}

}  // namespace hsalg

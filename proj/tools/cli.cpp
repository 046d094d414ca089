#include "cli.hpp"

#include "hsalg/algebroid.hpp"
#include "hsalg/bonnet.hpp"
#include "hsalg/errors.hpp"
#include "hsalg/fundamental_forms.hpp"
#include "hsalg/log_derivative.hpp"
#include "hsalg/mesh_io.hpp"
#include "hsalg/serialize.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace hsalg::cli {

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> defaults = {
      {"residual", 1e-6},            // algebroid identities, analytic derivatives
      {"omega_forms", 1e-6},            // omega forms vs classical forms
      {"path_independence", 1e-6},
      {"gauss_codazzi_warn", 1e-4},  // reconstruction proceeds with a warning above this
  };
  return defaults;
}

namespace {

bool is_residual_name(const std::string& key) {
  const auto& names = residual_names();
  return std::find(names.begin(), names.end(), key) != names.end();
}

double tolerance(const RunConfig& c, const std::string& key) {
  auto it = c.tolerances.find(key);
  return it != c.tolerances.end() ? it->second : default_tolerances().at(key);
}

std::string output_path(const std::optional<std::string>& given, const std::string& fallback) {
  if (given) return *given;
  const char* dir = std::getenv(kOutDirEnv);
  return (std::filesystem::path(dir && *dir ? dir : ".") / fallback).string();
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

HypersurfacePatch build_patch(const RunConfig& c) {
  HypersurfacePatch patch = preset(*c.preset, c.n, c.params);
  if (c.grid) patch = patch.with_chart(patch.chart().with_grid(std::vector<int>(c.n, *c.grid)));
  return patch;
}

// (g, II) from the configured source, with the preset patch when there is one.
TensorFieldPair build_fields(const RunConfig& c, std::optional<HypersurfacePatch>& patch) {
  if (c.fields_path) return fields_from_json_text(read_text_file(*c.fields_path));
  patch = build_patch(c);
  return TensorFieldPair::from_patch(*patch);
}

Vec base_point(const RunConfig& c, const Chart& chart) {
  if (!c.x0) return chart.center();
  if (static_cast<int>(c.x0->size()) != chart.n()) {
    throw InvalidArgument("--x0 needs " + std::to_string(chart.n()) + " chart coordinates");
  }
  const Vec u = to_vec(*c.x0);
  if (!chart.contains(u)) throw InvalidArgument("--x0 lies outside the chart");
  return u;
}

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  if (c.preset) j["preset"] = *c.preset;
  if (c.fields_path) j["fields"] = *c.fields_path;
  if (!c.params.empty()) j["params"] = c.params;
  j["n"] = c.n;
  if (c.grid) j["grid"] = *c.grid;
  j["steps"] = c.steps;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  if (!c.tolerances.empty()) j["tolerances"] = c.tolerances;
  return j;
}

// Writes the report; an I/O failure maps to exit 2.
int emit(const Json& report, const RunConfig& c, int code, std::ostream& out, std::ostream& err) {
  const std::string path = output_path(c.report_path, c.command + "_report.json");
  try {
    write_text_file(path, dump_json(report));
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  out << c.command << ": " << (code == kExitOk ? "pass" : "FAIL") << " (report: " << path << ")\n";
  return code;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.command == "presets") return;
  if (c.preset.has_value() == c.fields_path.has_value()) {
    throw InvalidArgument("exactly one of --preset and --fields is required");
  }
  if (c.command == "analyze" && c.fields_path) {
    throw InvalidArgument("analyze needs an immersion; use --preset");
  }
  if (c.fields_path && (c.grid || !c.params.empty())) {
    throw InvalidArgument("--grid and --param apply to presets only");
  }
  if (c.n < 1) throw InvalidArgument("--n must be positive");
  if (c.grid && *c.grid < 5) throw InvalidArgument("--grid must be at least 5");
  if (!(c.steps > 0.0)) throw InvalidArgument("--steps must be positive");
  if (c.samples < 1) throw InvalidArgument("--samples must be positive");
  if (c.threads < 1) throw InvalidArgument("--threads must be positive");
  if (c.loop && c.loop->size() != 4) throw InvalidArgument("--loop takes lo_a,hi_a,lo_b,hi_b");
  for (const auto& [key, value] : c.tolerances) {
    if (!default_tolerances().count(key) && !is_residual_name(key)) {
      throw InvalidArgument("unknown tolerance key '" + key + "'");
    }
    if (!(value > 0.0)) throw InvalidArgument("tolerance '" + key + "' must be positive");
  }
}

int run_analyze(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const HypersurfacePatch patch = build_patch(c);
  const Chart& chart = patch.chart();

  ResidualOptions ropt;
  ropt.mode = DerivativeMode::Analytic;
  ropt.samples = c.samples;
  ropt.seed = c.seed;
  ropt.threads = c.threads;
  ropt.tolerance = tolerance(c, "residual");
  for (const auto& [key, value] : c.tolerances) {
    if (is_residual_name(key)) ropt.tolerance_overrides[key] = value;
  }
  const ResidualReport residuals = identity_residuals(patch, ropt);

  const BonnetConditionReport bonnet = check_bonnet_conditions(patch, base_point(c, chart), {25, c.seed});

  // omega-derived forms against the classical ones
  const double tol = tolerance(c, "omega_forms");
  double g_err = 0.0, II_err = 0.0, asym = 0.0;
  std::vector<std::string> form_failures;
  for (int i = 0; i < c.samples; ++i) {
    const Vec u = random_interior_point(chart, c.seed + 1000 + static_cast<std::uint64_t>(i));
    try {
      const OmegaForms w = omega_forms(patch, u);
      g_err = std::max(g_err, (w.g_omega - classical_first_form(patch, u)).cwiseAbs().maxCoeff());
      II_err = std::max(II_err, (w.II_omega - classical_second_form(patch, u)).cwiseAbs().maxCoeff());
      asym = std::max(asym, w.II_asymmetry);
    } catch (const Error& e) {
      form_failures.push_back(e.what());
    }
  }
  const bool forms_ok = form_failures.empty() && g_err < tol && II_err < tol;

  Json report;
  report["config"] = config_json(c);
  report["residuals"] = to_json(residuals);
  report["bonnet"] = to_json(bonnet);
  report["omega_forms"] = Json{{"pass", forms_ok},
                            {"samples", c.samples},
                            {"tolerance", tol},
                            {"g_max_error", g_err},
                            {"II_max_error", II_err},
                            {"II_max_asymmetry", asym},
                            {"failures", form_failures}};
  const bool pass = residuals.all_pass() && bonnet.all_pass() && forms_ok;
  report["pass"] = pass;
  if (!bonnet.all_pass()) {
    for (const auto& f : bonnet.failures) err << "bonnet: " << f << '\n';
  }
  return emit(report, c, pass ? kExitOk : kExitCheckFailed, out, err);
}

int run_reconstruct(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::optional<HypersurfacePatch> patch;
  TensorFieldPair fields = build_fields(c, patch);
  if (c.perturb != 0.0) fields = perturb_second_form(fields, c.perturb);
  const Chart& chart = fields.chart();
  const Vec u0 = base_point(c, chart);

  // Gauss-Codazzi gate: warn, then proceed
  GaussCodazziResidual gc;
  std::vector<Vec> probes{chart.center()};
  for (int i = 0; i < 8; ++i) probes.push_back(random_interior_point(chart, c.seed + static_cast<std::uint64_t>(i)));
  for (const Vec& u : probes) {
    const GaussCodazziResidual r = gauss_codazzi_residual(fields, u);
    gc.gauss = std::max(gc.gauss, r.gauss);
    gc.codazzi = std::max(gc.codazzi, r.codazzi);
  }
  const double gc_warn = tolerance(c, "gauss_codazzi_warn");
  if (gc.gauss > gc_warn || gc.codazzi > gc_warn) {
    err << "warning: Gauss-Codazzi residuals (" << gc.gauss << ", " << gc.codazzi
        << ") exceed " << gc_warn << "; the data may not be realizable\n";
  }

  ReconstructionOptions opt;
  opt.integration.steps_per_unit = c.steps;
  opt.threads = c.threads;
  const ReconstructionResult result = reconstruct_grid(fields, u0, FrameState::initial(fields, u0), opt);

  const std::string mesh_path =
      output_path(c.out_path, chart.n() == 2 ? "reconstruction.obj" : "reconstruction.csv");
  const bool obj = chart.n() == 2 && std::filesystem::path(mesh_path).extension() == ".obj";
  write_text_file(mesh_path, obj ? positions_obj(chart, result.positions)
                                 : positions_csv(chart, result.positions));

  const double pi_tol = tolerance(c, "path_independence");
  Json report;
  report["config"] = config_json(c);
  report["gauss_codazzi"] = Json{{"gauss", gc.gauss}, {"codazzi", gc.codazzi}, {"warn_above", gc_warn}, {"probes", probes.size()}};
  report["reconstruction"] = to_json(result);
  report["mesh"] = mesh_path;
  if (patch) {
    std::vector<Vec> truth;
    for (int k = 0; k < chart.node_count(); ++k) truth.push_back(patch->point(chart.node(chart.unflatten(k))));
    const Alignment a = align_rigid(as_cloud(result.positions), as_cloud(truth));
    report["alignment"] = Json{{"rms", a.rms}, {"motion", to_json(a.motion)}};
  }
  const bool pass = result.path_independence <= pi_tol;
  report["path_independence_tolerance"] = pi_tol;
  report["pass"] = pass;
  return emit(report, c, pass ? kExitOk : kExitCheckFailed, out, err);
}

int run_holonomy(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::optional<HypersurfacePatch> patch;
  TensorFieldPair fields = build_fields(c, patch);
  if (c.perturb != 0.0) fields = perturb_second_form(fields, c.perturb);
  const Chart& chart = fields.chart();
  if (chart.n() < 2) throw InvalidArgument("holonomy needs a chart of dimension at least 2");
  const Vec base = base_point(c, chart);
  std::vector<double> box;
  if (c.loop) {
    box = *c.loop;
  } else {
    const Vec inset = 0.1 * (chart.upper() - chart.lower());
    box = {chart.lower()(0) + inset(0), chart.upper()(0) - inset(0), chart.lower()(1) + inset(1),
           chart.upper()(1) - inset(1)};
  }
  const ChartPath loop = rectangle_loop(base, 0, 1, box[0], box[1], box[2], box[3]);
  IntegrationOptions opt;
  opt.steps_per_unit = c.steps;
  const double deviation = holonomy_loop(fields, loop, opt);

  Json loop_json = Json::array();
  for (const Vec& p : loop) loop_json.push_back(to_json(p));
  Json report;
  report["config"] = config_json(c);
  report["perturbation"] = c.perturb;
  report["loop"] = loop_json;
  report["deviation"] = deviation;
  out << "deviation " << dump_json(Json(deviation), -1) << '\n';
  // informational: success whatever the deviation
  return emit(report, c, kExitOk, out, err);
}

int run_presets(std::ostream& out) {
  out << "plane     n >= 1, no parameters\n"
      << "sphere    n >= 1, R (radius, default 1)\n"
      << "cylinder  n >= 1, R (radius, default 1)\n"
      << "graph     n >= 1, a (height a |u|^2 / 2, default 1)\n"
      << "torus     n = 2,  R (default 2), r (default 0.5)\n";
  return kExitOk;
}

namespace {

std::pair<std::string, double> key_value(const std::string& text, const std::string& flag) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument(flag + " expects KEY=VALUE, got '" + text + "'");
  const std::string value = text.substr(eq + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw InvalidArgument(flag + " value is not a number: '" + value + "'");
  return {text.substr(0, eq), v};
}

std::vector<double> number_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidArgument(flag + " expects comma-separated numbers");
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypersurface algebroid analysis and Bonnet reconstruction"};
  app.require_subcommand(1);
  RunConfig c;
  std::string preset_name, fields_path, x0, loop, out_path, report_path;
  std::vector<std::string> params, tolerances;
  int grid = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", preset_name, "named preset (see 'presets')");
    sub->add_option("--param", params, "preset parameter KEY=VALUE (repeatable)");
    sub->add_option("--n", c.n, "chart dimension");
    sub->add_option("--grid", grid, "nodes per chart axis for presets");
    sub->add_option("--x0", x0, "base chart point, comma separated (default: chart centre)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads");
    sub->add_option("--tolerance", tolerances, "tolerance override KEY=VALUE (repeatable)");
    sub->add_option("--report", report_path, "JSON report path");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "algebroid identities, Bonnet conditions, omega forms");
  add_common(analyze);
  analyze->add_option("--samples", c.samples, "random samples per check");

  CLI::App* reconstruct = app.add_subcommand("reconstruct", "integrate (g, II) to a hypersurface");
  add_common(reconstruct);
  reconstruct->add_option("--fields", fields_path, "tensor-field JSON input");
  reconstruct->add_option("--steps", c.steps, "RK4 steps per unit chart length");
  reconstruct->add_option("--out", out_path, "mesh path (.obj for n = 2, otherwise CSV)");
  reconstruct->add_option("--perturb", c.perturb, "add a Codazzi-violating bump of this amplitude to II");

  CLI::App* holonomy = app.add_subcommand("holonomy", "frame deviation around a rectangular loop");
  add_common(holonomy);
  holonomy->add_option("--fields", fields_path, "tensor-field JSON input");
  holonomy->add_option("--steps", c.steps, "RK4 steps per unit chart length");
  holonomy->add_option("--loop", loop, "lo_a,hi_a,lo_b,hi_b on chart axes 0 and 1");
  holonomy->add_option("--perturb", c.perturb, "add a Codazzi-violating bump of this amplitude to II");

  app.add_subcommand("presets", "list presets and their parameters");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    const CLI::App* sub = app.get_subcommands().front();
    if (!preset_name.empty()) c.preset = preset_name;
    if (!fields_path.empty()) c.fields_path = fields_path;
    if (const CLI::Option* g = sub->get_option_no_throw("--grid"); g && g->count()) c.grid = grid;
    if (!x0.empty()) c.x0 = number_list(x0, "--x0");
    if (!loop.empty()) c.loop = number_list(loop, "--loop");
    if (!out_path.empty()) c.out_path = out_path;
    if (!report_path.empty()) c.report_path = report_path;
    for (const auto& p : params) c.params.insert(key_value(p, "--param"));
    for (const auto& t : tolerances) c.tolerances.insert(key_value(t, "--tolerance"));
    validate(c);
    if (c.command == "presets") return run_presets(out);
    if (c.command == "analyze") return run_analyze(c, out, err);
    if (c.command == "reconstruct") return run_reconstruct(c, out, err);
    return run_holonomy(c, out, err);
  } catch (const UnknownPreset& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "check failed: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace hsalg::cli

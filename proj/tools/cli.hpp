#pragma once

// Command-line driver: analyze, reconstruct, holonomy, presets.
// Exit codes: 0 success, 1 a check failed (report still written),
// 2 configuration or I/O error.

#include "hsalg/hypersurface.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsalg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;

/// Default output directory when --report / --out are not given.
inline constexpr const char* kOutDirEnv = "HSALG_OUT_DIR";

struct RunConfig {
  std::string command;
  std::optional<std::string> preset;
  std::optional<std::string> fields_path;
  PresetParams params;
  int n = 2;
  std::optional<int> grid;
  double steps = 512.0;  // RK4 steps per unit chart length
  int samples = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<std::vector<double>> x0;    // chart point
  std::optional<std::vector<double>> loop;  // lo_a, hi_a, lo_b, hi_b on axes 0, 1
  double perturb = 0.0;                     // Codazzi-violating bump amplitude
  std::map<std::string, double> tolerances;
  std::optional<std::string> out_path;
  std::optional<std::string> report_path;
};

/// Documented defaults for --tolerance keys.
const std::map<std::string, double>& default_tolerances();

/// Throws InvalidArgument on an inconsistent configuration.
void validate(const RunConfig& config);

int run_analyze(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_reconstruct(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_holonomy(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_presets(std::ostream& out);

/// Parses argv and dispatches. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsalg::cli

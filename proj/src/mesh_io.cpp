#include "hsalg/mesh_io.hpp"

#include "hsalg/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hsalg {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_counts(const Chart& chart, const std::vector<Vec>& positions) {
  if (static_cast<int>(positions.size()) != chart.node_count()) {
    throw DimensionMismatch("positions do not match the chart node count");
  }
}

}  // namespace

std::string positions_csv(const Chart& chart, const std::vector<Vec>& positions) {
  check_counts(chart, positions);
  const int n = chart.n();
  std::ostringstream out;
  for (int a = 0; a < n; ++a) out << 'u' << a << ',';
  for (int a = 0; a <= n; ++a) out << 'x' << a << (a == n ? '\n' : ',');
  for (int k = 0; k < chart.node_count(); ++k) {
    const Vec u = chart.node(chart.unflatten(k));
    for (int a = 0; a < n; ++a) out << number(u(a)) << ',';
    for (int a = 0; a <= n; ++a) out << number(positions[k](a)) << (a == n ? '\n' : ',');
  }
  return out.str();
}

std::string positions_obj(const Chart& chart, const std::vector<Vec>& positions) {
  check_counts(chart, positions);
  if (chart.n() != 2) throw InvalidArgument("OBJ output needs a two-dimensional chart");
  std::ostringstream out;
  for (const Vec& p : positions) out << "v " << number(p(0)) << ' ' << number(p(1)) << ' ' << number(p(2)) << '\n';
  const int rows = chart.grid()[0];
  const int cols = chart.grid()[1];
  for (int i = 0; i + 1 < rows; ++i) {
    for (int j = 0; j + 1 < cols; ++j) {
      // OBJ indices are 1-based
      const int a = chart.flatten({i, j}) + 1;
      const int b = chart.flatten({i + 1, j}) + 1;
      const int c = chart.flatten({i + 1, j + 1}) + 1;
      const int d = chart.flatten({i, j + 1}) + 1;
      out << "f " << a << ' ' << b << ' ' << c << '\n';
      out << "f " << a << ' ' << c << ' ' << d << '\n';
    }
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << text;
  if (!file) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

}  // namespace hsalg

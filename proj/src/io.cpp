#include "chaoskit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "chaoskit/errors.hpp"

namespace chaoskit::io {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt(int x) { return std::to_string(x); }
std::string fmt(long long x) { return std::to_string(x); }

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
  if (!out_) throw InvalidInput("CsvWriter: cannot open " + path);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << '\n';
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InvalidInput("cannot create directory " + path);
}

void write_grid_density(const std::string& path, const limit::GridDensity& mu,
                        const model::ModelParams& p) {
  CsvWriter w(path);
  w.cells("half_width", "n_cells", "time", "a", "eps");
  w.cells(mu.half_width, mu.n_cells, mu.time, p.a, p.eps);
  w.cells("x_center", "value");
  for (int i = 0; i < mu.n_cells; ++i) {
    w.cells(mu.center(i), mu.values[i]);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

limit::GridDensity read_grid_density(const std::string& path, double* a,
                                     double* eps) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("read_grid_density: cannot open " + path);
  std::string line;
  std::getline(in, line);  // metadata header
  if (!std::getline(in, line)) {
    throw InvalidInput("read_grid_density: truncated file " + path);
  }
  const auto meta = split_csv_line(line);
  if (meta.size() != 5) {
    throw InvalidInput("read_grid_density: bad metadata in " + path);
  }
  limit::GridDensity mu;
  mu.half_width = std::stod(meta[0]);
  mu.n_cells = std::stoi(meta[1]);
  mu.time = std::stod(meta[2]);
  if (a) *a = std::stod(meta[3]);
  if (eps) *eps = std::stod(meta[4]);
  std::getline(in, line);  // column header
  mu.values.reserve(mu.n_cells);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) {
      throw InvalidInput("read_grid_density: bad row in " + path);
    }
    mu.values.push_back(std::stod(f[1]));
  }
  if (static_cast<int>(mu.values.size()) != mu.n_cells) {
    throw InvalidInput("read_grid_density: cell count mismatch in " + path);
  }
  mu.validate();
  return mu;
}

void write_discrete_measure(const std::string& path,
                            const transport::DiscreteMeasure& m) {
  m.validate();
  CsvWriter w(path);
  std::vector<std::string> header = {"weight"};
  for (int c = 0; c < m.dim; ++c) header.push_back("x" + std::to_string(c));
  w.row(header);
  for (int k = 0; k < m.n_atoms(); ++k) {
    std::vector<std::string> row = {fmt(m.weights[k])};
    for (double x : m.point(k)) row.push_back(fmt(x));
    w.row(row);
  }
}

void write_observations(const std::string& path,
                        const std::vector<particles::ObservationRow>& rows) {
  CsvWriter w(path);
  w.cells("time", "observable", "value", "replica");
  for (const auto& r : rows) {
    w.cells(r.time, r.name, r.value, r.replica);
  }
}

transport::DiscreteMeasure read_discrete_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("read_discrete_measure: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidInput("read_discrete_measure: empty file " + path);
  }
  const int dim = static_cast<int>(split_csv_line(line).size()) - 1;
  if (dim < 1) throw InvalidInput("read_discrete_measure: bad header");
  transport::DiscreteMeasure m;
  m.dim = dim;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != dim + 1) {
      throw InvalidInput("read_discrete_measure: bad row in " + path);
    }
    m.weights.push_back(std::stod(f[0]));
    for (int c = 0; c < dim; ++c) m.points.push_back(std::stod(f[c + 1]));
  }
  m.validate();
  return m;
}

}  // namespace chaoskit::io

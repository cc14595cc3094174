#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "chaoskit/limit.hpp"
#include "chaoskit/model.hpp"
#include "chaoskit/particles.hpp"
#include "chaoskit/transport.hpp"

namespace chaoskit::io {

/// Round-trip-safe formatting (%.17g).
std::string fmt(double x);
std::string fmt(int x);
std::string fmt(long long x);
inline std::string fmt(const std::string& s) { return s; }
inline std::string fmt(const char* s) { return s; }

/// RFC-4180 field quoting.
std::string csv_escape(const std::string& field);

/// Sequential CSV writer; fields are escaped, rows end with \n.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  void row(const std::vector<std::string>& fields);
  template <typename... Ts>
  void cells(const Ts&... vals) {
    row({fmt(vals)...});
  }

 private:
  std::ofstream out_;
};

void ensure_directory(const std::string& path);

// Grid densities travel as a metadata block (half_width, n_cells, time, a,
// eps) followed by (x_center, value) rows.
void write_grid_density(const std::string& path, const limit::GridDensity& mu,
                        const model::ModelParams& p);
limit::GridDensity read_grid_density(const std::string& path,
                                     double* a = nullptr,
                                     double* eps = nullptr);

// Discrete measures as (weight, x0, x1, ...) rows.
void write_discrete_measure(const std::string& path,
                            const transport::DiscreteMeasure& m);
transport::DiscreteMeasure read_discrete_measure(const std::string& path);

// Observable time series as (time, observable, value, replica) rows.
void write_observations(const std::string& path,
                        const std::vector<particles::ObservationRow>& rows);

}  // namespace chaoskit::io

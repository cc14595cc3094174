#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chaoskit/config.hpp"
#include "chaoskit/limit.hpp"
#include "chaoskit/model.hpp"
#include "chaoskit/particles.hpp"

namespace chaoskit::experiments {

enum class Experiment {
  moment_decay,
  chaos_scaling,
  uniform_in_time,
  wj_audit,
  prop23_audit,
  constants_frontier,
  trace_audit,
  superadditivity_audit,
};

std::string experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& name);

struct GridConfig {
  int n_cells = 1024;
  double half_width = 0.0;  // <= 0 selects the default truncation
};

struct ExperimentConfig {
  Experiment experiment = Experiment::trace_audit;
  model::ModelParams model{0.1, 0.01, 1};
  particles::SimConfig sim;
  GridConfig grid;
  double eta = 1.0;  // Young's parameter of the dissipation inequality
  std::string output_dir = "out";

  // Experiment-specific knobs (unused ones are ignored by the runner).
  double t_end = 5.0;
  std::vector<int> n_values = {16, 64, 256};
  int trials = 1000;
  int d_max = 3;
  int n_max = 4;
  int pairs = 200;
  int max_atoms = 5;
  double a_min = 1e-4;
  double a_max = 2e-3;
  int a_steps = 25;
  double delta = 0.0;  // T_N = delta ln N; 0 derives it from the fitted rate

  void validate() const;
};

ExperimentConfig config_from(const config::Config& cfg);
ExperimentConfig load_config(const std::string& path);

/// Runs the configured experiment, writing CSV data, an SVG figure and
/// summary.json under output_dir.  Returns 0 iff every summary check passed.
int run(const ExperimentConfig& cfg);

/// Constants sweep over [a_min, a_max] plus the feasibility frontier.
int frontier(double a_min, double a_max, int steps, double eps, int dim,
             const std::string& output_dir);

// Shared building blocks, exposed for the test suites.

/// Replica-averaged synchronous/reflection coupling gap on a time grid.
struct GapSeries {
  int n_particles = 0;
  std::vector<double> time;
  std::vector<double> gap;
};

GapSeries coupling_gap_series(int n, int replicas, double t_end,
                              const model::ModelParams& p,
                              const limit::GridDensity& mu_inf,
                              const particles::SimConfig& sim,
                              particles::CouplingMode mode);

/// Grid-law perturbation family used by the WJ audit (>= 10 members).
std::vector<std::pair<std::string, limit::GridDensity>> perturbation_family(
    const limit::GridDensity& base);

struct Prop23Point {
  double time = 0.0;
  double w2 = 0.0;     // W2^2(G_t^N, mu_t^{(x)N}) by exact OT
  double fn = 0.0;     // closed-form fluctuation functional
  double bound = 0.0;  // W2^2(0) + eta int W2^2 + eta^-1 int F_N
  double slack = 0.0;  // bound - w2
};

struct Prop23Report {
  std::vector<Prop23Point> points;
  double min_slack = 0.0;
  int n_particles = 2;
  int replicas = 0;
};

/// Numeric dissipation-inequality chain at small N (exact OT feasible).
Prop23Report prop23_audit(const ExperimentConfig& cfg);

}  // namespace chaoskit::experiments

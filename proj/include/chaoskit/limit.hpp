#pragma once

#include <functional>
#include <vector>

#include "chaoskit/model.hpp"

namespace chaoskit::limit {

/// Probability density on a uniform grid over [-L, L], stored as cell
/// averages.  Unit mass, nonnegative values.
struct GridDensity {
  double half_width = 1.0;  // L
  int n_cells = 0;
  std::vector<double> values;  // cell averages
  double time = 0.0;

  double cell_width() const { return 2.0 * half_width / n_cells; }
  double center(int i) const {
    return -half_width + (i + 0.5) * cell_width();
  }
  double mass() const;
  /// Throws InvalidInput unless mass = 1 (1e-12) and values are finite, >= 0.
  void validate() const;
  /// Density value at x by linear interpolation of cell averages.
  double interpolate(double x) const;
};

/// Uniform density on [-width, width] embedded in a [-L, L] grid.
GridDensity make_uniform(double half_width, int n_cells, double support = 0.0);

/// Centered Gaussian truncated to the grid and renormalized.
GridDensity make_gaussian(double half_width, int n_cells, double mean,
                          double variance);

/// Normalizes raw nonnegative cell values to unit mass.
GridDensity from_values(std::vector<double> values, double half_width,
                        double time = 0.0);

/// Domain truncation default: 3 + 2 max(1, a).
double default_half_width(double a);

double moment_k(const GridDensity& mu, int k);     // int |x|^k mu
double signed_moment(const GridDensity& mu, int k);  // int x^k mu
double l1_distance(const GridDensity& f, const GridDensity& g);

/// (b * mu)(x) in one dimension: -grad V(x) + 2 eps (x - m1(mu)).
double mean_field_drift(double x, const GridDensity& mu,
                        const model::ModelParams& p);

/// Stability bound 0.4 min(h^2/2, h / max_faces |b * mu|).
double cfl_dt_bound(const GridDensity& mu, const model::ModelParams& p);

/// A dt valid for the whole run: bounds |m1| by L instead of the current mu.
double worst_case_dt_bound(double half_width, int n_cells,
                           const model::ModelParams& p);

// One explicit conservative step of
//   d/dt mu = d/dx ( d/dx mu - (b*mu) mu )
// with no-flux boundaries.  The face flux is exponentially fitted
// (Scharfetter-Gummel): centered diffusion and upwinded advection in the
// respective limits, and exactly zero on the discrete Gibbs profile, so the
// self-consistent stationary density is preserved to rounding.
class FokkerPlanckStepper {
 public:
  FokkerPlanckStepper(double half_width, int n_cells,
                      const model::ModelParams& p);

  /// Advances mu by dt in place.  Throws CflViolation or a positivity error.
  void step(GridDensity& mu, double dt);

  double max_face_speed(const GridDensity& mu) const;

 private:
  model::ModelParams params_;
  double h_;
  int n_;
  double target_sum_ = 0.0;  // pinned cell-value total, set on first step
  std::vector<double> dv_;      // potential increment across each face
  std::vector<double> exp_dv_;  // exp of the increment
  std::vector<double> flux_;    // scratch
};

/// Single-call convenience wrapper around FokkerPlanckStepper.
GridDensity fp_step(const GridDensity& mu, const model::ModelParams& p,
                    double dt);

/// Repeated fp_step, invoking on_record at step 0, every record_every steps,
/// and at the final step.
void evolve(const GridDensity& mu0, const model::ModelParams& p, double t_end,
            double dt, int record_every,
            const std::function<void(const GridDensity&)>& on_record);

/// Snapshot-collecting form; snapshots spaced by record_interval.
std::vector<GridDensity> evolve(const GridDensity& mu0,
                                const model::ModelParams& p, double t_end,
                                double dt, double record_interval);

struct FixedPointResult {
  GridDensity density;
  double residual = 0.0;  // L1 residual under the defining map
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

// Self-consistent stationary solution: damped iteration of
//   mu <- Z^{-1} exp(-V - eps W * mu)
// from the even initializer Z0^{-1} exp(-V).  half_width <= 0 selects the
// default truncation.  A non-converged result is returned with its residual
// history (possible multiple-solution regime) rather than thrown.
FixedPointResult stationary_fixed_point(const model::ModelParams& p,
                                        double damping, double tol,
                                        double half_width = 0.0,
                                        int n_cells = 2048,
                                        int max_iter = 2000);

/// Entropy + confinement + interaction; the interaction double integral is
/// evaluated through the exact moment reduction of the quadratic kernel.
double free_energy(const GridDensity& mu, const model::ModelParams& p);

/// Inverse-CDF sampler for a grid law: maps u in (0,1) through the
/// piecewise-linear quantile function.
class GridSampler {
 public:
  explicit GridSampler(const GridDensity& mu);
  double operator()(double u) const;

 private:
  std::vector<double> cdf_;    // at cell faces, cdf_[0] = 0, cdf_[n] = 1
  std::vector<double> faces_;  // face coordinates
};

}  // namespace chaoskit::limit

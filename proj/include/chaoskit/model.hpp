#pragma once

#include <span>
#include <vector>

#include "chaoskit/errors.hpp"

namespace chaoskit::model {

/// Physical parameters of the double-well interacting diffusion:
/// confinement V(x) = |x|^4 - a|x|^2, interaction eps * W(x-y) with
/// W(u) = -|u|^2, in dimension dim.
struct ModelParams {
  double a;    // well depth, > 0
  double eps;  // interaction strength, >= 0
  int dim;     // space dimension, >= 1

  // Diagnostic switch: when false every drift field and the energy are
  // identically zero (pure heat flow), used by variance-growth tests.
  bool drift_enabled = true;

  ModelParams(double a_, double eps_, int dim_) : a(a_), eps(eps_), dim(dim_) {
    if (!(a > 0.0)) throw InvalidInput("ModelParams: a must be > 0");
    if (!(eps >= 0.0)) throw InvalidInput("ModelParams: eps must be >= 0");
    if (dim < 1) throw InvalidInput("ModelParams: dim must be >= 1");
  }
};

/// Constants bundle behind the contraction estimate: radius R_a, the two
/// curvature constants, and the admissible interaction range.
struct WjConstants {
  double r_a;      // radius R_a > sqrt(a/6)
  double c1;       // C1(R_a, a, eps), computed with the explicit sup bound
  double c2;       // C2(R_a, a, eps) = 4(R_a^2 - a/6) - 4/(36 R_a^2)
  double kappa_a;  // min(4a, c1)
  double eps_a;    // min(kappa_a/4, a/2)
  double kappa;    // kappa_a - 4 eps
  bool feasible;   // kappa > 0 and eps < eps_a
};

struct PotentialBounds {
  double one_sided;       // 2a
  double convex_outside;  // 4(R^2 - a/6); meaningful only when positive
  double sup_v_eps;       // (3R)^4 + (a+2eps)(3R)^2 + 2 eps m2
  bool convexity_valid;   // R > sqrt(a/6)
};

double potential_v(std::span<const double> x, const ModelParams& p);
double potential_w(std::span<const double> u);

/// grad V(x) = (4|x|^2 - 2a) x.
void grad_v(std::span<const double> x, const ModelParams& p,
            std::span<double> out);

/// grad W(u) = -2u.
void grad_w(std::span<const double> u, std::span<double> out);

/// b(x,y) = -grad V(x) - eps grad W(x-y) = -(4|x|^2-2a)x + 2 eps (x-y).
void pair_drift(std::span<const double> x, std::span<const double> y,
                const ModelParams& p, std::span<double> out);

/// b * mu (x) for quadratic W reduces exactly to
/// -grad V(x) + 2 eps (x - m1), with m1 the mean of mu.
void mean_field_drift(std::span<const double> x,
                      std::span<const double> mu_mean, const ModelParams& p,
                      std::span<double> out);

/// Component i of the system field: (1/N) sum_j b(x_i, x_j), self term
/// included.  Uses the exact ensemble-mean reduction of the quadratic
/// interaction, so the cost is O(N d).
void system_drift(std::span<const double> positions, int n, int d,
                  const ModelParams& p, std::span<double> out);

/// Definitional O(N^2) double sum over pairs; agrees with system_drift to
/// rounding and serves as its cross-check.
void system_drift_pairwise(std::span<const double> positions, int n, int d,
                           const ModelParams& p, std::span<double> out);

/// sum_i V(x_i) + (eps / 2N) sum_{i,j} W(x_i - x_j).
/// system_drift equals minus its gradient.
double system_energy(std::span<const double> positions, int n, int d,
                     const ModelParams& p);

/// The three potential bounds for radius R and a second-moment bound m2.
PotentialBounds potential_bounds(double r, double m2, const ModelParams& p);

/// Stationary second-moment bound sqrt((a+eps)^2 + d).
double stationary_m2_bound(double a, double eps, int dim);

/// Radius R_a: the infimum of R with R^2 - a/6 > (36 R^2)^{-1} + a, found
/// by bisection on [sqrt(a/6), 10] to 1e-10 (the gap is increasing in R).
double radius_r_a(double a);

/// Computes the full constants bundle.  Requires eps < a/2.
WjConstants wj_constants(double a, double eps, int dim);

/// Largest well depth with a positive contraction constant at eps -> 0,
/// located by bisection on a.  Everything below it admits feasible eps.
double feasibility_frontier(int dim);

/// True iff eps < eps_a(a) and a is below the computed frontier.
bool admissible(const ModelParams& p);

// Convenience value forms used by tests and small callers.
std::vector<double> grad_v(const std::vector<double>& x, const ModelParams& p);
std::vector<double> grad_w(const std::vector<double>& u);
std::vector<double> pair_drift(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const ModelParams& p);

}  // namespace chaoskit::model

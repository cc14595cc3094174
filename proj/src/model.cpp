#include "chaoskit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace chaoskit::model {

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

double potential_v(std::span<const double> x, const ModelParams& p) {
  if (!p.drift_enabled) return 0.0;
  const double r2 = squared_norm(x);
  return r2 * r2 - p.a * r2;
}

double potential_w(std::span<const double> u) { return -squared_norm(u); }

void grad_v(std::span<const double> x, const ModelParams& p,
            std::span<double> out) {
  if (!p.drift_enabled) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double c = 4.0 * squared_norm(x) - 2.0 * p.a;
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = c * x[k];
}

void grad_w(std::span<const double> u, std::span<double> out) {
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = -2.0 * u[k];
}

void pair_drift(std::span<const double> x, std::span<const double> y,
                const ModelParams& p, std::span<double> out) {
  if (!p.drift_enabled) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double c = 4.0 * squared_norm(x) - 2.0 * p.a;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = -c * x[k] + 2.0 * p.eps * (x[k] - y[k]);
  }
}

void mean_field_drift(std::span<const double> x,
                      std::span<const double> mu_mean, const ModelParams& p,
                      std::span<double> out) {
  if (!p.drift_enabled) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double c = 4.0 * squared_norm(x) - 2.0 * p.a;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = -c * x[k] + 2.0 * p.eps * (x[k] - mu_mean[k]);
  }
}

void system_drift(std::span<const double> positions, int n, int d,
                  const ModelParams& p, std::span<double> out) {
  if (!p.drift_enabled) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  // (1/N) sum_j 2 eps (x_i - x_j) = 2 eps (x_i - xbar); the self term j=i
  // contributes -grad V(x_i) and zero interaction.
  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) mean[k] += positions[i * d + k];
  }
  for (int k = 0; k < d; ++k) mean[k] /= n;
  for (int i = 0; i < n; ++i) {
    const auto xi = positions.subspan(i * d, d);
    const double c = 4.0 * squared_norm(xi) - 2.0 * p.a;
    for (int k = 0; k < d; ++k) {
      out[i * d + k] = -c * xi[k] + 2.0 * p.eps * (xi[k] - mean[k]);
    }
  }
}

void system_drift_pairwise(std::span<const double> positions, int n, int d,
                           const ModelParams& p, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (!p.drift_enabled) return;
  std::vector<double> b(d);
  for (int i = 0; i < n; ++i) {
    const auto xi = positions.subspan(i * d, d);
    for (int j = 0; j < n; ++j) {
      pair_drift(xi, positions.subspan(j * d, d), p, b);
      for (int k = 0; k < d; ++k) out[i * d + k] += b[k];
    }
    for (int k = 0; k < d; ++k) out[i * d + k] /= n;
  }
}

double system_energy(std::span<const double> positions, int n, int d,
                     const ModelParams& p) {
  if (!p.drift_enabled) return 0.0;
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    e += potential_v(positions.subspan(i * d, d), p);
  }
  // sum_{i,j} W(x_i-x_j) = -sum_{i,j} |x_i-x_j|^2 = -2N sum_i |x_i|^2
  //                        + 2 |sum_i x_i|^2.
  double sum_sq = 0.0;
  std::vector<double> sum(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto xi = positions.subspan(i * d, d);
    sum_sq += squared_norm(xi);
    for (int k = 0; k < d; ++k) sum[k] += xi[k];
  }
  double sum_norm2 = 0.0;
  for (int k = 0; k < d; ++k) sum_norm2 += sum[k] * sum[k];
  const double w_total = -2.0 * n * sum_sq + 2.0 * sum_norm2;
  return e + p.eps / (2.0 * n) * w_total;
}

PotentialBounds potential_bounds(double r, double m2, const ModelParams& p) {
  if (!(r > 0.0)) throw InvalidInput("potential_bounds: R must be > 0");
  if (!(m2 >= 0.0)) throw InvalidInput("potential_bounds: m2 must be >= 0");
  PotentialBounds b;
  b.one_sided = 2.0 * p.a;
  b.convex_outside = 4.0 * (r * r - p.a / 6.0);
  const double r3 = 3.0 * r;
  b.sup_v_eps = r3 * r3 * r3 * r3 + (p.a + 2.0 * p.eps) * r3 * r3 +
                2.0 * p.eps * m2;
  b.convexity_valid = r > std::sqrt(p.a / 6.0);
  return b;
}

double stationary_m2_bound(double a, double eps, int dim) {
  return std::sqrt((a + eps) * (a + eps) + dim);
}

namespace {

// Gap R^2 - a/6 - (36 R^2)^{-1} - a, increasing in R on (0, inf).
double radius_gap(double r, double a) {
  return r * r - a / 6.0 - 1.0 / (36.0 * r * r) - a;
}

}  // namespace

double radius_r_a(double a) {
  if (!(a > 0.0)) throw InvalidInput("radius_r_a: a must be > 0");
  double lo = std::sqrt(a / 6.0);
  double hi = 10.0;
  if (radius_gap(lo, a) > 0.0 || radius_gap(hi, a) <= 0.0) {
    throw NumericalError("radius_r_a: bracket [sqrt(a/6), 10] failed");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (radius_gap(mid, a) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // The upper end of the bracket strictly satisfies the inequality, which
  // keeps C2(R_a) > 4a in floating point as well.
  return hi;
}

WjConstants wj_constants(double a, double eps, int dim) {
  if (!(a > 0.0)) throw InvalidInput("wj_constants: a must be > 0");
  if (!(eps >= 0.0)) throw InvalidInput("wj_constants: eps must be >= 0");
  if (!(eps < a / 2.0)) {
    throw RegimeError("wj_constants: requires eps < a/2");
  }
  WjConstants c;
  c.r_a = radius_r_a(a);
  const double m2 = stationary_m2_bound(a, eps, dim);
  ModelParams p(a, eps, dim);
  const double sup_v = potential_bounds(c.r_a, m2, p).sup_v_eps;
  c.c1 = 1.0 / (36.0 * c.r_a * c.r_a * std::exp(2.0 * sup_v)) - 2.0 * a;
  c.c2 = 4.0 * (c.r_a * c.r_a - a / 6.0) - 4.0 / (36.0 * c.r_a * c.r_a);
  c.kappa_a = std::min(4.0 * a, c.c1);
  c.eps_a = std::min(c.kappa_a / 4.0, a / 2.0);
  c.kappa = c.kappa_a - 4.0 * eps;
  c.feasible = c.kappa > 0.0 && eps < c.eps_a;
  return c;
}

double feasibility_frontier(int dim) {
  // kappa_a(a) = min(4a, c1(a)) at eps=0; positive near 0, negative for
  // large a.  Bisection on the sign change.
  auto kappa_at = [dim](double a) { return wj_constants(a, 0.0, dim).kappa_a; };
  double lo = 1e-8;
  double hi = 1.0;
  if (kappa_at(lo) <= 0.0) return 0.0;
  while (kappa_at(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e6) return hi;
  }
  while (hi - lo > 1e-12 + 1e-9 * lo) {
    const double mid = 0.5 * (lo + hi);
    if (kappa_at(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

bool admissible(const ModelParams& p) {
  if (!(p.eps < p.a / 2.0)) return false;
  const double a_star = feasibility_frontier(p.dim);
  if (!(p.a < a_star)) return false;
  return wj_constants(p.a, p.eps, p.dim).feasible;
}

std::vector<double> grad_v(const std::vector<double>& x,
                           const ModelParams& p) {
  std::vector<double> out(x.size());
  grad_v(std::span<const double>(x), p, out);
  return out;
}

std::vector<double> grad_w(const std::vector<double>& u) {
  std::vector<double> out(u.size());
  grad_w(std::span<const double>(u), out);
  return out;
}

std::vector<double> pair_drift(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const ModelParams& p) {
  std::vector<double> out(x.size());
  pair_drift(std::span<const double>(x), std::span<const double>(y), p, out);
  return out;
}

}  // namespace chaoskit::model

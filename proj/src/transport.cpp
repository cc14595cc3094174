#include "chaoskit/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chaoskit/rng.hpp"

namespace chaoskit::transport {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

void DiscreteMeasure::validate() const {
  if (dim < 1) throw InvalidInput("DiscreteMeasure: dim must be >= 1");
  const int n = n_atoms();
  if (n == 0) throw InvalidInput("DiscreteMeasure: no atoms");
  if (points.size() != static_cast<std::size_t>(n) * dim) {
    throw InvalidInput("DiscreteMeasure: points/weights size mismatch");
  }
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidInput("DiscreteMeasure: negative weight");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-12) {
    throw InvalidInput("DiscreteMeasure: weights must sum to 1 within 1e-12");
  }
  for (double x : points) {
    if (!std::isfinite(x)) throw InvalidInput("DiscreteMeasure: NaN point");
  }
}

DiscreteMeasure make_discrete_1d(std::vector<double> xs,
                                 std::vector<double> ws) {
  DiscreteMeasure m;
  m.dim = 1;
  const int n = static_cast<int>(xs.size());
  if (ws.empty()) ws.assign(n, 1.0 / n);
  m.points = std::move(xs);
  m.weights = std::move(ws);
  m.validate();
  return m;
}

double MonotoneMap::apply(double x) const {
  const auto& g = grid;
  if (x <= g.front()) return values.front();
  if (x >= g.back()) return values.back();
  const auto it = std::upper_bound(g.begin(), g.end(), x);
  const int i = static_cast<int>(it - g.begin()) - 1;
  const double w = (x - g[i]) / (g[i + 1] - g[i]);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

// ---------------------------------------------------------------------------
// Quantile representation: a list of segments (u0,u1) -> linear x(u).
// Discrete atoms give flat segments, grid cells give sloped ones, and the
// squared gap of two piecewise-linear quantiles integrates in closed form.
// ---------------------------------------------------------------------------

namespace {

struct QSeg {
  double u0, u1, x0, x1;
};

std::vector<QSeg> quantile_segments(const limit::GridDensity& mu) {
  mu.validate();
  const double h = mu.cell_width();
  std::vector<QSeg> segs;
  segs.reserve(mu.n_cells);
  double cum = 0.0;
  for (int i = 0; i < mu.n_cells; ++i) {
    const double m = mu.values[i] * h;
    if (m > 0.0) {
      const double face = -mu.half_width + i * h;
      segs.push_back({cum, cum + m, face, face + h});
    }
    cum += m;
  }
  // Normalize the endpoint to exactly 1.
  for (auto& s : segs) {
    s.u0 /= cum;
    s.u1 /= cum;
  }
  segs.back().u1 = 1.0;
  return segs;
}

std::vector<QSeg> quantile_segments(const DiscreteMeasure& mu) {
  mu.validate();
  if (mu.dim != 1) throw InvalidInput("w2_1d: measure must be 1-D");
  const int n = mu.n_atoms();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return mu.points[a] < mu.points[b]; });
  std::vector<QSeg> segs;
  double cum = 0.0;
  for (int k : order) {
    const double w = mu.weights[k];
    if (w > 0.0) segs.push_back({cum, cum + w, mu.points[k], mu.points[k]});
    cum += w;
  }
  for (auto& s : segs) {
    s.u0 /= cum;
    s.u1 /= cum;
  }
  segs.back().u1 = 1.0;
  return segs;
}

double x_at(const QSeg& s, double u) {
  if (s.u1 <= s.u0) return s.x0;
  const double w = (u - s.u0) / (s.u1 - s.u0);
  return s.x0 + w * (s.x1 - s.x0);
}

// int_0^1 (Qa - Qb)^2 du, exact per merged segment: the gap is linear in u
// there, so (du/3)(d0^2 + d0 d1 + d1^2).
double w2_from_segments(const std::vector<QSeg>& a,
                        const std::vector<QSeg>& b) {
  std::size_t ia = 0, ib = 0;
  double u = 0.0, total = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double next = std::min(a[ia].u1, b[ib].u1);
    if (next > u) {
      const double d0 = x_at(a[ia], u) - x_at(b[ib], u);
      const double d1 = x_at(a[ia], next) - x_at(b[ib], next);
      total += (next - u) / 3.0 * (d0 * d0 + d0 * d1 + d1 * d1);
      u = next;
    }
    if (a[ia].u1 <= next) ++ia;
    if (ib < b.size() && b[ib].u1 <= next) ++ib;
  }
  return total;
}

}  // namespace

double w2_1d(const limit::GridDensity& mu, const limit::GridDensity& nu) {
  return w2_from_segments(quantile_segments(mu), quantile_segments(nu));
}

double w2_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return w2_from_segments(quantile_segments(mu), quantile_segments(nu));
}

double w2_1d_sorted(std::span<const double> x, std::span<const double> y) {
  if (x.size() == y.size()) {
    // Monotone matching of order statistics.
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
    return s / x.size();
  }
  DiscreteMeasure a = make_discrete_1d({x.begin(), x.end()});
  DiscreteMeasure b = make_discrete_1d({y.begin(), y.end()});
  return w2_1d(a, b);
}

// ---------------------------------------------------------------------------
// Exact discrete optimal transport.
// ---------------------------------------------------------------------------

namespace {

// O(n^3) assignment with dual potentials (the standard Hungarian scheme).
// Returns row -> column.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur =
            cost[(i0 - 1) * static_cast<std::size_t>(n) + (j - 1)] - u[i0] -
            v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

// Successive shortest augmenting paths with Johnson potentials on the
// complete bipartite transportation graph.  Every augmentation saturates a
// positive bottleneck, so the procedure terminates with exact marginals.
class TransportationSolver {
 public:
  TransportationSolver(const std::vector<double>& cost, int n, int m,
                       const std::vector<double>& supply,
                       const std::vector<double>& demand)
      : c_(cost), n_(n), m_(m), res_a_(supply), res_b_(demand) {}

  // Returns the flow matrix (n x m).  Residues below kFloor are left
  // unshipped: the two weight vectors agree only to rounding, so exact
  // drainage of both sides at once is not attainable.  The leftover is
  // ~1e-13 per marginal, far inside the 1e-10 marginal contract.
  std::vector<double> solve() {
    constexpr double kFloor = 1e-13;
    const int ns = n_ + m_;     // super source
    const int nt = n_ + m_ + 1; // super sink
    const int nv = n_ + m_ + 2;
    std::vector<double> pot(nv, 0.0), dist(nv);
    std::vector<int> prev(nv);
    std::vector<char> done(nv);
    std::vector<double> flow(static_cast<std::size_t>(n_) * m_, 0.0);

    const long long max_rounds = 20LL * ns * ns + 100;
    long long rounds = 0;
    while (true) {
      bool any_supply = false;
      for (int i = 0; i < n_; ++i) {
        if (res_a_[i] > kFloor) {
          any_supply = true;
          break;
        }
      }
      bool any_demand = false;
      for (int j = 0; j < m_; ++j) {
        if (res_b_[j] > kFloor) {
          any_demand = true;
          break;
        }
      }
      if (!any_supply || !any_demand) break;
      if (++rounds > max_rounds) {
        throw NumericalError("w2_exact_discrete: augmentation cap exceeded");
      }

      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      std::fill(prev.begin(), prev.end(), -1);
      dist[ns] = 0.0;
      // Dense Dijkstra over reduced costs.
      for (int round = 0; round < nv; ++round) {
        int best = -1;
        double bd = kInf;
        for (int v = 0; v < nv; ++v) {
          if (!done[v] && dist[v] < bd) {
            bd = dist[v];
            best = v;
          }
        }
        if (best < 0) break;
        done[best] = 1;
        const double du = dist[best];
        if (best == ns) {
          for (int i = 0; i < n_; ++i) {
            if (res_a_[i] > kFloor) {
              const double nd = du + (pot[ns] - pot[i]);
              if (nd < dist[i]) {
                dist[i] = nd;
                prev[i] = ns;
              }
            }
          }
        } else if (best < n_) {
          const int i = best;
          const double base = du + pot[i];
          const std::size_t row = static_cast<std::size_t>(i) * m_;
          for (int j = 0; j < m_; ++j) {
            const int vj = n_ + j;
            if (done[vj]) continue;
            const double nd = base + c_[row + j] - pot[vj];
            if (nd < dist[vj]) {
              dist[vj] = nd;
              prev[vj] = i;
            }
          }
        } else if (best < n_ + m_) {
          const int j = best - n_;
          if (res_b_[j] > kFloor) {
            const double nd = du + (pot[best] - pot[nt]);
            if (nd < dist[nt]) {
              dist[nt] = nd;
              prev[nt] = best;
            }
          }
          const std::size_t col = j;
          for (int i = 0; i < n_; ++i) {
            if (done[i]) continue;
            if (flow[static_cast<std::size_t>(i) * m_ + col] > 0.0) {
              const double nd =
                  du - c_[static_cast<std::size_t>(i) * m_ + col] +
                  (pot[best] - pot[i]);
              if (nd < dist[i]) {
                dist[i] = nd;
                prev[i] = best;
              }
            }
          }
        }
      }
      if (!(dist[nt] < kInf)) {
        throw NumericalError("w2_exact_discrete: no augmenting path");
      }
      for (int v = 0; v < nv; ++v) {
        if (dist[v] < kInf) pot[v] += dist[v];
      }
      // Bottleneck along the path.
      double theta = kInf;
      for (int v = nt; prev[v] >= 0; v = prev[v]) {
        const int u = prev[v];
        if (u == ns) {
          theta = std::min(theta, res_a_[v]);
        } else if (v == nt) {
          theta = std::min(theta, res_b_[u - n_]);
        } else if (u >= n_ && v < n_) {
          theta = std::min(
              theta, flow[static_cast<std::size_t>(v) * m_ + (u - n_)]);
        }
      }
      for (int v = nt; prev[v] >= 0; v = prev[v]) {
        const int u = prev[v];
        if (u == ns) {
          res_a_[v] -= theta;
        } else if (v == nt) {
          res_b_[u - n_] -= theta;
        } else if (u < n_) {
          flow[static_cast<std::size_t>(u) * m_ + (v - n_)] += theta;
        } else {
          flow[static_cast<std::size_t>(v) * m_ + (u - n_)] -= theta;
        }
      }
    }
    return flow;
  }

 private:
  const std::vector<double>& c_;
  int n_, m_;
  std::vector<double> res_a_, res_b_;
};

}  // namespace

OtResult w2_exact_discrete(const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu, std::size_t plan_cap) {
  mu.validate();
  nu.validate();
  if (mu.dim != nu.dim) {
    throw InvalidInput("w2_exact_discrete: dimension mismatch");
  }
  const int n = mu.n_atoms();
  const int m = nu.n_atoms();
  if (static_cast<std::size_t>(n) * m > plan_cap) {
    throw SizeCapError(
        "w2_exact_discrete: plan would exceed the entry cap; "
        "sample the inputs down first");
  }

  std::vector<double> cost(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      cost[static_cast<std::size_t>(i) * m + j] =
          sq_dist(mu.point(i), nu.point(j));
    }
  }

  OtResult out;
  out.n = n;
  out.m = m;

  bool equal_weights = n == m;
  if (equal_weights) {
    const double w = 1.0 / n;
    for (double x : mu.weights) equal_weights &= std::abs(x - w) < 1e-15;
    for (double x : nu.weights) equal_weights &= std::abs(x - w) < 1e-15;
  }

  if (equal_weights) {
    const auto row_to_col = solve_assignment(cost, n);
    out.plan.assign(static_cast<std::size_t>(n) * m, 0.0);
    const double w = 1.0 / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      out.plan[static_cast<std::size_t>(i) * m + row_to_col[i]] = w;
      total += cost[static_cast<std::size_t>(i) * m + row_to_col[i]];
    }
    out.cost = total * w;
    return out;
  }

  TransportationSolver solver(cost, n, m, mu.weights, nu.weights);
  out.plan = solver.solve();
  double total = 0.0;
  for (std::size_t k = 0; k < out.plan.size(); ++k) {
    total += out.plan[k] * cost[k];
  }
  out.cost = total;
  return out;
}

// ---------------------------------------------------------------------------
// Brenier map and the dissipation functional in one dimension.
// ---------------------------------------------------------------------------

MonotoneMap brenier_map_1d(const limit::GridDensity& nu,
                           const limit::GridDensity& mu) {
  nu.validate();
  mu.validate();
  const auto mu_segs = quantile_segments(mu);
  const double h = nu.cell_width();
  MonotoneMap map;
  map.grid.resize(nu.n_cells);
  map.values.resize(nu.n_cells);
  map.derivative.resize(nu.n_cells);

  // Quantile of mu evaluated by binary search over its segments.
  auto mu_quantile = [&mu_segs](double u) {
    auto it = std::lower_bound(
        mu_segs.begin(), mu_segs.end(), u,
        [](const QSeg& s, double uu) { return s.u1 < uu; });
    if (it == mu_segs.end()) --it;
    return x_at(*it, std::clamp(u, it->u0, it->u1));
  };

  double cum = 0.0;
  for (int i = 0; i < nu.n_cells; ++i) {
    const double x = nu.center(i);
    const double mass = nu.values[i] * h;
    const double u = cum + 0.5 * mass;  // CDF of nu at the cell center
    cum += mass;
    const double t = mu_quantile(std::clamp(u, 0.0, 1.0));
    if (!std::isfinite(t)) {
      throw NumericalError("brenier_map_1d: degenerate CDF inversion");
    }
    map.grid[i] = x;
    map.values[i] = t;
    const double target = mu.interpolate(t);
    map.derivative[i] =
        target > 0.0 ? std::max(nu.values[i] / target, 1e-12) : 1e-12;
  }
  return map;
}

WjBreakdown wj_functional_1d(const limit::GridDensity& mu,
                             const limit::GridDensity& nu,
                             const model::ModelParams& p) {
  const MonotoneMap map = brenier_map_1d(nu, mu);
  const double h = nu.cell_width();
  WjBreakdown out;
  out.min_heat_integrand = kInf;
  double disp_sq = 0.0;   // int (T-x)^2 dnu
  double disp_mean = 0.0; // int (T-x) dnu
  double v_term = 0.0;    // int <grad V(T)-grad V(x), T-x> dnu
  for (int i = 0; i < nu.n_cells; ++i) {
    const double w = nu.values[i] * h;
    if (w == 0.0) continue;
    const double tp = map.derivative[i];
    const double heat = tp + 1.0 / tp - 2.0;
    out.min_heat_integrand = std::min(out.min_heat_integrand, heat);
    out.heat_term += heat * w;
    const double x = map.grid[i];
    const double t = map.values[i];
    const double d = t - x;
    disp_sq += d * d * w;
    disp_mean += d * w;
    if (p.drift_enabled) {
      const double gv_t = (4.0 * t * t - 2.0 * p.a) * t;
      const double gv_x = (4.0 * x * x - 2.0 * p.a) * x;
      v_term += (gv_t - gv_x) * d * w;
    }
  }
  if (p.drift_enabled) {
    // Drift cross term in the orientation the dissipation estimates use
    // (confinement differences enter with a plus sign, the interaction
    // part is bounded below by -2 eps W2^2):
    //   int int <b(x,y) - b(T(x),T(y)), T(x)-x> dnu dnu
    // which the quadratic kernel reduces to single integrals.
    out.drift_term = v_term - 2.0 * p.eps * (disp_sq - disp_mean * disp_mean);
  }
  out.j = out.heat_term + out.drift_term;
  return out;
}

// ---------------------------------------------------------------------------
// Mean-field fluctuation functional.
// ---------------------------------------------------------------------------

double f_n_closed_form(const limit::GridDensity& mu,
                       const model::ModelParams& p, int n) {
  if (n < 2) throw InvalidInput("f_n_closed_form: n must be >= 2");
  const double m1 = limit::signed_moment(mu, 1);
  const double var = limit::signed_moment(mu, 2) - m1 * m1;
  if (!p.drift_enabled) return 0.0;
  return 4.0 * p.eps * p.eps * (static_cast<double>(n - 1) / n) * var;
}

FnResult f_n_functional(const limit::GridDensity& mu,
                        const model::ModelParams& p, int n,
                        long long mc_samples, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("f_n_functional: n must be >= 2");
  if (mc_samples < 2) throw InvalidInput("f_n_functional: need >= 2 samples");
  FnResult out;
  out.closed_form = f_n_closed_form(mu, p, n);

  const limit::GridSampler sampler(mu);
  const double m1 = limit::signed_moment(mu, 1);
  const bool all_pairs = static_cast<long long>(n) * (n - 1) <= 100;

  // Per draw of x ~ mu^{(x)N} the inner value is either the full
  // (1/N^2) sum_{i!=j} or, for large N, the cyclic-pair average times
  // (N-1)/N; both are unbiased by exchangeability and neither consults the
  // variance reduction that gives the closed form.
  auto pair_term = [&](double xi, double xj) {
    double bij, bstar;
    model::pair_drift(std::span<const double>(&xi, 1),
                      std::span<const double>(&xj, 1), p,
                      std::span<double>(&bij, 1));
    model::mean_field_drift(std::span<const double>(&xi, 1),
                            std::span<const double>(&m1, 1), p,
                            std::span<double>(&bstar, 1));
    const double d = bij - bstar;
    return d * d;
  };

  std::vector<double> x(n);
  double sum = 0.0, sum_sq = 0.0;
  for (long long s = 0; s < mc_samples; ++s) {
    for (int i = 0; i < n; ++i) {
      x[i] = sampler(rng::uniform_at(seed, s, 0, i, 0));
    }
    double val = 0.0;
    if (all_pairs) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (j != i) val += pair_term(x[i], x[j]);
        }
      }
      val /= static_cast<double>(n) * n;
    } else {
      for (int i = 0; i < n; ++i) val += pair_term(x[i], x[(i + 1) % n]);
      val *= static_cast<double>(n - 1) / (static_cast<double>(n) * n);
    }
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / mc_samples;
  const double var =
      std::max(0.0, sum_sq / mc_samples - mean * mean) * mc_samples /
      (mc_samples - 1.0);
  out.mc_estimate = mean;
  out.mc_std_error = std::sqrt(var / mc_samples);
  return out;
}

FnDisplacement f_n_displacement(const limit::GridDensity& mu,
                                const model::ModelParams& p, int n,
                                long long mc_samples, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("f_n_displacement: n must be >= 2");
  if (mc_samples < 2) {
    throw InvalidInput("f_n_displacement: need >= 2 samples");
  }
  FnDisplacement out;
  const double m2 = limit::signed_moment(mu, 2);
  out.eps2_m2 = p.eps * p.eps * m2;
  out.four_eps2_m2 = 4.0 * out.eps2_m2;
  if (!p.drift_enabled) return out;
  const limit::GridSampler sampler(mu);
  const double scale = static_cast<double>(n - 1) / n;
  double gw_shift[1], gw[1];
  double sum = 0.0, sum_sq = 0.0;
  for (long long s = 0; s < mc_samples; ++s) {
    const double xi = sampler(rng::uniform_at(seed, s, 2, 0, 0));
    const double xj = sampler(rng::uniform_at(seed, s, 2, 1, 0));
    const double z = sampler(rng::uniform_at(seed, s, 2, 2, 0));
    const double u = xi - xj;
    const double us = u - z;
    model::grad_w(std::span<const double>(&us, 1), gw_shift);
    model::grad_w(std::span<const double>(&u, 1), gw);
    const double d = p.eps * (gw_shift[0] - gw[0]);
    const double v = scale * d * d;
    sum += v;
    sum_sq += v * v;
  }
  out.mc_estimate = sum / mc_samples;
  const double var =
      std::max(0.0, sum_sq / mc_samples - out.mc_estimate * out.mc_estimate) *
      mc_samples / (mc_samples - 1.0);
  out.mc_std_error = std::sqrt(var / mc_samples);
  return out;
}

CrossTerm f_n_cross_term(const limit::GridDensity& mu,
                         const model::ModelParams& p, long long mc_samples,
                         std::uint64_t seed) {
  if (mc_samples < 2) throw InvalidInput("f_n_cross_term: need >= 2 samples");
  const limit::GridSampler sampler(mu);
  const double m1 = limit::signed_moment(mu, 1);
  auto diff = [&](double xi, double xj) {
    double bij, bstar;
    model::pair_drift(std::span<const double>(&xi, 1),
                      std::span<const double>(&xj, 1), p,
                      std::span<double>(&bij, 1));
    model::mean_field_drift(std::span<const double>(&xi, 1),
                            std::span<const double>(&m1, 1), p,
                            std::span<double>(&bstar, 1));
    return bij - bstar;
  };
  double sum = 0.0, sum_sq = 0.0;
  for (long long s = 0; s < mc_samples; ++s) {
    const double xi = sampler(rng::uniform_at(seed, s, 1, 0, 0));
    const double xj = sampler(rng::uniform_at(seed, s, 1, 1, 0));
    const double xk = sampler(rng::uniform_at(seed, s, 1, 2, 0));
    const double v = diff(xi, xj) * diff(xi, xk);
    sum += v;
    sum_sq += v * v;
  }
  CrossTerm out;
  out.estimate = sum / mc_samples;
  const double var =
      std::max(0.0, sum_sq / mc_samples - out.estimate * out.estimate) *
      mc_samples / (mc_samples - 1.0);
  out.std_error = std::sqrt(var / mc_samples);
  return out;
}

// ---------------------------------------------------------------------------
// Product-measure audits.
// ---------------------------------------------------------------------------

namespace {

// Sort atoms lexicographically and merge exact duplicates.
DiscreteMeasure merged(DiscreteMeasure m) {
  const int n = m.n_atoms();
  const int d = m.dim;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](int a, int b) {
    return std::lexicographical_compare(
        m.points.begin() + static_cast<std::size_t>(a) * d,
        m.points.begin() + static_cast<std::size_t>(a) * d + d,
        m.points.begin() + static_cast<std::size_t>(b) * d,
        m.points.begin() + static_cast<std::size_t>(b) * d + d);
  };
  auto equal = [&](int a, int b) {
    return std::equal(m.points.begin() + static_cast<std::size_t>(a) * d,
                      m.points.begin() + static_cast<std::size_t>(a) * d + d,
                      m.points.begin() + static_cast<std::size_t>(b) * d);
  };
  std::sort(order.begin(), order.end(), less);
  DiscreteMeasure out;
  out.dim = d;
  for (int k = 0; k < n;) {
    int j = k;
    double w = 0.0;
    while (j < n && equal(order[k], order[j])) {
      w += m.weights[order[j]];
      ++j;
    }
    if (w > 0.0) {
      const auto pt = m.point(order[k]);
      out.points.insert(out.points.end(), pt.begin(), pt.end());
      out.weights.push_back(w);
    }
    k = j;
  }
  return out;
}

}  // namespace

DiscreteMeasure tensor_power(const DiscreteMeasure& m, int n) {
  m.validate();
  if (n < 1) throw InvalidInput("tensor_power: n must be >= 1");
  const int atoms = m.n_atoms();
  double count = 1.0;
  for (int k = 0; k < n; ++k) {
    count *= atoms;
    if (count > 2e6) throw SizeCapError("tensor_power: too many atoms");
  }
  const long long total = static_cast<long long>(count);
  DiscreteMeasure out;
  out.dim = m.dim * n;
  out.points.resize(static_cast<std::size_t>(total) * out.dim);
  out.weights.resize(total);
  std::vector<int> idx(n, 0);
  for (long long t = 0; t < total; ++t) {
    double w = 1.0;
    for (int b = 0; b < n; ++b) {
      const auto pt = m.point(idx[b]);
      std::copy(pt.begin(), pt.end(),
                out.points.begin() + static_cast<std::size_t>(t) * out.dim +
                    static_cast<std::size_t>(b) * m.dim);
      w *= m.weights[idx[b]];
    }
    out.weights[t] = w;
    for (int b = n - 1; b >= 0; --b) {
      if (++idx[b] < atoms) break;
      idx[b] = 0;
    }
  }
  // Guard against weight rounding drift.
  double s = 0.0;
  for (double w : out.weights) s += w;
  for (double& w : out.weights) w /= s;
  return out;
}

AuditPair tensorization_audit(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, int n) {
  AuditPair out;
  out.rhs = n * w2_exact_discrete(mu, nu).cost;
  out.lhs = w2_exact_discrete(tensor_power(mu, n), tensor_power(nu, n)).cost;
  return out;
}

DiscreteMeasure symmetrize_blocks(const DiscreteMeasure& m, int block_dim,
                                  int n_blocks) {
  m.validate();
  if (n_blocks > 6) throw SizeCapError("symmetrize_blocks: n_blocks > 6");
  if (m.dim != block_dim * n_blocks) {
    throw InvalidInput("symmetrize_blocks: dim != block_dim * n_blocks");
  }
  std::vector<int> perm(n_blocks);
  std::iota(perm.begin(), perm.end(), 0);
  long long n_perm = 1;
  for (int k = 2; k <= n_blocks; ++k) n_perm *= k;

  DiscreteMeasure out;
  out.dim = m.dim;
  out.points.reserve(m.points.size() * n_perm);
  out.weights.reserve(m.weights.size() * n_perm);
  do {
    for (int k = 0; k < m.n_atoms(); ++k) {
      const auto pt = m.point(k);
      for (int b = 0; b < n_blocks; ++b) {
        for (int c = 0; c < block_dim; ++c) {
          out.points.push_back(pt[perm[b] * block_dim + c]);
        }
      }
      out.weights.push_back(m.weights[k] / n_perm);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return merged(std::move(out));
}

DiscreteMeasure block_marginal(const DiscreteMeasure& m, int block_dim,
                               int ell) {
  m.validate();
  const int keep = block_dim * ell;
  if (keep < 1 || keep > m.dim) {
    throw InvalidInput("block_marginal: ell out of range");
  }
  DiscreteMeasure out;
  out.dim = keep;
  out.weights = m.weights;
  out.points.resize(static_cast<std::size_t>(m.n_atoms()) * keep);
  for (int k = 0; k < m.n_atoms(); ++k) {
    const auto pt = m.point(k);
    std::copy(pt.begin(), pt.begin() + keep,
              out.points.begin() + static_cast<std::size_t>(k) * keep);
  }
  return merged(std::move(out));
}

bool is_block_symmetric(const DiscreteMeasure& m, int block_dim, int n_blocks,
                        double tol) {
  if (m.dim != block_dim * n_blocks) return false;
  const DiscreteMeasure base = merged(m);
  // Invariance under adjacent transpositions generates the full group.
  for (int b = 0; b + 1 < n_blocks; ++b) {
    DiscreteMeasure swapped = base;
    for (int k = 0; k < swapped.n_atoms(); ++k) {
      double* pt =
          swapped.points.data() + static_cast<std::size_t>(k) * swapped.dim;
      for (int c = 0; c < block_dim; ++c) {
        std::swap(pt[b * block_dim + c], pt[(b + 1) * block_dim + c]);
      }
    }
    const DiscreteMeasure s = merged(std::move(swapped));
    if (s.n_atoms() != base.n_atoms()) return false;
    for (int k = 0; k < base.n_atoms(); ++k) {
      if (std::abs(s.weights[k] - base.weights[k]) > tol) return false;
      const auto pa = base.point(k);
      const auto pb = s.point(k);
      for (int c = 0; c < base.dim; ++c) {
        if (pa[c] != pb[c]) return false;
      }
    }
  }
  return true;
}

AuditPair marginal_superadditivity_audit(const DiscreteMeasure& g,
                                         const DiscreteMeasure& f,
                                         int block_dim, int n_blocks,
                                         int ell) {
  if (ell < 1 || ell > n_blocks) {
    throw InvalidInput("marginal_superadditivity_audit: ell out of range");
  }
  if (!is_block_symmetric(g, block_dim, n_blocks) ||
      !is_block_symmetric(f, block_dim, n_blocks)) {
    throw InvalidInput(
        "marginal_superadditivity_audit: inputs must be block-symmetric "
        "(symmetrize_blocks first)");
  }
  AuditPair out;
  out.rhs = w2_exact_discrete(g, f).cost / n_blocks;
  const DiscreteMeasure gm = block_marginal(g, block_dim, ell);
  const DiscreteMeasure fm = block_marginal(f, block_dim, ell);
  out.lhs = w2_exact_discrete(gm, fm).cost / ell;
  return out;
}

}  // namespace chaoskit::transport

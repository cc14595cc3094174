#include "chaoskit/limit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace chaoskit::limit {

namespace {

// Bernoulli function z / (e^z - 1) and its mirror, sharing one divide.
// For small |z| the quartic series keeps the pair's ratio accurate.
inline void bernoulli_pair(double z, double ez, double& b_plus,
                           double& b_minus) {
  if (std::abs(z) < 0.02) {
    const double z2 = z * z;
    const double even = 1.0 + z2 / 12.0 - z2 * z2 / 720.0;
    b_plus = even - 0.5 * z;
    b_minus = even + 0.5 * z;
  } else {
    b_plus = z / (ez - 1.0);
    b_minus = b_plus * ez;
  }
}

double effective_potential(double x, double a, double eps, double m1) {
  const double x2 = x * x;
  return x2 * x2 - a * x2 - eps * x2 + 2.0 * eps * m1 * x;
}

}  // namespace

double GridDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_width();
}

void GridDensity::validate() const {
  if (n_cells <= 0 || static_cast<int>(values.size()) != n_cells) {
    throw InvalidInput("GridDensity: inconsistent cell count");
  }
  if (!(half_width > 0.0)) {
    throw InvalidInput("GridDensity: half_width must be > 0");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("GridDensity: values must be finite and >= 0");
    }
  }
  if (std::abs(mass() - 1.0) > 1e-12) {
    throw InvalidInput("GridDensity: mass must equal 1 within 1e-12, got " +
                       std::to_string(mass()));
  }
}

double GridDensity::interpolate(double x) const {
  const double h = cell_width();
  const double t = (x - center(0)) / h;
  if (t <= 0.0) return values.front();
  if (t >= n_cells - 1) return values.back();
  const int i = static_cast<int>(t);
  const double w = t - i;
  return (1.0 - w) * values[i] + w * values[i + 1];
}

GridDensity make_uniform(double half_width, int n_cells, double support) {
  if (support <= 0.0 || support > half_width) support = half_width;
  GridDensity mu;
  mu.half_width = half_width;
  mu.n_cells = n_cells;
  mu.values.assign(n_cells, 0.0);
  const double h = mu.cell_width();
  for (int i = 0; i < n_cells; ++i) {
    const double lo = std::max(-support, mu.center(i) - 0.5 * h);
    const double hi = std::min(support, mu.center(i) + 0.5 * h);
    if (hi > lo) mu.values[i] = (hi - lo) / h / (2.0 * support);
  }
  return from_values(std::move(mu.values), half_width);
}

GridDensity make_gaussian(double half_width, int n_cells, double mean,
                          double variance) {
  if (!(variance > 0.0)) throw InvalidInput("make_gaussian: variance <= 0");
  std::vector<double> v(n_cells);
  GridDensity geom;
  geom.half_width = half_width;
  geom.n_cells = n_cells;
  geom.values.assign(n_cells, 0.0);
  for (int i = 0; i < n_cells; ++i) {
    const double d = geom.center(i) - mean;
    v[i] = std::exp(-0.5 * d * d / variance);
  }
  return from_values(std::move(v), half_width);
}

GridDensity from_values(std::vector<double> values, double half_width,
                        double time) {
  GridDensity mu;
  mu.half_width = half_width;
  mu.n_cells = static_cast<int>(values.size());
  mu.values = std::move(values);
  mu.time = time;
  double s = 0.0;
  for (double v : mu.values) {
    if (!(v >= 0.0)) throw InvalidInput("from_values: negative cell value");
    s += v;
  }
  if (!(s > 0.0)) throw InvalidInput("from_values: zero total mass");
  const double scale = 1.0 / (s * mu.cell_width());
  for (double& v : mu.values) v *= scale;
  return mu;
}

double default_half_width(double a) { return 3.0 + 2.0 * std::max(1.0, a); }

double moment_k(const GridDensity& mu, int k) {
  if (k < 0) throw InvalidInput("moment_k: k must be >= 0");
  const double h = mu.cell_width();
  double s = 0.0;
  for (int i = 0; i < mu.n_cells; ++i) {
    s += std::pow(std::abs(mu.center(i)), k) * mu.values[i];
  }
  return s * h;
}

double signed_moment(const GridDensity& mu, int k) {
  if (k < 0) throw InvalidInput("signed_moment: k must be >= 0");
  const double h = mu.cell_width();
  double s = 0.0;
  for (int i = 0; i < mu.n_cells; ++i) {
    s += std::pow(mu.center(i), k) * mu.values[i];
  }
  return s * h;
}

double l1_distance(const GridDensity& f, const GridDensity& g) {
  if (f.n_cells != g.n_cells || f.half_width != g.half_width) {
    throw InvalidInput("l1_distance: incompatible grids");
  }
  double s = 0.0;
  for (int i = 0; i < f.n_cells; ++i) {
    s += std::abs(f.values[i] - g.values[i]);
  }
  return s * f.cell_width();
}

double mean_field_drift(double x, const GridDensity& mu,
                        const model::ModelParams& p) {
  mu.validate();
  const double m1 = signed_moment(mu, 1);
  double out;
  model::mean_field_drift(std::span<const double>(&x, 1),
                          std::span<const double>(&m1, 1), p,
                          std::span<double>(&out, 1));
  return out;
}

FokkerPlanckStepper::FokkerPlanckStepper(double half_width, int n_cells,
                                         const model::ModelParams& p)
    : params_(p),
      h_(2.0 * half_width / n_cells),
      n_(n_cells),
      dv_(n_cells - 1),
      exp_dv_(n_cells - 1),
      flux_(n_cells - 1) {
  if (n_cells < 2) throw InvalidInput("FokkerPlanckStepper: need >= 2 cells");
  // Face increments of the m1-independent part of the effective potential
  // V(x) - eps x^2; the mean-field tilt 2 eps m1 x adds the same shift
  // 2 eps m1 h across every face.
  for (int f = 0; f < n_cells - 1; ++f) {
    const double x0 = -half_width + (f + 0.5) * h_;
    const double x1 = x0 + h_;
    dv_[f] = params_.drift_enabled
                 ? effective_potential(x1, p.a, p.eps, 0.0) -
                       effective_potential(x0, p.a, p.eps, 0.0)
                 : 0.0;
    exp_dv_[f] = std::exp(dv_[f]);
  }
}

double FokkerPlanckStepper::max_face_speed(const GridDensity& mu) const {
  if (!params_.drift_enabled) return 0.0;
  const double shift = 2.0 * params_.eps * signed_moment(mu, 1) * h_;
  double zmax = 0.0;
  for (double d : dv_) zmax = std::max(zmax, std::abs(d + shift));
  return zmax / h_;
}

void FokkerPlanckStepper::step(GridDensity& mu, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("fp_step: dt must be > 0");
  double m1 = 0.0;
  double mass_before = 0.0;
  for (int i = 0; i < n_; ++i) {
    m1 += mu.center(i) * mu.values[i];
    mass_before += mu.values[i];
  }
  m1 *= h_;
  const double shift = params_.drift_enabled ? 2.0 * params_.eps * m1 * h_
                                             : 0.0;
  const double exp_shift = std::exp(shift);

  auto& v = mu.values;
  double zmax = 0.0;
  for (int f = 0; f < n_ - 1; ++f) {
    const double z = dv_[f] + shift;
    zmax = std::max(zmax, std::abs(z));
    double bp, bm;
    bernoulli_pair(z, exp_dv_[f] * exp_shift, bp, bm);
    flux_[f] = bm * v[f + 1] - bp * v[f];
  }

  const double speed = zmax / h_;
  const double bound =
      0.4 * (speed > 0.0 ? std::min(0.5 * h_ * h_, h_ / speed)
                         : 0.5 * h_ * h_);
  if (dt > bound * (1.0 + 1e-9)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "fp_step: dt=%.6g violates the stability bound; "
                  "admissible dt=%.6g",
                  dt, bound);
    throw CflViolation(buf, bound);
  }

  const double r = dt / (h_ * h_);
  double prev = 0.0;  // no-flux left boundary
  for (int i = 0; i < n_ - 1; ++i) {
    const double next = flux_[i];
    v[i] += r * (next - prev);
    prev = next;
  }
  v[n_ - 1] += r * (0.0 - prev);

  double mass_after = 0.0;
  int argmax = 0;
  for (int i = 0; i < n_; ++i) {
    if (v[i] < 0.0) {
      if (v[i] < -1e-12) {
        throw NumericalError(
            "fp_step: negative density beyond -1e-12 at cell " +
            std::to_string(i));
      }
      v[i] = 0.0;
    }
    mass_after += v[i];
    if (v[i] > v[argmax]) argmax = i;
  }
  // The fluxes telescope, so each update conserves mass to per-cell
  // rounding; the residual (~1e-16 relative) would otherwise random-walk
  // past the unit-mass invariant over millions of steps.  Pin the total to
  // its value at the first step by absorbing the residual into the largest
  // cell.
  if (!(target_sum_ > 0.0)) target_sum_ = mass_before;
  v[argmax] += target_sum_ - mass_after;
  mu.time += dt;
}

GridDensity fp_step(const GridDensity& mu, const model::ModelParams& p,
                    double dt) {
  mu.validate();
  GridDensity out = mu;
  FokkerPlanckStepper stepper(mu.half_width, mu.n_cells, p);
  stepper.step(out, dt);
  return out;
}

double cfl_dt_bound(const GridDensity& mu, const model::ModelParams& p) {
  const double h = mu.cell_width();
  FokkerPlanckStepper stepper(mu.half_width, mu.n_cells, p);
  const double speed = stepper.max_face_speed(mu);
  return 0.4 * (speed > 0.0 ? std::min(0.5 * h * h, h / speed)
                            : 0.5 * h * h);
}

double worst_case_dt_bound(double half_width, int n_cells,
                           const model::ModelParams& p) {
  const double h = 2.0 * half_width / n_cells;
  if (!p.drift_enabled) return 0.4 * 0.5 * h * h;
  double vmax = 0.0;
  for (int f = 0; f < n_cells - 1; ++f) {
    const double x0 = -half_width + (f + 0.5) * h;
    const double dv = effective_potential(x0 + h, p.a, p.eps, 0.0) -
                      effective_potential(x0, p.a, p.eps, 0.0);
    // |m1| <= half_width since all mass lives on the grid.
    vmax = std::max(vmax,
                    (std::abs(dv) + 2.0 * p.eps * half_width * h) / h);
  }
  return 0.4 * (vmax > 0.0 ? std::min(0.5 * h * h, h / vmax)
                           : 0.5 * h * h);
}

void evolve(const GridDensity& mu0, const model::ModelParams& p, double t_end,
            double dt, int record_every,
            const std::function<void(const GridDensity&)>& on_record) {
  mu0.validate();
  if (t_end < mu0.time) throw InvalidInput("evolve: t_end before mu0.time");
  if (record_every < 1) record_every = 1;
  GridDensity mu = mu0;
  on_record(mu);
  if (t_end <= mu0.time) return;
  const long long steps =
      static_cast<long long>(std::ceil((t_end - mu0.time) / dt - 1e-9));
  FokkerPlanckStepper stepper(mu.half_width, mu.n_cells, p);
  for (long long s = 1; s <= steps; ++s) {
    stepper.step(mu, dt);
    if (s % record_every == 0 || s == steps) on_record(mu);
  }
}

std::vector<GridDensity> evolve(const GridDensity& mu0,
                                const model::ModelParams& p, double t_end,
                                double dt, double record_interval) {
  const int every = std::max(1, static_cast<int>(std::llround(
                                    record_interval / dt)));
  std::vector<GridDensity> out;
  evolve(mu0, p, t_end, dt, every,
         [&out](const GridDensity& mu) { out.push_back(mu); });
  return out;
}

FixedPointResult stationary_fixed_point(const model::ModelParams& p,
                                        double damping, double tol,
                                        double half_width, int n_cells,
                                        int max_iter) {
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw InvalidInput("stationary_fixed_point: damping must be in (0,1]");
  }
  if (!(tol > 0.0)) throw InvalidInput("stationary_fixed_point: tol <= 0");
  const double L = half_width > 0.0 ? half_width : default_half_width(p.a);

  GridDensity mu;
  mu.half_width = L;
  mu.n_cells = n_cells;
  mu.values.assign(n_cells, 0.0);
  const double h = mu.cell_width();

  // m1-independent exponent -V(x) + eps x^2.
  std::vector<double> base(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    const double x = mu.center(i);
    base[i] = p.drift_enabled
                  ? -effective_potential(x, p.a, p.eps, 0.0)
                  : 0.0;
  }

  // Even initializer Z0^{-1} e^{-V}.
  {
    double emax = -1e300;
    std::vector<double> e(n_cells);
    for (int i = 0; i < n_cells; ++i) {
      const double x = mu.center(i);
      const double x2 = x * x;
      e[i] = p.drift_enabled ? -(x2 * x2 - p.a * x2) : 0.0;
      emax = std::max(emax, e[i]);
    }
    for (int i = 0; i < n_cells; ++i) mu.values[i] = std::exp(e[i] - emax);
    mu = from_values(std::move(mu.values), L);
  }

  FixedPointResult result;
  std::vector<double> img(n_cells);
  for (int iter = 1; iter <= max_iter; ++iter) {
    double m1 = 0.0;
    for (int i = 0; i < n_cells; ++i) m1 += mu.center(i) * mu.values[i];
    m1 *= h;
    double emax = -1e300;
    for (int i = 0; i < n_cells; ++i) {
      const double e = base[i] - (p.drift_enabled
                                      ? 2.0 * p.eps * m1 * mu.center(i)
                                      : 0.0);
      img[i] = e;
      emax = std::max(emax, e);
    }
    double z = 0.0;
    for (int i = 0; i < n_cells; ++i) {
      img[i] = std::exp(img[i] - emax);
      z += img[i];
    }
    const double inv = 1.0 / (z * h);
    double residual = 0.0;
    for (int i = 0; i < n_cells; ++i) {
      img[i] *= inv;
      residual += std::abs(img[i] - mu.values[i]);
    }
    residual *= h;
    result.residual_history.push_back(residual);
    result.iterations = iter;
    for (int i = 0; i < n_cells; ++i) {
      mu.values[i] = (1.0 - damping) * mu.values[i] + damping * img[i];
    }
    if (residual < tol) {
      result.converged = true;
      result.residual = residual;
      break;
    }
    result.residual = residual;
  }
  result.density = std::move(mu);
  return result;
}

GridSampler::GridSampler(const GridDensity& mu) {
  mu.validate();
  const int n = mu.n_cells;
  const double h = mu.cell_width();
  cdf_.resize(n + 1);
  faces_.resize(n + 1);
  cdf_[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    faces_[i] = -mu.half_width + i * h;
    cdf_[i + 1] = cdf_[i] + mu.values[i] * h;
  }
  faces_[n] = mu.half_width;
  const double total = cdf_[n];
  for (double& c : cdf_) c /= total;
  cdf_[n] = 1.0;
}

double GridSampler::operator()(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidInput("GridSampler: u must lie in (0,1)");
  }
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const int i = static_cast<int>(it - cdf_.begin()) - 1;
  const int j = std::min(i, static_cast<int>(cdf_.size()) - 2);
  const double lo = cdf_[j];
  const double hi = cdf_[j + 1];
  const double w = hi > lo ? (u - lo) / (hi - lo) : 0.5;
  return faces_[j] + w * (faces_[j + 1] - faces_[j]);
}

double free_energy(const GridDensity& mu, const model::ModelParams& p) {
  const double h = mu.cell_width();
  double entropy = 0.0;
  double confinement = 0.0;
  for (int i = 0; i < mu.n_cells; ++i) {
    const double v = mu.values[i];
    if (v > 1e-300) entropy += v * std::log(v);
    if (p.drift_enabled) {
      const double x = mu.center(i);
      const double x2 = x * x;
      confinement += (x2 * x2 - p.a * x2) * v;
    }
  }
  entropy *= h;
  confinement *= h;
  double interaction = 0.0;
  if (p.drift_enabled) {
    const double m1 = signed_moment(mu, 1);
    const double m2 = signed_moment(mu, 2);
    // (eps/2) int int W(x-y) mu mu with W(u) = -u^2 reduces to
    // -eps (m2 - m1^2).
    interaction = -p.eps * (m2 - m1 * m1);
  }
  return entropy + confinement + interaction;
}

}  // namespace chaoskit::limit

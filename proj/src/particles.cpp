#include "chaoskit/particles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chaoskit/rng.hpp"
#include "chaoskit/threads.hpp"

namespace chaoskit::particles {

void ParticleEnsemble::validate() const {
  if (n_particles < 1 || dim < 1) {
    throw InvalidInput("ParticleEnsemble: need n >= 1, d >= 1");
  }
  if (positions.size() !=
      static_cast<std::size_t>(n_particles) * static_cast<std::size_t>(dim)) {
    throw InvalidInput("ParticleEnsemble: positions size mismatch");
  }
  for (double x : positions) {
    if (!std::isfinite(x)) {
      throw InvalidInput("ParticleEnsemble: non-finite position");
    }
  }
}

ParticleEnsemble make_ensemble(std::vector<double> positions, int n, int d,
                               double time) {
  ParticleEnsemble e;
  e.positions = std::move(positions);
  e.n_particles = n;
  e.dim = d;
  e.time = time;
  e.validate();
  return e;
}

ParticleEnsemble sample_iid_1d(const limit::GridDensity& mu, int n,
                               std::uint64_t seed, std::uint64_t replica) {
  const limit::GridSampler sampler(mu);
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) {
    pos[i] = sampler(rng::uniform_at(seed, replica, 0, i, 0));
  }
  return make_ensemble(std::move(pos), n, 1);
}

CoupledEnsemble make_coupled(ParticleEnsemble x, ParticleEnsemble y,
                             CouplingMode mode, double merge_radius) {
  x.validate();
  y.validate();
  if (x.n_particles != y.n_particles || x.dim != y.dim) {
    throw InvalidInput("make_coupled: mismatched ensembles");
  }
  CoupledEnsemble c;
  c.x = std::move(x);
  c.y = std::move(y);
  c.met.assign(c.x.n_particles, 0);
  c.mode = mode;
  c.merge_radius = merge_radius;
  return c;
}

namespace {

void check_finite(std::span<const double> pos, int n, int d, double dt) {
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      if (!std::isfinite(pos[static_cast<std::size_t>(i) * d + k])) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "integration blow-up at particle %d; "
                      "retry with a smaller dt than %.3g",
                      i, dt);
        throw BlowUpError(buf, i);
      }
    }
  }
}

}  // namespace

ParticleEnsemble em_step(const ParticleEnsemble& ens,
                         const model::ModelParams& p, double dt,
                         std::span<const double> noise) {
  if (!(dt > 0.0)) throw InvalidInput("em_step: dt must be > 0");
  const int n = ens.n_particles;
  const int d = ens.dim;
  if (noise.size() != ens.positions.size()) {
    throw InvalidInput("em_step: noise size mismatch");
  }
  ParticleEnsemble out = ens;
  std::vector<double> drift(ens.positions.size());
  model::system_drift(ens.positions, n, d, p, drift);
  const double diff = std::sqrt(2.0 * dt);
  for (std::size_t k = 0; k < out.positions.size(); ++k) {
    out.positions[k] += dt * drift[k] + diff * noise[k];
  }
  check_finite(out.positions, n, d, dt);
  out.time += dt;
  return out;
}

std::string ObservableSpec::name() const {
  if (kind == Kind::energy) return "energy";
  return "moment" + std::to_string(k);
}

namespace {

double observe(const ObservableSpec& spec, const ParticleEnsemble& ens,
               const model::ModelParams& p) {
  if (spec.kind == ObservableSpec::Kind::energy) {
    return model::system_energy(ens.positions, ens.n_particles, ens.dim, p);
  }
  double s = 0.0;
  for (int i = 0; i < ens.n_particles; ++i) {
    double r2 = 0.0;
    for (double v : ens.particle(i)) r2 += v * v;
    s += std::pow(std::sqrt(r2), spec.k);
  }
  return s / ens.n_particles;
}

}  // namespace

std::vector<ObservationRow> simulate(
    const ParticleEnsemble& init, const model::ModelParams& p,
    const SimConfig& cfg, double t_end,
    const std::vector<ObservableSpec>& observables) {
  init.validate();
  if (t_end < init.time) throw InvalidInput("simulate: t_end < init.time");
  if (cfg.n_replicas < 1) throw InvalidInput("simulate: n_replicas < 1");
  const long long steps =
      static_cast<long long>(std::ceil((t_end - init.time) / cfg.dt - 1e-9));
  const long long record_every =
      std::max(1LL, std::llround(cfg.record_interval / cfg.dt));

  std::vector<std::vector<ObservationRow>> per_replica(cfg.n_replicas);
  parallel_for(cfg.n_replicas, [&](int r) {
    ParticleEnsemble ens = init;
    std::vector<double> noise(ens.positions.size());
    auto record = [&](const ParticleEnsemble& e) {
      for (const auto& spec : observables) {
        per_replica[r].push_back(
            {e.time, spec.name(), observe(spec, e, p), r});
      }
    };
    record(ens);
    for (long long s = 1; s <= steps; ++s) {
      fill_noise(cfg.seed, r, s, ens.n_particles, ens.dim, noise);
      ens = em_step(ens, p, cfg.dt, noise);
      if (s % record_every == 0 || s == steps) record(ens);
    }
  });

  std::vector<ObservationRow> rows;
  for (auto& block : per_replica) {
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

void coupled_step_inplace(CoupledEnsemble& c, std::span<const double> mu_mean,
                          const model::ModelParams& p, double dt,
                          std::span<const double> noise,
                          CoupledWorkspace& ws) {
  const int n = c.x.n_particles;
  const int d = c.x.dim;
  const std::size_t sz = c.x.positions.size();
  ws.drift.resize(sz);
  ws.x_new.resize(sz);
  ws.y_new.resize(sz);
  const double diff = std::sqrt(2.0 * dt);

  model::system_drift(c.x.positions, n, d, p, ws.drift);
  for (std::size_t k = 0; k < sz; ++k) {
    ws.x_new[k] = c.x.positions[k] + dt * ws.drift[k] + diff * noise[k];
  }

  std::vector<double> b(d), mirrored(d);
  for (int i = 0; i < n; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * d;
    if (c.met[i]) {
      for (int k = 0; k < d; ++k) ws.y_new[off + k] = ws.x_new[off + k];
      continue;
    }
    // Mirror direction from the current (pre-step) difference.
    double gap2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double e = c.x.positions[off + k] - c.y.positions[off + k];
      mirrored[k] = e;  // holds x - y for now
      gap2 += e * e;
    }
    if (c.mode == CouplingMode::reflection && gap2 == 0.0) {
      // Already met; treat as merged.
      c.met[i] = 1;
      for (int k = 0; k < d; ++k) ws.y_new[off + k] = ws.x_new[off + k];
      continue;
    }
    model::mean_field_drift(
        std::span<const double>(c.y.positions.data() + off, d), mu_mean, p,
        b);
    if (c.mode == CouplingMode::synchronous) {
      for (int k = 0; k < d; ++k) {
        ws.y_new[off + k] =
            c.y.positions[off + k] + dt * b[k] + diff * noise[off + k];
      }
    } else {
      const double inv = 1.0 / std::sqrt(gap2);
      double dot = 0.0;
      for (int k = 0; k < d; ++k) {
        mirrored[k] *= inv;
        dot += mirrored[k] * noise[off + k];
      }
      for (int k = 0; k < d; ++k) {
        const double xi = noise[off + k] - 2.0 * dot * mirrored[k];
        ws.y_new[off + k] = c.y.positions[off + k] + dt * b[k] + diff * xi;
      }
    }
    double new_gap2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double e = ws.x_new[off + k] - ws.y_new[off + k];
      new_gap2 += e * e;
    }
    if (new_gap2 <= c.merge_radius * c.merge_radius) {
      c.met[i] = 1;
      for (int k = 0; k < d; ++k) ws.y_new[off + k] = ws.x_new[off + k];
    }
  }

  check_finite(ws.x_new, n, d, dt);
  check_finite(ws.y_new, n, d, dt);
  c.x.positions.swap(ws.x_new);
  c.y.positions.swap(ws.y_new);
  c.x.time += dt;
  c.y.time += dt;
}

CoupledEnsemble coupled_step(const CoupledEnsemble& c,
                             const limit::GridDensity& mu,
                             const model::ModelParams& p, double dt,
                             std::span<const double> noise) {
  if (c.x.dim != 1) {
    throw InvalidInput("coupled_step: grid limit laws are one-dimensional");
  }
  mu.validate();
  const double m1 = limit::signed_moment(mu, 1);
  CoupledEnsemble out = c;
  CoupledWorkspace ws;
  coupled_step_inplace(out, std::span<const double>(&m1, 1), p, dt, noise,
                       ws);
  return out;
}

double coupling_gap(const CoupledEnsemble& c) {
  const int n = c.x.n_particles;
  double s = 0.0;
  for (std::size_t k = 0; k < c.x.positions.size(); ++k) {
    const double d = c.x.positions[k] - c.y.positions[k];
    s += d * d;
  }
  return s / n;
}

double marginal_moment(const std::vector<ParticleEnsemble>& replicas, int k) {
  if (k < 1) throw InvalidInput("marginal_moment: k must be >= 1");
  if (replicas.empty()) throw InvalidInput("marginal_moment: no replicas");
  double s = 0.0;
  long long count = 0;
  for (const auto& ens : replicas) {
    for (int i = 0; i < ens.n_particles; ++i) {
      double r2 = 0.0;
      for (double v : ens.particle(i)) r2 += v * v;
      s += std::pow(std::sqrt(r2), k);
      ++count;
    }
  }
  return s / count;
}

void fill_noise(std::uint64_t seed, std::uint64_t replica, std::uint64_t step,
                int n, int d, std::span<double> out) {
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      out[static_cast<std::size_t>(i) * d + k] =
          rng::normal_at(seed, replica, step, i, k);
    }
  }
}

}  // namespace chaoskit::particles

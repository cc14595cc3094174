#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaoskit/limit.hpp"
#include "chaoskit/model.hpp"

namespace chaoskit::particles {

struct ParticleEnsemble {
  std::vector<double> positions;  // n x d, row-major
  double time = 0.0;
  int n_particles = 0;
  int dim = 1;

  std::span<const double> particle(int i) const {
    return {positions.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  void validate() const;
};

ParticleEnsemble make_ensemble(std::vector<double> positions, int n, int d,
                               double time = 0.0);

/// n i.i.d. draws from a 1-D grid law; streams keyed by (seed, replica).
ParticleEnsemble sample_iid_1d(const limit::GridDensity& mu, int n,
                               std::uint64_t seed, std::uint64_t replica);

enum class Scheme { euler_maruyama };

struct SimConfig {
  double dt = 1e-3;
  std::uint64_t seed = 0;
  int n_replicas = 1;
  Scheme scheme = Scheme::euler_maruyama;
  double record_interval = 0.1;
};

enum class CouplingMode { synchronous, reflection };

struct CoupledEnsemble {
  ParticleEnsemble x;  // interacting system
  ParticleEnsemble y;  // nonlinear system driven by the limit law
  std::vector<std::uint8_t> met;  // whether the pair has merged
  CouplingMode mode = CouplingMode::synchronous;
  double merge_radius = 0.0;
};

CoupledEnsemble make_coupled(ParticleEnsemble x, ParticleEnsemble y,
                             CouplingMode mode, double merge_radius);

/// One Euler-Maruyama step with the supplied standard normals (n x d):
/// positions + dt b^N + sqrt(2 dt) noise.
ParticleEnsemble em_step(const ParticleEnsemble& ens,
                         const model::ModelParams& p, double dt,
                         std::span<const double> noise);

struct ObservableSpec {
  enum class Kind { moment, energy } kind = Kind::moment;
  int k = 2;  // moment order
  std::string name() const;
};

struct ObservationRow {
  double time;
  std::string name;
  double value;
  int replica;
};

// Runs n_replicas independent trajectories from the same initial ensemble,
// with per-(replica, particle, step) noise streams; records the requested
// observables at step 0, on the record_interval grid, and at the end.
// Output ordering and values are independent of the worker count.
std::vector<ObservationRow> simulate(
    const ParticleEnsemble& init, const model::ModelParams& p,
    const SimConfig& cfg, double t_end,
    const std::vector<ObservableSpec>& observables);

struct CoupledWorkspace {
  std::vector<double> drift;
  std::vector<double> x_new;
  std::vector<double> y_new;
};

// Advances the pair: X by the system drift, Y by the mean-field drift of
// the limit law, sharing the Brownian increment directly (synchronous) or
// through the mirror I - 2 e e^T of the current difference (reflection);
// pairs within merge_radius merge and Y copies X afterwards.  Drift is
// applied before noise.
void coupled_step_inplace(CoupledEnsemble& c, std::span<const double> mu_mean,
                          const model::ModelParams& p, double dt,
                          std::span<const double> noise,
                          CoupledWorkspace& ws);

/// Value form taking the limit law directly (1-D ensembles).
CoupledEnsemble coupled_step(const CoupledEnsemble& c,
                             const limit::GridDensity& mu,
                             const model::ModelParams& p, double dt,
                             std::span<const double> noise);

/// (1/N) sum_i |X_i - Y_i|^2 for one replica.
double coupling_gap(const CoupledEnsemble& c);

/// Monte Carlo of int |x_1|^k averaged over all particles and replicas.
double marginal_moment(const std::vector<ParticleEnsemble>& replicas, int k);

/// Fills out with standard normals for (replica, step), one per
/// (particle, component).
void fill_noise(std::uint64_t seed, std::uint64_t replica, std::uint64_t step,
                int n, int d, std::span<double> out);

}  // namespace chaoskit::particles

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "chaoskit/limit.hpp"
#include "chaoskit/particles.hpp"
#include "chaoskit/rng.hpp"

using namespace chaoskit;
using model::ModelParams;
using particles::ParticleEnsemble;

TEST_CASE("inverse normal CDF round trip against erfc") {
  for (double u : {1e-9, 1e-4, 0.02, 0.31, 0.5, 0.77, 0.999, 1 - 1e-9}) {
    const double x = rng::inverse_normal_cdf(u);
    const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(back == doctest::Approx(u).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rng::inverse_normal_cdf(0.0), InvalidInput);
  CHECK_THROWS_AS(rng::inverse_normal_cdf(1.0), InvalidInput);
}

TEST_CASE("counter stream normals have the right first moments") {
  double s1 = 0.0, s2 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double z = rng::normal_at(123, 0, 1, i, 0);
    s1 += z;
    s2 += z * z;
  }
  s1 /= n;
  s2 /= n;
  // 4 sigma bands.
  CHECK(std::abs(s1) <= 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(s2 - 1.0) <=
        4.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("em_step deterministic examples") {
  ModelParams p(1.0, 0.1, 1);
  std::vector<double> zeros = {0.0, 0.0, 0.0};
  auto ens = particles::make_ensemble(zeros, 3, 1);
  std::vector<double> no_noise(3, 0.0);
  const auto out = particles::em_step(ens, p, 0.01, no_noise);
  for (double v : out.positions) CHECK(v == 0.0);
  CHECK(out.time == doctest::Approx(0.01));

  auto one = particles::make_ensemble({1.0}, 1, 1);
  std::vector<double> nn = {0.0};
  const auto stepped = particles::em_step(one, p, 0.01, nn);
  CHECK(stepped.positions[0] == doctest::Approx(0.98).epsilon(1e-14));
}

TEST_CASE("em_step flags blow-ups with the particle index") {
  ModelParams p(1.0, 0.0, 1);
  auto ens = particles::make_ensemble({0.0, 1e200}, 2, 1);
  std::vector<double> noise = {0.0, 0.0};
  try {
    particles::em_step(ens, p, 1.0, noise);
    FAIL("expected BlowUpError");
  } catch (const BlowUpError& e) {
    CHECK(e.particle == 1);
    CHECK(std::string(e.what()).find("smaller dt") != std::string::npos);
  }
}

TEST_CASE("free diffusion variance grows by 2 dt per step") {
  ModelParams p(1.0, 0.0, 1);
  p.drift_enabled = false;
  const int replicas = 10000;
  const double dt = 1e-3;
  const int steps = 30;
  double s2 = 0.0;
  for (int r = 0; r < replicas; ++r) {
    double x = 0.0;
    for (int s = 1; s <= steps; ++s) {
      x += std::sqrt(2.0 * dt) * rng::normal_at(7, r, s, 0, 0);
    }
    s2 += x * x;
  }
  const double var = s2 / replicas;
  const double expected = 2.0 * dt * steps;
  // Var of the variance estimator: 2 sigma^4 / n; 3 sigma band.
  const double band = 3.0 * expected * std::sqrt(2.0 / replicas);
  CHECK(std::abs(var - expected) <= band);

  // The same growth through em_step itself.
  auto ens = particles::make_ensemble(std::vector<double>(replicas, 0.0),
                                      replicas, 1);
  std::vector<double> noise(replicas);
  for (int s = 1; s <= steps; ++s) {
    particles::fill_noise(7, 0, 1000 + s, replicas, 1, noise);
    ens = particles::em_step(ens, p, dt, noise);
  }
  double v = 0.0;
  for (double x : ens.positions) v += x * x;
  v /= replicas;
  CHECK(std::abs(v - expected) <= band);
}

TEST_CASE("simulate is deterministic and worker-count independent") {
  ModelParams p(0.5, 0.05, 1);
  auto init = particles::make_ensemble({0.3, -0.2, 0.8, 0.0}, 4, 1);
  particles::SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.seed = 2024;
  cfg.n_replicas = 6;
  cfg.record_interval = 0.02;
  std::vector<particles::ObservableSpec> obs = {
      {particles::ObservableSpec::Kind::moment, 2},
      {particles::ObservableSpec::Kind::energy, 0}};

  setenv("CHAOSKIT_THREADS", "1", 1);
  const auto rows1 = particles::simulate(init, p, cfg, 0.1, obs);
  setenv("CHAOSKIT_THREADS", "3", 1);
  const auto rows2 = particles::simulate(init, p, cfg, 0.1, obs);
  unsetenv("CHAOSKIT_THREADS");

  REQUIRE(rows1.size() == rows2.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].time == rows2[i].time);
    CHECK(rows1[i].name == rows2[i].name);
    CHECK(rows1[i].value == rows2[i].value);  // bit-identical
    CHECK(rows1[i].replica == rows2[i].replica);
  }
}

TEST_CASE("particle-index permutation permutes trajectories exactly") {
  ModelParams p(0.7, 0.1, 2);
  const int n = 3, d = 2, steps = 25;
  std::vector<double> pos = {0.1, -0.4, 0.9, 0.2, -0.7, 0.5};
  // Permutation (0 1 2) -> (2 0 1).
  const std::vector<int> perm = {2, 0, 1};
  std::vector<double> pos_p(n * d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) pos_p[perm[i] * d + k] = pos[i * d + k];
  }
  auto a = particles::make_ensemble(pos, n, d);
  auto b = particles::make_ensemble(pos_p, n, d);
  std::vector<double> noise_a(n * d), noise_b(n * d);
  for (int s = 1; s <= steps; ++s) {
    particles::fill_noise(99, 0, s, n, d, noise_a);
    // Matching permutation of the noise streams.
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) {
        noise_b[perm[i] * d + k] = noise_a[i * d + k];
      }
    }
    a = particles::em_step(a, p, 1e-3, noise_a);
    b = particles::em_step(b, p, 1e-3, noise_b);
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      CHECK(b.positions[perm[i] * d + k] == a.positions[i * d + k]);
    }
  }
}

TEST_CASE("synchronous coupling keeps equal starts equal when eps = 0") {
  ModelParams p(0.8, 0.0, 1);
  limit::GridDensity mu = limit::make_gaussian(4.0, 256, 0.0, 0.5);
  auto x0 = particles::sample_iid_1d(mu, 8, 5, 0);
  auto c = particles::make_coupled(x0, x0,
                                   particles::CouplingMode::synchronous, 0.0);
  std::vector<double> noise(8);
  for (int s = 1; s <= 200; ++s) {
    particles::fill_noise(5, 0, s, 8, 1, noise);
    c = particles::coupled_step(c, mu, p, 1e-3, noise);
  }
  CHECK(particles::coupling_gap(c) == 0.0);
}

TEST_CASE("reflection coupling mirrors the increment in 1-D") {
  ModelParams p(1.0, 0.0, 1);
  p.drift_enabled = false;  // isolate the noise handling
  limit::GridDensity mu = limit::make_gaussian(4.0, 256, 0.0, 0.5);
  auto x = particles::make_ensemble({1.0}, 1, 1);
  auto y = particles::make_ensemble({0.0}, 1, 1);
  auto c = particles::make_coupled(std::move(x), std::move(y),
                                   particles::CouplingMode::reflection, 1e-9);
  const double dt = 1e-3;
  std::vector<double> noise = {0.1};
  const auto out = particles::coupled_step(c, mu, p, dt, noise);
  const double root = std::sqrt(2.0 * dt);
  CHECK(out.x.positions[0] == doctest::Approx(1.0 + root * 0.1));
  CHECK(out.y.positions[0] == doctest::Approx(0.0 - root * 0.1));
  CHECK(!out.met[0]);

  // Mirror is an isometry: |(I - 2 e e^T) u| = |u|.
  for (int t = 0; t < 100; ++t) {
    std::vector<double> u(3), e(3);
    double norm_e = 0.0;
    for (int k = 0; k < 3; ++k) {
      u[k] = rng::normal_at(31, t, 0, 0, k);
      e[k] = rng::normal_at(31, t, 1, 0, k);
      norm_e += e[k] * e[k];
    }
    norm_e = std::sqrt(norm_e);
    double dot = 0.0;
    for (int k = 0; k < 3; ++k) {
      e[k] /= norm_e;
      dot += e[k] * u[k];
    }
    double nu2 = 0.0, nm2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double m = u[k] - 2.0 * dot * e[k];
      nu2 += u[k] * u[k];
      nm2 += m * m;
    }
    CHECK(std::sqrt(nm2) == doctest::Approx(std::sqrt(nu2)).epsilon(1e-12));
  }
}

TEST_CASE("merged pairs stay identical forever") {
  ModelParams p(0.5, 0.02, 1);
  limit::GridDensity mu = limit::make_gaussian(4.0, 256, 0.0, 0.5);
  auto x0 = particles::sample_iid_1d(mu, 4, 17, 0);
  // Huge merge radius: everything merges on the first step.
  auto c = particles::make_coupled(x0, x0,
                                   particles::CouplingMode::reflection, 10.0);
  std::vector<double> noise(4);
  for (int s = 1; s <= 50; ++s) {
    particles::fill_noise(17, 0, s, 4, 1, noise);
    c = particles::coupled_step(c, mu, p, 1e-3, noise);
    for (int i = 0; i < 4; ++i) CHECK(c.met[i] == 1);
    CHECK(particles::coupling_gap(c) == 0.0);
  }
}

TEST_CASE("zero-distance unmerged reflection pairs are treated as met") {
  ModelParams p(0.5, 0.0, 1);
  limit::GridDensity mu = limit::make_gaussian(4.0, 256, 0.0, 0.5);
  auto x0 = particles::make_ensemble({0.25}, 1, 1);
  auto c = particles::make_coupled(x0, x0,
                                   particles::CouplingMode::reflection, 0.0);
  std::vector<double> noise = {0.3};
  const auto out = particles::coupled_step(c, mu, p, 1e-3, noise);
  CHECK(out.met[0] == 1);
  CHECK(out.x.positions[0] == out.y.positions[0]);
}

TEST_CASE("marginal moment examples") {
  std::vector<ParticleEnsemble> replicas;
  replicas.push_back(particles::make_ensemble({0.0, 0.0}, 2, 1));
  CHECK(particles::marginal_moment(replicas, 2) == 0.0);
  replicas.clear();
  replicas.push_back(particles::make_ensemble({1.0, -1.0}, 2, 1));
  CHECK(particles::marginal_moment(replicas, 2) == doctest::Approx(1.0));
}

TEST_CASE("simulate: bounded moments and stabilized energy") {
  ModelParams p(0.5, 0.05, 1);
  const auto fp = limit::stationary_fixed_point(p, 0.5, 1e-10, 0.0, 512);
  REQUIRE(fp.converged);
  const auto init = particles::sample_iid_1d(fp.density, 16, 314, 0);
  particles::SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.seed = 314;
  cfg.n_replicas = 8;
  cfg.record_interval = 0.25;
  const auto rows = particles::simulate(
      init, p, cfg, 8.0,
      {{particles::ObservableSpec::Kind::moment, 2},
       {particles::ObservableSpec::Kind::energy, 0}});

  double mid_energy = 0.0, late_energy = 0.0;
  int mid_n = 0, late_n = 0;
  const double m2_cap =
      model::stationary_m2_bound(p.a, p.eps, 1) + 0.8;  // 5 sigma headroom
  for (const auto& r : rows) {
    if (r.name == "moment2") {
      CHECK(r.value <= m2_cap);
    } else if (r.name == "energy") {
      if (r.time >= 2.0 && r.time < 4.0) {
        mid_energy += r.value;
        ++mid_n;
      } else if (r.time >= 4.0) {
        late_energy += r.value;
        ++late_n;
      }
    }
  }
  REQUIRE(mid_n > 0);
  REQUIRE(late_n > 0);
  mid_energy /= mid_n;
  late_energy /= late_n;
  // Started at stationarity, the ensemble energy has no trend.
  CHECK(std::abs(late_energy - mid_energy) <=
        0.15 * (std::abs(late_energy) + 1.0));
}

TEST_CASE("long-run statistics match the Gibbs law") {
  // Single particle (the self interaction vanishes), dt = 1e-3.
  ModelParams p(1.0, 0.0, 1);
  const auto fp = limit::stationary_fixed_point(p, 1.0, 1e-12, 0.0, 2048);
  REQUIRE(fp.converged);

  const int replicas = 256;
  const int steps = 50000;
  const int sample_every = 50;
  const double dt = 1e-3;
  const double lo = -2.5, hi = 2.5;
  const int bins = 25;
  std::vector<double> hist(bins, 0.0);
  long long count = 0;
  double sum_sq = 0.0;
  limit::GridSampler sampler(fp.density);
  for (int r = 0; r < replicas; ++r) {
    double x = sampler(rng::uniform_at(77, r, 0, 0, 0));
    for (int s = 1; s <= steps; ++s) {
      const double drift = -(4.0 * x * x - 2.0 * p.a) * x;
      x += dt * drift +
           std::sqrt(2.0 * dt) * rng::normal_at(77, r, s, 0, 0);
      if (s % sample_every == 0) {
        ++count;
        sum_sq += x * x;
        if (x > lo && x < hi) {
          const int b = std::min(
              bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
          hist[b] += 1.0;
        }
      }
    }
  }
  for (double& v : hist) v /= count;

  std::vector<double> target(bins, 0.0);
  const double h = fp.density.cell_width();
  for (int i = 0; i < fp.density.n_cells; ++i) {
    const double x = fp.density.center(i);
    if (x > lo && x < hi) {
      const int b = std::min(bins - 1,
                             static_cast<int>((x - lo) / (hi - lo) * bins));
      target[b] += fp.density.values[i] * h;
    }
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += std::abs(hist[b] - target[b]);
  CHECK(tv / 2.0 <= 0.02);

  // Stationary second-moment bound with Monte Carlo headroom.
  CHECK(sum_sq / count <=
        model::stationary_m2_bound(p.a, p.eps, 1) + 0.05);
}

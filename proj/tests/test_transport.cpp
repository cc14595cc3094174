#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "chaoskit/limit.hpp"
#include "chaoskit/rng.hpp"
#include "chaoskit/transport.hpp"

using namespace chaoskit;
using transport::DiscreteMeasure;

namespace {

DiscreteMeasure random_cloud(int atoms, int dim, std::uint64_t tag,
                             bool equal_weights) {
  DiscreteMeasure m;
  m.dim = dim;
  m.points.resize(static_cast<std::size_t>(atoms) * dim);
  m.weights.resize(atoms);
  double total = 0.0;
  for (int a = 0; a < atoms; ++a) {
    for (int c = 0; c < dim; ++c) {
      m.points[static_cast<std::size_t>(a) * dim + c] =
          4.0 * rng::uniform_at(11, tag, 0, a, c) - 2.0;
    }
    m.weights[a] =
        equal_weights ? 1.0 / atoms
                      : 0.05 + rng::uniform_at(11, tag, 1, a, 0);
    total += m.weights[a];
  }
  if (!equal_weights) {
    for (double& w : m.weights) w /= total;
  }
  return m;
}

// Exhaustive assignment minimum for equal-weight clouds of the same size.
double brute_force_w2(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const int n = mu.n_atoms();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (int c = 0; c < mu.dim; ++c) {
        const double d = mu.points[i * mu.dim + c] -
                         nu.points[perm[i] * nu.dim + c];
        d2 += d * d;
      }
      cost += d2;
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

}  // namespace

TEST_CASE("w2_1d closed forms") {
  limit::GridDensity mu = limit::make_gaussian(4.0, 512, 0.0, 0.5);
  CHECK(transport::w2_1d(mu, mu) == doctest::Approx(0.0).epsilon(1e-14));

  // Translation by a whole number of cells costs exactly c^2 (compact
  // support, so the rotation moves only zero cells).
  limit::GridDensity boxcar = limit::make_uniform(4.0, 512, 1.0);
  const double h = boxcar.cell_width();
  const int cells = 32;
  const double c = cells * h;
  limit::GridDensity shifted = boxcar;
  std::rotate(shifted.values.rbegin(), shifted.values.rbegin() + cells,
              shifted.values.rend());
  shifted = limit::from_values(std::move(shifted.values), boxcar.half_width);
  CHECK(transport::w2_1d(boxcar, shifted) ==
        doctest::Approx(c * c).epsilon(1e-10));

  // Two-atom pair: monotone matching gives 1/2*4 + 1/2*4.
  const auto a = transport::make_discrete_1d({0.0, 1.0});
  const auto b = transport::make_discrete_1d({2.0, 3.0});
  CHECK(transport::w2_1d(a, b) == doctest::Approx(4.0).epsilon(1e-14));

  std::vector<double> xs = {-1.0, 0.0, 2.0};
  std::vector<double> ys = {-0.5, 0.25, 2.5};
  CHECK(transport::w2_1d_sorted(xs, ys) ==
        doctest::Approx(((0.5 * 0.5) + (0.25 * 0.25) + (0.5 * 0.5)) / 3.0));
}

TEST_CASE("discrete translation invariance of the quantile cost") {
  for (int t = 0; t < 20; ++t) {
    const auto m = random_cloud(6, 1, 100 + t, false);
    DiscreteMeasure shifted = m;
    const double c = 0.7;
    for (double& x : shifted.points) x += c;
    CHECK(transport::w2_1d(m, shifted) ==
          doctest::Approx(c * c).epsilon(1e-10));
  }
}

TEST_CASE("exact LP agrees with the 1-D quantile closed form") {
  for (int t = 0; t < 10; ++t) {
    const auto mu = random_cloud(3 + t % 5, 1, 200 + t, false);
    const auto nu = random_cloud(4 + (t * 3) % 4, 1, 300 + t, false);
    const auto lp = transport::w2_exact_discrete(mu, nu);
    CHECK(lp.cost == doctest::Approx(transport::w2_1d(mu, nu))
                         .epsilon(1e-10));
  }
}

TEST_CASE("exact LP matches brute force on small equal-weight clouds") {
  for (int t = 0; t < 10; ++t) {
    const int n = 3 + t % 4;  // up to 6 atoms
    const int d = 1 + t % 2;
    const auto mu = random_cloud(n, d, 400 + t, true);
    const auto nu = random_cloud(n, d, 500 + t, true);
    const auto lp = transport::w2_exact_discrete(mu, nu);
    CHECK(lp.cost == doctest::Approx(brute_force_w2(mu, nu)).epsilon(1e-12));
  }
}

TEST_CASE("transportation solver: plan marginals and metric axioms") {
  for (int t = 0; t < 6; ++t) {
    const auto mu = random_cloud(5 + t, 2, 600 + t, false);
    const auto nu = random_cloud(7 - t % 3, 2, 700 + t, false);
    const auto r = transport::w2_exact_discrete(mu, nu);
    for (int i = 0; i < r.n; ++i) {
      double row = 0.0;
      for (int j = 0; j < r.m; ++j) row += r.plan_at(i, j);
      CHECK(row == doctest::Approx(mu.weights[i]).epsilon(1e-10));
    }
    for (int j = 0; j < r.m; ++j) {
      double col = 0.0;
      for (int i = 0; i < r.n; ++i) col += r.plan_at(i, j);
      CHECK(col == doctest::Approx(nu.weights[j]).epsilon(1e-10));
    }
    // Symmetry.
    const auto rev = transport::w2_exact_discrete(nu, mu);
    CHECK(r.cost == doctest::Approx(rev.cost).epsilon(1e-10));
    // Identity of indiscernibles.
    CHECK(transport::w2_exact_discrete(mu, mu).cost ==
          doctest::Approx(0.0).epsilon(1e-14));
  }
  // Triangle inequality for sqrt(cost) on sampled triples.
  for (int t = 0; t < 5; ++t) {
    const auto a = random_cloud(5, 2, 800 + t, false);
    const auto b = random_cloud(6, 2, 900 + t, false);
    const auto c = random_cloud(4, 2, 1000 + t, false);
    const double ab = std::sqrt(transport::w2_exact_discrete(a, b).cost);
    const double bc = std::sqrt(transport::w2_exact_discrete(b, c).cost);
    const double ac = std::sqrt(transport::w2_exact_discrete(a, c).cost);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("plan cap is enforced") {
  const auto mu = random_cloud(40, 1, 1, true);
  const auto nu = random_cloud(40, 1, 2, true);
  CHECK_THROWS_AS(transport::w2_exact_discrete(mu, nu, 100), SizeCapError);
}

TEST_CASE("brenier map identities") {
  limit::GridDensity nu = limit::make_gaussian(4.0, 1024, 0.0, 0.5);
  const auto id_map = transport::brenier_map_1d(nu, nu);
  for (int i = 0; i < nu.n_cells; i += 37) {
    if (nu.values[i] < 1e-6) continue;
    CHECK(id_map.values[i] == doctest::Approx(id_map.grid[i]).epsilon(1e-8));
    CHECK(id_map.derivative[i] == doctest::Approx(1.0).epsilon(1e-7));
  }

  // Whole-cell shift of a boxcar: T(x) = x + c with unit derivative on the
  // support (cell-aligned, so the construction is exact).
  limit::GridDensity box = limit::make_uniform(4.0, 512, 1.0);
  const double h = box.cell_width();
  const double c = 24 * h;
  limit::GridDensity moved = box;
  std::rotate(moved.values.rbegin(), moved.values.rbegin() + 24,
              moved.values.rend());
  moved = limit::from_values(std::move(moved.values), box.half_width);
  const auto shift_map = transport::brenier_map_1d(box, moved);
  for (int i = 0; i < box.n_cells; ++i) {
    if (box.values[i] < 0.4) continue;  // interior of the support
    CHECK(shift_map.values[i] ==
          doctest::Approx(shift_map.grid[i] + c).epsilon(1e-10));
    CHECK(shift_map.derivative[i] == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("brenier pushforward reproduces the target (TV audit)") {
  limit::GridDensity nu = limit::make_gaussian(4.0, 512, 0.0, 0.6);
  // A tilted target.
  std::vector<double> vals(nu.n_cells);
  for (int i = 0; i < nu.n_cells; ++i) {
    vals[i] = nu.values[i] * std::exp(0.8 * nu.center(i));
  }
  limit::GridDensity mu = limit::from_values(std::move(vals), 4.0);
  const auto map = transport::brenier_map_1d(nu, mu);

  const int bins = 40;
  const double lo = -4.0, hi = 4.0;
  std::vector<double> hist(bins, 0.0), target(bins, 0.0);
  const int samples = 200000;
  limit::GridSampler sampler(nu);
  for (int s = 0; s < samples; ++s) {
    const double x = sampler(rng::uniform_at(13, 0, 0, s, 0));
    const double y = map.apply(x);
    const int b = std::clamp(
        static_cast<int>((y - lo) / (hi - lo) * bins), 0, bins - 1);
    hist[b] += 1.0 / samples;
  }
  const double h = mu.cell_width();
  for (int i = 0; i < mu.n_cells; ++i) {
    const int b = std::clamp(
        static_cast<int>((mu.center(i) - lo) / (hi - lo) * bins), 0,
        bins - 1);
    target[b] += mu.values[i] * h;
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += std::abs(hist[b] - target[b]);
  CHECK(tv / 2.0 <= 0.02);
}

TEST_CASE("wj functional: zero at equal measures, dilation heat term") {
  model::ModelParams p(0.1, 0.01, 1);
  limit::GridDensity nu = limit::make_gaussian(8.0, 2048, 0.0, 0.25);
  const auto zero = transport::wj_functional_1d(nu, nu, p);
  CHECK(zero.heat_term == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(zero.drift_term == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(zero.j == doctest::Approx(0.0).epsilon(1e-9));

  // mu = pushforward of nu under x -> 2x: T' = 2, heat = 2 + 1/2 - 2.
  model::ModelParams free_p(1.0, 0.0, 1);
  free_p.drift_enabled = false;
  limit::GridDensity mu = limit::make_gaussian(8.0, 2048, 0.0, 1.0);
  const auto res = transport::wj_functional_1d(mu, nu, free_p);
  CHECK(res.heat_term == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(res.drift_term == 0.0);
  CHECK(res.min_heat_integrand >= -1e-12);
}

TEST_CASE("heat integrand is pointwise nonnegative on random pairs") {
  for (int t = 0; t < 5; ++t) {
    limit::GridDensity nu =
        limit::make_gaussian(5.0, 512, 0.2 * t - 0.4, 0.3 + 0.1 * t);
    limit::GridDensity mu =
        limit::make_gaussian(5.0, 512, 0.3 - 0.2 * t, 0.8 - 0.05 * t);
    model::ModelParams p(0.5, 0.1, 1);
    const auto wj = transport::wj_functional_1d(mu, nu, p);
    CHECK(wj.min_heat_integrand >= -1e-12);
    CHECK(wj.heat_term >= -1e-12);
  }
}

TEST_CASE("fluctuation functional: closed form and Monte Carlo") {
  limit::GridDensity mu = limit::make_uniform(3.0, 1024, std::sqrt(3.0));

  model::ModelParams p0(1.0, 0.0, 1);
  const auto zero = transport::f_n_functional(mu, p0, 4, 1000, 5);
  CHECK(zero.closed_form == 0.0);
  CHECK(zero.mc_estimate == 0.0);

  model::ModelParams p(1.0, 0.1, 1);
  // Var(uniform on [-sqrt(3), sqrt(3)]) = 1, N=2: 4 eps^2 (1/2) Var = 0.02.
  const double var = limit::signed_moment(mu, 2);
  CHECK(transport::f_n_closed_form(mu, p, 2) ==
        doctest::Approx(4.0 * 0.01 * 0.5 * var).epsilon(1e-13));
  CHECK(transport::f_n_closed_form(mu, p, 2) ==
        doctest::Approx(0.02).epsilon(2e-4));

  for (int n : {2, 8, 64}) {
    const auto r = transport::f_n_functional(mu, p, n, 200000, 77);
    CHECK(std::abs(r.mc_estimate - r.closed_form) <= 3.0 * r.mc_std_error);
    CHECK(r.mc_std_error > 0.0);
  }

  const auto cross = transport::f_n_cross_term(mu, p, 200000, 99);
  CHECK(std::abs(cross.estimate) <= 3.0 * cross.std_error);
}

TEST_CASE("displacement diagnostic sits at 4 eps^2 (N-1)/N m2") {
  limit::GridDensity mu = limit::make_uniform(3.0, 1024, std::sqrt(3.0));
  model::ModelParams p(1.0, 0.1, 1);
  const double m2 = limit::signed_moment(mu, 2);
  for (int n : {2, 8}) {
    const auto d = transport::f_n_displacement(mu, p, n, 200000, 31);
    const double expected = 4.0 * p.eps * p.eps * (n - 1.0) / n * m2;
    CHECK(std::abs(d.mc_estimate - expected) <= 3.0 * d.mc_std_error);
    CHECK(d.eps2_m2 == doctest::Approx(p.eps * p.eps * m2));
    CHECK(d.four_eps2_m2 == doctest::Approx(4.0 * p.eps * p.eps * m2));
  }
}

TEST_CASE("tensor power and tensorization identity") {
  const auto delta0 = transport::make_discrete_1d({0.0});
  const auto deltac = transport::make_discrete_1d({1.5});
  const auto single = transport::tensorization_audit(delta0, deltac, 3);
  CHECK(single.lhs == doctest::Approx(3.0 * 2.25).epsilon(1e-12));
  CHECK(single.rhs == doctest::Approx(3.0 * 2.25).epsilon(1e-12));

  for (int t = 0; t < 6; ++t) {
    const auto mu = random_cloud(2 + t % 2, 1, 2000 + t, false);
    const auto nu = random_cloud(2 + (t + 1) % 2, 1, 2100 + t, false);
    const auto one = transport::tensorization_audit(mu, nu, 1);
    CHECK(std::abs(one.lhs - one.rhs) <= 1e-12);
    const auto audit = transport::tensorization_audit(mu, nu, 2);
    CHECK(std::abs(audit.lhs - audit.rhs) <= 1e-9);
  }
}

TEST_CASE("block symmetrization and marginals") {
  // 1/2 delta_(0,1) + 1/2 delta_(1,0) is already symmetric; delta_(0,0)
  // trivially so.
  DiscreteMeasure g;
  g.dim = 2;
  g.points = {0.0, 1.0, 1.0, 0.0};
  g.weights = {0.5, 0.5};
  CHECK(transport::is_block_symmetric(g, 1, 2));
  const auto f = transport::make_discrete_1d({0.0});
  DiscreteMeasure f2 = transport::tensor_power(f, 2);
  const auto audit = transport::marginal_superadditivity_audit(g, f2, 1, 2, 1);
  CHECK(audit.lhs == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(audit.rhs == doctest::Approx(0.5).epsilon(1e-12));

  // Identical measures: zero at every level.
  const auto same = transport::marginal_superadditivity_audit(g, g, 1, 2, 1);
  CHECK(same.lhs == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.rhs == doctest::Approx(0.0).epsilon(1e-12));

  // Asymmetric inputs are rejected.
  DiscreteMeasure bad;
  bad.dim = 2;
  bad.points = {0.0, 1.0};
  bad.weights = {1.0};
  CHECK(!transport::is_block_symmetric(bad, 1, 2));
  CHECK_THROWS_AS(transport::marginal_superadditivity_audit(bad, f2, 1, 2, 1),
                  InvalidInput);
  // Symmetrization fixes them.
  const auto fixed = transport::symmetrize_blocks(bad, 1, 2);
  CHECK(transport::is_block_symmetric(fixed, 1, 2));
  CHECK(fixed.n_atoms() == 2);
}

TEST_CASE("marginal superadditivity on random symmetrized pairs") {
  for (int t = 0; t < 20; ++t) {
    const std::uint64_t k = rng::stream_key(21, t, 0, 0, 0);
    const int n = 2 + static_cast<int>(k % 2);  // N in {2,3}
    auto g = transport::symmetrize_blocks(random_cloud(3, n, 3000 + t, false),
                                          1, n);
    auto f = transport::symmetrize_blocks(random_cloud(4, n, 3100 + t, false),
                                          1, n);
    const double rhs =
        transport::w2_exact_discrete(g, f).cost / n;
    for (int ell = 1; ell <= n; ++ell) {
      const auto audit =
          transport::marginal_superadditivity_audit(g, f, 1, n, ell);
      CHECK(audit.lhs <= audit.rhs + 1e-9);
      CHECK(audit.rhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("discrete measure validation") {
  DiscreteMeasure m;
  m.dim = 1;
  m.points = {0.0, 1.0};
  m.weights = {0.6, 0.6};
  CHECK_THROWS_AS(m.validate(), InvalidInput);
  m.weights = {0.5, 0.5};
  CHECK_NOTHROW(m.validate());
  m.points[0] = std::nan("");
  CHECK_THROWS_AS(m.validate(), InvalidInput);
}

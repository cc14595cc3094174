#include "chaoskit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "chaoskit/io.hpp"
#include "chaoskit/linalg.hpp"
#include "chaoskit/rng.hpp"
#include "chaoskit/svg.hpp"
#include "chaoskit/threads.hpp"
#include "chaoskit/transport.hpp"

namespace chaoskit::experiments {

using nlohmann::json;

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::moment_decay: return "moment_decay";
    case Experiment::chaos_scaling: return "chaos_scaling";
    case Experiment::uniform_in_time: return "uniform_in_time";
    case Experiment::wj_audit: return "wj_audit";
    case Experiment::prop23_audit: return "prop23_audit";
    case Experiment::constants_frontier: return "constants_frontier";
    case Experiment::trace_audit: return "trace_audit";
    case Experiment::superadditivity_audit: return "superadditivity_audit";
  }
  throw InvalidInput("unknown experiment enum");
}

Experiment experiment_from_name(const std::string& name) {
  for (Experiment e :
       {Experiment::moment_decay, Experiment::chaos_scaling,
        Experiment::uniform_in_time, Experiment::wj_audit,
        Experiment::prop23_audit, Experiment::constants_frontier,
        Experiment::trace_audit, Experiment::superadditivity_audit}) {
    if (experiment_name(e) == name) return e;
  }
  throw config::ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (!(eta > 0.0)) throw InvalidInput("config: eta must be > 0");
  if (!(sim.dt > 0.0)) throw InvalidInput("config: dt must be > 0");
  if (sim.n_replicas < 1) throw InvalidInput("config: n_replicas < 1");
  if (!(sim.record_interval > 0.0)) {
    throw InvalidInput("config: record_interval must be > 0");
  }
  if (grid.n_cells < 16) throw InvalidInput("config: n_cells < 16");
  if (!(t_end >= 0.0)) throw InvalidInput("config: t_end < 0");
  if (n_values.empty()) throw InvalidInput("config: empty n_values");
  for (int n : n_values) {
    if (n < 1) throw InvalidInput("config: n_values entries must be >= 1");
  }
  if (trials < 1 || pairs < 1) throw InvalidInput("config: trials/pairs < 1");
  if (d_max < 1 || n_max < 2) throw InvalidInput("config: d_max/n_max range");
  if (max_atoms < 1) throw InvalidInput("config: max_atoms < 1");
  if (!(a_min > 0.0 && a_max > a_min)) {
    throw InvalidInput("config: need 0 < a_min < a_max");
  }
  if (a_steps < 2) throw InvalidInput("config: a_steps < 2");
  if (delta < 0.0) throw InvalidInput("config: delta < 0");
}

namespace {

struct Defaults {
  double a = 0.1, eps = 0.01;
  int replicas = 1;
  double t_end = 5.0, record_interval = 0.05;
  int n_cells = 1024;
};

Defaults defaults_for(Experiment e) {
  Defaults d;
  switch (e) {
    case Experiment::chaos_scaling:
      d = {5e-4, 1e-4, 64, 50.0, 0.5, 1024};
      break;
    case Experiment::uniform_in_time:
      d = {5e-4, 1e-4, 64, 20.0, 0.5, 1024};
      break;
    case Experiment::wj_audit:
      d = {5e-4, 1e-4, 1, 5.0, 0.05, 2048};
      break;
    case Experiment::prop23_audit:
      d = {0.1, 0.01, 512, 2.0, 0.05, 512};
      break;
    default:
      break;
  }
  return d;
}

}  // namespace

ExperimentConfig config_from(const config::Config& cfg) {
  const std::string name = cfg.require_string("experiment", "name");
  ExperimentConfig out;
  out.experiment = experiment_from_name(name);
  const Defaults dft = defaults_for(out.experiment);

  out.output_dir = cfg.get_string("experiment", "output_dir",
                                  "out/" + name);
  out.eta = cfg.get_double("experiment", "eta", 1.0);
  out.t_end = cfg.get_double("experiment", "t_end", dft.t_end);
  out.delta = cfg.get_double("experiment", "delta", 0.0);

  out.model = model::ModelParams(cfg.get_double("model", "a", dft.a),
                                 cfg.get_double("model", "eps", dft.eps),
                                 cfg.get_int("model", "dim", 1));

  out.sim.dt = cfg.get_double("sim", "dt", 1e-3);
  out.sim.seed = cfg.get_uint64("sim", "seed", 42);
  out.sim.n_replicas = cfg.get_int("sim", "n_replicas", dft.replicas);
  out.sim.record_interval =
      cfg.get_double("sim", "record_interval", dft.record_interval);

  out.grid.n_cells = cfg.get_int("grid", "n_cells", dft.n_cells);
  out.grid.half_width = cfg.get_double("grid", "half_width", 0.0);

  out.n_values = cfg.get_int_list("chaos", "n_values", {16, 64, 256});

  out.trials = cfg.get_int("audit", "trials", 1000);
  out.d_max = cfg.get_int("audit", "d_max", 3);
  out.n_max = cfg.get_int("audit", "n_max", 4);
  out.pairs = cfg.get_int("audit", "pairs", 200);
  out.max_atoms = cfg.get_int("audit", "max_atoms", 5);

  out.a_min = cfg.get_double("frontier", "a_min", 1e-4);
  out.a_max = cfg.get_double("frontier", "a_max", 2e-3);
  out.a_steps = cfg.get_int("frontier", "a_steps", 25);

  cfg.require_all_consumed();
  out.validate();
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from(config::Config::from_file(path));
}

namespace {

double grid_half_width(const ExperimentConfig& cfg) {
  return cfg.grid.half_width > 0.0 ? cfg.grid.half_width
                                   : limit::default_half_width(cfg.model.a);
}

struct CheckList {
  json checks = json::array();
  bool all_passed = true;

  void add(const std::string& name, bool pass, json details = json::object()) {
    details["name"] = name;
    details["pass"] = pass;
    checks.push_back(details);
    all_passed = all_passed && pass;
  }
};

int finish(const ExperimentConfig& cfg, CheckList& list, json extra) {
  json summary;
  summary["experiment"] = experiment_name(cfg.experiment);
  summary["seed"] = cfg.sim.seed;
  summary["model"] = {{"a", cfg.model.a},
                      {"eps", cfg.model.eps},
                      {"dim", cfg.model.dim}};
  summary["checks"] = list.checks;
  summary["pass"] = list.all_passed;
  for (auto& [k, v] : extra.items()) summary[k] = v;
  std::ofstream out(cfg.output_dir + "/summary.json");
  out << summary.dump(2) << "\n";
  return list.all_passed ? 0 : 1;
}

// ---------------------------------------------------------------------------
// trace_audit
// ---------------------------------------------------------------------------

int run_trace_audit(const ExperimentConfig& cfg) {
  const auto report = linalg::superadditivity_audit(cfg.sim.seed, cfg.trials,
                                                    cfg.d_max, cfg.n_max);
  io::CsvWriter csv(cfg.output_dir + "/trace_audit.csv");
  csv.cells("trial", "d", "N", "lhs", "rhs", "margin", "condition_number");
  svg::Series margins{"margin", {}, {}};
  for (const auto& r : report.rows) {
    csv.cells(r.trial, r.d, r.n, r.lhs, r.rhs, r.margin, r.condition_number);
    margins.x.push_back(r.trial);
    margins.y.push_back(r.margin);
  }
  svg::write_line_plot(cfg.output_dir + "/trace_audit.svg",
                       {"trace superadditivity margin per trial", "trial",
                        "Tr[S^-1] - sum Tr[S_ii^-1]", false},
                       {margins});
  CheckList list;
  list.add("zero_violations", report.violations == 0,
           {{"violations", report.violations}, {"trials", cfg.trials}});
  json extra;
  if (!report.counterexample.empty()) {
    extra["counterexample"] = report.counterexample;
  }
  return finish(cfg, list, extra);
}

// ---------------------------------------------------------------------------
// superadditivity_audit (marginal superadditivity of normalized W2^2)
// ---------------------------------------------------------------------------

transport::DiscreteMeasure random_symmetric_cloud(std::uint64_t seed,
                                                  std::uint64_t tag,
                                                  int n_blocks, int max_atoms,
                                                  int stream) {
  const std::uint64_t k =
      rng::stream_key(seed, tag, stream, 7, 0);
  const int atoms = 2 + static_cast<int>(k % std::max(1, max_atoms - 1));
  transport::DiscreteMeasure m;
  m.dim = n_blocks;
  m.points.resize(static_cast<std::size_t>(atoms) * n_blocks);
  m.weights.resize(atoms);
  double total = 0.0;
  for (int a = 0; a < atoms; ++a) {
    for (int c = 0; c < n_blocks; ++c) {
      m.points[static_cast<std::size_t>(a) * n_blocks + c] =
          2.0 * rng::uniform_at(seed, tag, stream, a, c) - 1.0;
    }
    m.weights[a] = 0.1 + rng::uniform_at(seed, tag, stream, a, 1000);
    total += m.weights[a];
  }
  for (double& w : m.weights) w /= total;
  return transport::symmetrize_blocks(m, 1, n_blocks);
}

int run_superadditivity_audit(const ExperimentConfig& cfg) {
  struct Row {
    int pair, n, ell;
    double lhs, rhs;
    bool pass;
  };
  std::vector<std::vector<Row>> rows(cfg.pairs);
  parallel_for(cfg.pairs, [&](int p) {
    const std::uint64_t k = rng::stream_key(cfg.sim.seed, p, 0, 0, 0);
    const int n = 2 + static_cast<int>(k % (cfg.n_max - 1));
    const auto g =
        random_symmetric_cloud(cfg.sim.seed, p, n, cfg.max_atoms, 1);
    const auto f =
        random_symmetric_cloud(cfg.sim.seed, p, n, cfg.max_atoms, 2);
    for (int ell = 1; ell <= n; ++ell) {
      const auto audit =
          transport::marginal_superadditivity_audit(g, f, 1, n, ell);
      rows[p].push_back({p, n, ell, audit.lhs, audit.rhs,
                         audit.lhs <= audit.rhs + 1e-9});
    }
  });

  io::CsvWriter csv(cfg.output_dir + "/superadditivity_audit.csv");
  csv.cells("pair", "N", "ell", "lhs", "rhs", "pass");
  int failures = 0;
  svg::Series pts{"(rhs, lhs)", {}, {}};
  for (const auto& block : rows) {
    for (const auto& r : block) {
      csv.cells(r.pair, r.n, r.ell, r.lhs, r.rhs, r.pass ? 1 : 0);
      if (!r.pass) ++failures;
      pts.x.push_back(r.rhs);
      pts.y.push_back(r.lhs);
    }
  }
  // Sort the scatter so the polyline reads as a curve under y = x.
  {
    std::vector<std::size_t> idx(pts.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return pts.x[a] < pts.x[b];
    });
    svg::Series sorted{"(rhs, lhs)", {}, {}};
    for (std::size_t i : idx) {
      sorted.x.push_back(pts.x[i]);
      sorted.y.push_back(pts.y[i]);
    }
    pts = std::move(sorted);
  }
  svg::Series diag{"y = x", pts.x, pts.x};
  svg::write_line_plot(
      cfg.output_dir + "/superadditivity_audit.svg",
      {"marginal superadditivity: lhs vs rhs", "W2^2(full)/N",
       "W2^2(marginal)/ell", false},
      {pts, diag});

  CheckList list;
  list.add("lhs_le_rhs_everywhere", failures == 0,
           {{"failures", failures}, {"pairs", cfg.pairs}});
  return finish(cfg, list, json::object());
}

// ---------------------------------------------------------------------------
// moment_decay
// ---------------------------------------------------------------------------

int run_moment_decay(const ExperimentConfig& cfg) {
  const double L = grid_half_width(cfg);
  const int n = cfg.grid.n_cells;
  const model::ModelParams& p = cfg.model;

  // Centered wide start with second moment 4 (uniform on [-sqrt(12),
  // sqrt(12)]).
  const double support = std::sqrt(12.0);
  if (support > L) throw InvalidInput("moment_decay: grid too narrow");
  limit::GridDensity mu0 = limit::make_uniform(L, n, support);
  const double m2_0 = limit::moment_k(mu0, 2);

  const double dt = 0.9 * limit::worst_case_dt_bound(L, n, p);
  const int record_every =
      std::max(1, static_cast<int>(std::llround(cfg.sim.record_interval /
                                                dt)));
  const std::vector<double> deltas = {0.25, 0.5, 1.0};

  struct Snap {
    double t, m2, f, mass;
  };
  std::vector<Snap> snaps;
  limit::evolve(mu0, p, cfg.t_end, dt, record_every,
                [&](const limit::GridDensity& mu) {
                  snaps.push_back({mu.time, limit::moment_k(mu, 2),
                                   limit::free_energy(mu, p), mu.mass()});
                });

  io::CsvWriter csv(cfg.output_dir + "/moment_decay.csv");
  csv.cells("time", "m2", "envelope_d025", "envelope_d05", "envelope_d1",
            "free_energy", "mass_error");
  bool envelope_ok = true;
  bool energy_ok = true;
  bool mass_ok = true;
  svg::Series m2s{"m2(t)", {}, {}};
  std::vector<svg::Series> env_series;
  for (double d : deltas) {
    env_series.push_back({"envelope d=" + io::fmt(d), {}, {}});
  }
  double prev_f = snaps.front().f;
  for (const auto& s : snaps) {
    std::vector<double> env;
    for (double d : deltas) {
      env.push_back(std::exp(-4.0 * d * s.t) * m2_0 +
                    ((p.a + p.eps + d) * (p.a + p.eps + d) + p.dim) /
                        (4.0 * d));
    }
    csv.cells(s.t, s.m2, env[0], env[1], env[2], s.f, s.mass - 1.0);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      if (s.m2 > 1.05 * env[k]) envelope_ok = false;
      env_series[k].x.push_back(s.t);
      env_series[k].y.push_back(env[k]);
    }
    if (s.f > prev_f + 1e-8 * record_every) energy_ok = false;
    prev_f = s.f;
    if (std::abs(s.mass - 1.0) > 1e-12) mass_ok = false;
    m2s.x.push_back(s.t);
    m2s.y.push_back(s.m2);
  }
  std::vector<svg::Series> all = {m2s};
  all.insert(all.end(), env_series.begin(), env_series.end());
  svg::write_line_plot(cfg.output_dir + "/moment_decay.svg",
                       {"second moment vs dissipation envelopes", "t", "m2",
                        false},
                       all);

  CheckList list;
  list.add("moment_envelope", envelope_ok,
           {{"m2_initial", m2_0}, {"snapshots", snaps.size()}});
  list.add("free_energy_monotone", energy_ok);
  list.add("mass_conserved", mass_ok);
  return finish(cfg, list, {{"dt", dt}});
}

// ---------------------------------------------------------------------------
// chaos_scaling / uniform_in_time
// ---------------------------------------------------------------------------

}  // namespace

GapSeries coupling_gap_series(int n, int replicas, double t_end,
                              const model::ModelParams& p,
                              const limit::GridDensity& mu_inf,
                              const particles::SimConfig& sim,
                              particles::CouplingMode mode) {
  const double m1 = limit::signed_moment(mu_inf, 1);
  const long long steps =
      static_cast<long long>(std::ceil(t_end / sim.dt - 1e-9));
  const long long record_every =
      std::max(1LL, std::llround(sim.record_interval / sim.dt));
  const long long n_records = steps / record_every + 2;

  std::vector<std::vector<double>> gaps(replicas);
  std::vector<std::vector<double>> times(replicas);
  parallel_for(replicas, [&](int r) {
    gaps[r].reserve(n_records);
    times[r].reserve(n_records);
    particles::ParticleEnsemble x0 =
        particles::sample_iid_1d(mu_inf, n, sim.seed, r);
    particles::CoupledEnsemble c = particles::make_coupled(
        x0, x0, mode, mode == particles::CouplingMode::reflection
                          ? std::sqrt(sim.dt)
                          : 0.0);
    particles::CoupledWorkspace ws;
    std::vector<double> noise(static_cast<std::size_t>(n));
    gaps[r].push_back(particles::coupling_gap(c));
    times[r].push_back(0.0);
    for (long long s = 1; s <= steps; ++s) {
      particles::fill_noise(sim.seed, r, s, n, 1, noise);
      particles::coupled_step_inplace(c, std::span<const double>(&m1, 1), p,
                                      sim.dt, noise, ws);
      if (s % record_every == 0 || s == steps) {
        gaps[r].push_back(particles::coupling_gap(c));
        times[r].push_back(s * sim.dt);
      }
    }
  });

  GapSeries out;
  out.n_particles = n;
  out.time = times[0];
  out.gap.assign(out.time.size(), 0.0);
  for (int r = 0; r < replicas; ++r) {
    for (std::size_t k = 0; k < out.gap.size(); ++k) {
      out.gap[k] += gaps[r][k];
    }
  }
  for (double& g : out.gap) g /= replicas;
  return out;
}

std::vector<std::pair<std::string, limit::GridDensity>> perturbation_family(
    const limit::GridDensity& base) {
  const double L = base.half_width;
  const int n = base.n_cells;
  std::vector<std::pair<std::string, limit::GridDensity>> fam;

  auto tag = [](double v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
  };

  auto push = [&](const std::string& name, std::vector<double> vals) {
    fam.emplace_back(name, limit::from_values(std::move(vals), L, base.time));
  };
  auto transform = [&](auto&& f) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::max(0.0, f(base.center(i)));
    return v;
  };

  for (double c : {-0.15, -0.05, 0.05, 0.15}) {
    push("shift_" + tag(c),
         transform([&](double x) { return base.interpolate(x - c); }));
  }
  for (double s : {0.85, 0.95, 1.1, 1.25}) {
    push("dilate_" + tag(s),
         transform([&](double x) { return base.interpolate(x / s) / s; }));
  }
  for (double b : {-0.3, 0.3}) {
    push("tilt_" + tag(b), transform([&](double x) {
           return base.interpolate(x) * std::exp(b * x);
         }));
  }
  {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      const double x = base.center(i);
      v[i] = 0.9 * base.values[i] + (std::abs(x) <= 1.0 ? 0.05 : 0.0);
    }
    push("mix_uniform", std::move(v));
  }
  push("gaussian_w05", transform([&](double x) {
         return std::exp(-x * x / (2.0 * 0.5));
       }));
  return fam;
}

namespace {

double sup_over(const GapSeries& s, double t_lo, double t_hi) {
  double m = 0.0;
  for (std::size_t k = 0; k < s.time.size(); ++k) {
    if (s.time[k] >= t_lo && s.time[k] <= t_hi) m = std::max(m, s.gap[k]);
  }
  return m;
}

int run_chaos_scaling(const ExperimentConfig& cfg, bool uniform_variant) {
  const double L = grid_half_width(cfg);
  const auto fp = limit::stationary_fixed_point(cfg.model, 0.5, 1e-10, L,
                                                cfg.grid.n_cells);
  if (!fp.converged) {
    throw NumericalError("chaos_scaling: stationary fixed point failed");
  }

  std::vector<GapSeries> series;
  for (int n : cfg.n_values) {
    series.push_back(coupling_gap_series(
        n, cfg.sim.n_replicas, cfg.t_end, cfg.model, fp.density, cfg.sim,
        particles::CouplingMode::synchronous));
  }

  const std::string stem =
      uniform_variant ? "uniform_in_time" : "chaos_scaling";
  io::CsvWriter csv(cfg.output_dir + "/" + stem + ".csv");
  csv.cells("N", "time", "gap");
  std::vector<svg::Series> plots;
  for (const auto& s : series) {
    svg::Series ps{"N=" + std::to_string(s.n_particles), s.time, s.gap};
    for (std::size_t k = 0; k < s.time.size(); ++k) {
      csv.cells(s.n_particles, s.time[k], s.gap[k]);
    }
    plots.push_back(std::move(ps));
  }
  svg::write_line_plot(cfg.output_dir + "/" + stem + ".svg",
                       {"synchronous coupling gap (replica average)", "t",
                        "(1/N) sum |X-Y|^2", true},
                       plots);

  CheckList list;
  json ratios = json::array();
  bool bounded = true;
  for (const auto& s : series) {
    const double first = sup_over(s, 0.0, cfg.t_end / 2.0);
    const double second = sup_over(s, cfg.t_end / 2.0, cfg.t_end);
    if (second > 1.25 * first + 1e-300) bounded = false;
  }
  list.add("uniform_in_time_bounded", bounded);
  bool ratio_ok = true;
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    const double hi = sup_over(series[k], 0.0, cfg.t_end);
    const double lo = sup_over(series[k + 1], 0.0, cfg.t_end);
    const double ratio = lo > 0.0 ? hi / lo : 0.0;
    ratios.push_back({{"n_small", series[k].n_particles},
                      {"n_large", series[k + 1].n_particles},
                      {"ratio", ratio}});
    if (!(ratio >= 2.0 && ratio <= 8.0)) ratio_ok = false;
  }
  list.add("gap_scales_like_1_over_n", ratio_ok, {{"ratios", ratios}});

  json extra;
  extra["sup_gaps"] = json::array();
  for (const auto& s : series) {
    extra["sup_gaps"].push_back({{"N", s.n_particles},
                                 {"sup_gap", sup_over(s, 0.0, cfg.t_end)}});
  }

  if (uniform_variant) {
    // Decay-rate fit of W2^2(mu_t, mu_inf) from a shifted start; feeds the
    // switchover time T_N = delta ln N.
    limit::GridDensity shifted = fp.density;
    for (int i = 0; i < shifted.n_cells; ++i) {
      shifted.values[i] =
          std::max(0.0, fp.density.interpolate(shifted.center(i) - 0.25));
    }
    shifted = limit::from_values(std::move(shifted.values), L);
    const double dt =
        0.9 * limit::worst_case_dt_bound(L, cfg.grid.n_cells, cfg.model);
    std::vector<double> ts, w2s;
    limit::evolve(shifted, cfg.model, 4.0, dt,
                  std::max(1, static_cast<int>(std::llround(0.2 / dt))),
                  [&](const limit::GridDensity& mu) {
                    ts.push_back(mu.time);
                    w2s.push_back(transport::w2_1d(mu, fp.density));
                  });
    // Least squares slope of ln w2 while clearly above the floor.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (w2s[k] > 1e-9 * w2s[0]) {
        sx += ts[k];
        sy += std::log(w2s[k]);
        sxx += ts[k] * ts[k];
        sxy += ts[k] * std::log(w2s[k]);
        ++cnt;
      }
    }
    const double alpha_hat =
        cnt >= 2 ? -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
    const double delta =
        cfg.delta > 0.0
            ? cfg.delta
            : 1.0 / (2.0 * (alpha_hat +
                            4.0 * (cfg.model.a + cfg.model.eps + cfg.eta)));
    extra["alpha_hat"] = alpha_hat;
    extra["delta"] = delta;
    extra["switchover_t_n"] = json::array();
    for (int n : cfg.n_values) {
      extra["switchover_t_n"].push_back(
          {{"N", n}, {"T_N", delta * std::log(static_cast<double>(n))}});
    }
    list.add("decay_rate_positive", alpha_hat > 0.0,
             {{"alpha_hat", alpha_hat}});
  }
  return finish(cfg, list, extra);
}

// ---------------------------------------------------------------------------
// wj_audit
// ---------------------------------------------------------------------------

int run_wj_audit(const ExperimentConfig& cfg) {
  const model::ModelParams& p = cfg.model;
  const auto constants = model::wj_constants(p.a, p.eps, p.dim);
  CheckList list;
  list.add("feasible_parameters", constants.feasible,
           {{"a", p.a},
            {"eps", p.eps},
            {"kappa", constants.kappa},
            {"kappa_a", constants.kappa_a},
            {"eps_a", constants.eps_a},
            {"r_a", constants.r_a},
            {"c1", constants.c1},
            {"c2", constants.c2}});

  const double L = grid_half_width(cfg);
  const auto fp =
      limit::stationary_fixed_point(p, 0.5, 1e-10, L, cfg.grid.n_cells);
  list.add("stationary_converged", fp.converged,
           {{"residual", fp.residual}, {"iterations", fp.iterations}});

  const auto family = perturbation_family(fp.density);
  io::CsvWriter csv(cfg.output_dir + "/wj_audit.csv");
  csv.cells("perturbation", "w2", "heat_term", "drift_term", "j", "kappa_w2",
            "min_heat_integrand", "pass");
  bool wj_ok = true;
  bool heat_sign_ok = true;
  svg::Series lhs{"j", {}, {}}, rhs{"kappa W2^2", {}, {}};
  for (const auto& [name, mu] : family) {
    const double w2 = transport::w2_1d(mu, fp.density);
    const auto wj = transport::wj_functional_1d(mu, fp.density, p);
    const double target = constants.kappa * w2;
    const bool pass = wj.j >= target * (1.0 - 0.02);
    wj_ok = wj_ok && pass;
    heat_sign_ok = heat_sign_ok && wj.min_heat_integrand >= -1e-12;
    csv.cells(name, w2, wj.heat_term, wj.drift_term, wj.j, target,
              wj.min_heat_integrand, pass ? 1 : 0);
    lhs.x.push_back(w2);
    lhs.y.push_back(wj.j);
    rhs.x.push_back(w2);
    rhs.y.push_back(target);
  }
  svg::write_line_plot(cfg.output_dir + "/wj_audit.svg",
                       {"dissipation functional vs kappa W2^2", "W2^2",
                        "value", false},
                       {lhs, rhs});
  list.add("wj_inequality", wj_ok,
           {{"kappa", constants.kappa}, {"family_size", family.size()}});
  list.add("heat_term_sign", heat_sign_ok);

  // Tensorization identity by exact LP, the bridge behind the 1-D audit.
  bool tensor_ok = true;
  json tensor_rows = json::array();
  for (int trial = 0; trial < 3; ++trial) {
    auto atoms = [&](int stream) {
      std::vector<double> xs, ws;
      const std::uint64_t k =
          rng::stream_key(cfg.sim.seed, trial, stream, 0, 0);
      const int count = 2 + static_cast<int>(k % 2);
      for (int a = 0; a < count; ++a) {
        xs.push_back(2.0 * rng::uniform_at(cfg.sim.seed, trial, stream, a, 0) -
                     1.0);
        ws.push_back(0.2 + rng::uniform_at(cfg.sim.seed, trial, stream, a, 1));
      }
      double s = 0.0;
      for (double w : ws) s += w;
      for (double& w : ws) w /= s;
      return transport::make_discrete_1d(std::move(xs), std::move(ws));
    };
    const auto mu = atoms(1);
    const auto nu = atoms(2);
    const int n = 2 + trial % 2;
    const auto audit = transport::tensorization_audit(mu, nu, n);
    const bool pass = std::abs(audit.lhs - audit.rhs) <= 1e-9;
    tensor_ok = tensor_ok && pass;
    tensor_rows.push_back(
        {{"n", n}, {"lhs", audit.lhs}, {"rhs", audit.rhs}, {"pass", pass}});
  }
  list.add("tensorization_identity", tensor_ok, {{"rows", tensor_rows}});

  return finish(cfg, list, json::object());
}

// ---------------------------------------------------------------------------
// prop23_audit
// ---------------------------------------------------------------------------

}  // namespace

Prop23Report prop23_audit(const ExperimentConfig& cfg) {
  const model::ModelParams& p = cfg.model;
  const int n_particles = 2;  // exact-OT regime
  const int replicas = cfg.sim.n_replicas;
  const double L = grid_half_width(cfg);
  const int n_cells = cfg.grid.n_cells;

  // Observation grid aligned with whole particle steps.
  const long long steps_per_obs = std::max(
      1LL, std::llround(cfg.sim.record_interval / cfg.sim.dt));
  const double obs_dt = steps_per_obs * cfg.sim.dt;
  const int n_obs =
      std::max(1, static_cast<int>(std::llround(cfg.t_end / obs_dt)));

  limit::GridDensity mu = limit::make_gaussian(L, n_cells, 0.0, 0.25);
  const double pde_bound = 0.9 * limit::worst_case_dt_bound(L, n_cells, p);
  const long long pde_steps_per_obs =
      std::max(1LL, static_cast<long long>(std::ceil(obs_dt / pde_bound)));
  const double pde_dt = obs_dt / pde_steps_per_obs;
  limit::FokkerPlanckStepper stepper(L, n_cells, p);

  // Interacting particles X and nonlinear shadows Y share the Brownian
  // increments (synchronous coupling) and the initial atoms, so the two
  // clouds coincide at t = 0 and never pick up an independent-sampling
  // floor: the measured W2^2 tracks the coupling gap, which is what the
  // inequality chain controls.  The Y pairs stay i.i.d. draws of
  // mu_t^{(x)N} since each follows the mean-field drift of the grid law.
  std::vector<particles::CoupledEnsemble> ens(replicas);
  {
    const limit::GridSampler sampler(mu);
    for (int r = 0; r < replicas; ++r) {
      std::vector<double> pos(n_particles);
      for (int j = 0; j < n_particles; ++j) {
        pos[j] = sampler(rng::uniform_at(cfg.sim.seed, r, 0, j, 0));
      }
      auto x0 = particles::make_ensemble(std::move(pos), n_particles, 1);
      ens[r] = particles::make_coupled(
          x0, x0, particles::CouplingMode::synchronous, 0.0);
    }
  }

  auto cloud_of = [&](bool interacting) {
    transport::DiscreteMeasure cloud;
    cloud.dim = n_particles;
    cloud.weights.assign(replicas, 1.0 / replicas);
    cloud.points.resize(static_cast<std::size_t>(replicas) * n_particles);
    for (int r = 0; r < replicas; ++r) {
      const auto& pos =
          interacting ? ens[r].x.positions : ens[r].y.positions;
      for (int j = 0; j < n_particles; ++j) {
        cloud.points[static_cast<std::size_t>(r) * n_particles + j] = pos[j];
      }
    }
    return cloud;
  };

  Prop23Report report;
  report.n_particles = n_particles;
  report.replicas = replicas;
  std::vector<double> w2s, fns, times;
  for (int k = 0; k <= n_obs; ++k) {
    const double t = k * obs_dt;
    w2s.push_back(
        transport::w2_exact_discrete(cloud_of(true), cloud_of(false)).cost);
    fns.push_back(transport::f_n_closed_form(mu, p, n_particles));
    times.push_back(t);
    if (k == n_obs) break;
    // Advance both particle systems and the limit law over one window,
    // lock-stepped on the observation grid.
    const double m1 = limit::signed_moment(mu, 1);
    parallel_for(replicas, [&](int r) {
      particles::CoupledWorkspace ws;
      std::vector<double> noise(static_cast<std::size_t>(n_particles));
      for (long long s = 1; s <= steps_per_obs; ++s) {
        const long long global_step = k * steps_per_obs + s;
        particles::fill_noise(cfg.sim.seed, r, global_step, n_particles, 1,
                              noise);
        particles::coupled_step_inplace(ens[r],
                                        std::span<const double>(&m1, 1), p,
                                        cfg.sim.dt, noise, ws);
      }
    });
    for (long long s = 0; s < pde_steps_per_obs; ++s) {
      stepper.step(mu, pde_dt);
    }
  }

  report.min_slack = 1e300;
  double int_w2 = 0.0, int_fn = 0.0;
  for (std::size_t k = 0; k < w2s.size(); ++k) {
    if (k > 0) {
      int_w2 += 0.5 * (w2s[k] + w2s[k - 1]) * obs_dt;
      int_fn += 0.5 * (fns[k] + fns[k - 1]) * obs_dt;
    }
    Prop23Point pt;
    pt.time = times[k];
    pt.w2 = w2s[k];
    pt.fn = fns[k];
    pt.bound = w2s[0] + cfg.eta * int_w2 + int_fn / cfg.eta;
    pt.slack = pt.bound - pt.w2;
    report.min_slack = std::min(report.min_slack, pt.slack);
    report.points.push_back(pt);
  }
  return report;
}

namespace {

int run_prop23_audit(const ExperimentConfig& cfg) {
  const Prop23Report report = prop23_audit(cfg);
  io::CsvWriter csv(cfg.output_dir + "/prop23_audit.csv");
  csv.cells("time", "w2", "f_n", "bound", "slack");
  svg::Series w2{"W2^2(G_t, mu_t^2)", {}, {}};
  svg::Series bound{"upper bound", {}, {}};
  for (const auto& pt : report.points) {
    csv.cells(pt.time, pt.w2, pt.fn, pt.bound, pt.slack);
    w2.x.push_back(pt.time);
    w2.y.push_back(pt.w2);
    bound.x.push_back(pt.time);
    bound.y.push_back(pt.bound);
  }
  svg::write_line_plot(cfg.output_dir + "/prop23_audit.svg",
                       {"dissipation inequality chain at N=2", "t", "value",
                        false},
                       {w2, bound});
  CheckList list;
  list.add("nonnegative_slack", report.min_slack >= -1e-12,
           {{"min_slack", report.min_slack},
            {"replicas", report.replicas},
            {"eta", cfg.eta}});
  return finish(cfg, list, json::object());
}

// ---------------------------------------------------------------------------
// constants_frontier
// ---------------------------------------------------------------------------

int run_constants_frontier_impl(double a_min, double a_max, int steps,
                                double eps, int dim,
                                const std::string& output_dir,
                                const ExperimentConfig* cfg) {
  io::ensure_directory(output_dir);
  io::CsvWriter csv(output_dir + "/constants_frontier.csv");
  csv.cells("a", "r_a", "c1", "c2", "kappa_a", "eps_a", "kappa", "feasible");
  svg::Series c1s{"c1", {}, {}}, c2s{"c2", {}, {}}, foura{"4a", {}, {}};
  bool c2_ok = true;
  for (int k = 0; k < steps; ++k) {
    const double a = a_min * std::pow(a_max / a_min,
                                      static_cast<double>(k) / (steps - 1));
    const double e = std::min(eps, 0.49 * a);
    const auto c = model::wj_constants(a, e, dim);
    csv.cells(a, c.r_a, c.c1, c.c2, c.kappa_a, c.eps_a, c.kappa,
              c.feasible ? 1 : 0);
    c2_ok = c2_ok && c.c2 > 4.0 * a;
    c1s.x.push_back(a);
    c1s.y.push_back(c.c1);
    c2s.x.push_back(a);
    c2s.y.push_back(c.c2);
    foura.x.push_back(a);
    foura.y.push_back(4.0 * a);
  }
  svg::write_line_plot(output_dir + "/constants_frontier.svg",
                       {"contraction constants vs well depth", "a", "value",
                        false},
                       {c1s, c2s, foura});

  const double a_star = model::feasibility_frontier(dim);
  const double a_pick = a_star / 2.0;
  json example;
  bool example_feasible = false;
  if (a_pick > 0.0) {
    const auto base = model::wj_constants(a_pick, 0.0, dim);
    const double eps_pick = 0.5 * base.eps_a;
    const auto c = model::wj_constants(a_pick, eps_pick, dim);
    example_feasible = c.feasible;
    example = {{"a", a_pick}, {"eps", eps_pick}, {"kappa", c.kappa}};
  }

  CheckList list;
  list.add("c2_exceeds_4a", c2_ok);
  list.add("nonempty_feasible_set", example_feasible,
           {{"a_star", a_star}, {"example", example}});

  json summary;
  summary["experiment"] = "constants_frontier";
  summary["a_star"] = a_star;
  summary["feasible_example"] = example;
  summary["checks"] = list.checks;
  summary["pass"] = list.all_passed;
  if (cfg) summary["seed"] = cfg->sim.seed;
  std::ofstream out(output_dir + "/summary.json");
  out << summary.dump(2) << "\n";
  return list.all_passed ? 0 : 1;
}

}  // namespace

int frontier(double a_min, double a_max, int steps, double eps, int dim,
             const std::string& output_dir) {
  if (!(a_min > 0.0 && a_max > a_min) || steps < 2) {
    throw InvalidInput("frontier: need 0 < a_min < a_max and steps >= 2");
  }
  return run_constants_frontier_impl(a_min, a_max, steps, eps, dim,
                                     output_dir, nullptr);
}

int run(const ExperimentConfig& cfg) {
  cfg.validate();
  io::ensure_directory(cfg.output_dir);
  switch (cfg.experiment) {
    case Experiment::trace_audit:
      return run_trace_audit(cfg);
    case Experiment::superadditivity_audit:
      return run_superadditivity_audit(cfg);
    case Experiment::moment_decay:
      return run_moment_decay(cfg);
    case Experiment::chaos_scaling:
      return run_chaos_scaling(cfg, false);
    case Experiment::uniform_in_time:
      return run_chaos_scaling(cfg, true);
    case Experiment::wj_audit:
      return run_wj_audit(cfg);
    case Experiment::prop23_audit:
      return run_prop23_audit(cfg);
    case Experiment::constants_frontier:
      return run_constants_frontier_impl(cfg.a_min, cfg.a_max, cfg.a_steps,
                                         cfg.model.eps, cfg.model.dim,
                                         cfg.output_dir, &cfg);
  }
  throw InvalidInput("run: unknown experiment");
}

}  // namespace chaoskit::experiments

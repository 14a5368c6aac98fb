// nlerg: experiment runner for nonlinear Markov chains and mean-field SDEs.
//
// Exit status: 0 every claim reproduced, 1 falsification or failed check,
// 2 usage or configuration error.

#include "cli_config.hpp"

#include "nlerg/counterexamples.hpp"
#include "nlerg/ergodicity.hpp"
#include "nlerg/kernel_spec.hpp"
#include "nlerg/mckean_vlasov.hpp"
#include "nlerg/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>

using namespace nlerg;
using namespace nlerg::cli;
namespace rep = nlerg::report;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Outcome {
  bool passed = true;
  Json body;
  std::vector<rep::CsvTable> tables;  // written as <name>.csv
};

using Runner = std::function<Outcome(Json& cfg)>;

struct Command {
  std::string path;  // e.g. "smve decay"
  CLI::App* app = nullptr;
  std::unique_ptr<ParamSet> params;
  Runner run;
};

unsigned workers_of(const Json& cfg) {
  const auto w = count(cfg, "workers");
  if (w < 1) throw UsageError("field 'workers': must be >= 1");
  return static_cast<unsigned>(w);
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DiagnosticError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const KernelSpecError& e) {
    throw UsageError(e.what());
  }
}

// chain ------------------------------------------------------------------------

std::vector<Param> chain_params() {
  return {
      {"kernel", Kind::string, nullptr, "oscillating | continuum | no-invariant | markov-example | mixture | custom", true},
      {"gamma", Kind::number, 0.5, "oscillating kernel clamp"},
      {"alpha", Kind::number, 0.2, "continuum / no-invariant alpha"},
      {"lambda", Kind::number, 0.8, "continuum / no-invariant / mixture lambda"},
      {"truncation", Kind::integer, 20, "no-invariant truncation"},
      {"q", Kind::matrix, nullptr, "mixture base matrix (JSON rows); default the 3-state example"},
      {"kernel_file", Kind::string, nullptr, "custom kernel document"},
      {"mu0", Kind::number_list, nullptr, "initial law; default uniform"},
      {"steps", Kind::integer, 100, "propagation steps"},
      {"grid_resolution", Kind::integer, nullptr, "simplex grid resolution; default by state count"},
      {"tie_tolerance", Kind::number, kDefaultTieTolerance, "regime tie tolerance"},
      {"fixed_point_tolerance", Kind::number, kFixedPointTolerance, "fixed point tolerance"},
      {"max_iterations", Kind::integer, static_cast<long long>(kMaxFixedPointIterations), "fixed point iteration cap"},
      {"contraction_pairs", Kind::integer, 1000, "random pairs for the contraction check"},
      {"tolerance", Kind::number, 1e-10, "contraction check tolerance"},
      {"seed", Kind::integer, 1, "seed for random measure pairs"},
      {"workers", Kind::integer, 1, "worker threads"},
  };
}

NonlinearKernel build_kernel(Json& cfg) {
  const std::string name = text(cfg, "kernel");
  if (name == "oscillating") return oscillating_kernel(number(cfg, "gamma"));
  if (name == "continuum") return continuum_kernel(number(cfg, "alpha"), number(cfg, "lambda"));
  if (name == "no-invariant") {
    return no_invariant_kernel(number(cfg, "alpha"), number(cfg, "lambda"),
                               static_cast<Eigen::Index>(integer(cfg, "truncation")));
  }
  if (name == "markov-example") return markov_kernel(example_markov_matrix(), "markov-example");
  if (name == "mixture") {
    if (cfg["q"].is_null()) {
      const Matrix q = example_markov_matrix();
      cfg["q"] = Json::array();
      for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < q.cols(); ++j) row.push_back(q(i, j));
        cfg["q"].push_back(row);
      }
    }
    return mixture_kernel(matrix(cfg, "q"), number(cfg, "lambda"));
  }
  if (name == "custom") {
    if (cfg["kernel_file"].is_null()) throw UsageError("missing required field 'kernel_file' for kernel 'custom'");
    return load_kernel_spec_file(text(cfg, "kernel_file"));
  }
  throw UsageError("field 'kernel': unknown kernel '" + name + "'");
}

Outcome run_chain(Json& cfg) {
  const unsigned workers = workers_of(cfg);
  const auto kernel = guarded([&] { return build_kernel(cfg); });
  const Eigen::Index k = kernel.space_size();
  if (cfg["grid_resolution"].is_null()) cfg["grid_resolution"] = MeasureGrid::default_resolution(k);
  if (cfg["mu0"].is_null()) cfg["mu0"] = std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
  const auto mu0_values = numbers(cfg, "mu0");
  if (static_cast<Eigen::Index>(mu0_values.size()) != k) {
    throw UsageError("field 'mu0': expected " + std::to_string(k) + " weights");
  }
  const auto mu0 = guarded([&] { return DiscreteMeasure(Eigen::Map<const Vector>(mu0_values.data(), k)); });
  const auto grid = guarded([&] { return MeasureGrid(k, static_cast<int>(integer(cfg, "grid_resolution"))); });

  Outcome out;
  out.body["kernel"] = kernel.label();
  out.body["space_size"] = k;
  const auto validation = validate(kernel, grid);
  out.body["validation"] = rep::to_json(validation);
  if (!validation.passed) throw UsageError("kernel validation failed: " + validation.message);

  const auto cert = guarded([&] { return certify(kernel, grid, number(cfg, "tie_tolerance"), workers); });
  out.body["certificate"] = rep::to_json(cert);

  const auto traj = evolve(kernel, mu0, count(cfg, "steps"));
  out.tables.push_back(rep::trajectory_csv(traj));

  const double tol = number(cfg, "fixed_point_tolerance");
  const auto max_iter = count(cfg, "max_iterations");
  out.body["fixed_point"] = rep::to_json(guarded([&] { return find_invariant(kernel, mu0, tol, max_iter); }));

  if (cert.regime == Regime::uncertified) {
    out.body["contraction"] = nullptr;
    out.body["rate"] = nullptr;
    return out;
  }
  const auto pairs = random_measure_pairs(k, count(cfg, "contraction_pairs"), static_cast<std::uint64_t>(integer(cfg, "seed")));
  const auto contraction =
      check_contraction_inequality(kernel, cert.alpha_hat, cert.lambda_hat, pairs, number(cfg, "tolerance"), workers);
  out.body["contraction"] = rep::to_json(contraction);
  out.passed = contraction.violations.empty();
  try {
    const auto rate = check_rate(kernel, cert, mu0, count(cfg, "steps"), tol, max_iter);
    out.body["rate"] = rep::to_json(rate);
    out.tables.push_back(rep::rate_csv(rate));
    out.passed = out.passed && rate.violations.empty();
  } catch (const FalsificationError& e) {
    out.body["rate"] = Json{{"error", e.what()}};
    out.passed = false;
  }
  return out;
}

// counterexample -----------------------------------------------------------------

Outcome from_counterexample(const CounterexampleReport& r) {
  Outcome out;
  out.passed = r.all_passed();
  out.body = rep::to_json(r);
  out.tables.push_back(rep::series_csv(r));
  return out;
}

Outcome run_oscillation(Json& cfg) {
  return from_counterexample(guarded([&] {
    return verify_oscillation(number(cfg, "gamma"), number(cfg, "a"), count(cfg, "steps"),
                              static_cast<int>(integer(cfg, "grid_resolution")));
  }));
}

Outcome run_continuum(Json& cfg) {
  const double alpha = number(cfg, "alpha"), lambda = number(cfg, "lambda");
  if (!(alpha > 0.0 && alpha < lambda && lambda <= 1.0)) {
    throw UsageError("fields 'alpha', 'lambda': need 0 < alpha < lambda <= 1");
  }
  if (cfg["a_samples"].is_null()) {
    const double lo = alpha / (2 * lambda), hi = 1.0 - lo;
    Json samples = Json::array();
    for (int i = 0; i <= 4; ++i) samples.push_back(lo + (hi - lo) * i / 4.0);
    samples.push_back(lo / 2);
    samples.push_back(1.0 - lo / 2);
    cfg["a_samples"] = samples;
  }
  return from_counterexample(guarded([&] {
    return verify_continuum(alpha, lambda, numbers(cfg, "a_samples"), count(cfg, "steps"),
                            static_cast<int>(integer(cfg, "grid_resolution")));
  }));
}

Outcome run_no_invariant(Json& cfg) {
  return from_counterexample(guarded([&] {
    return verify_no_invariant_recursion(number(cfg, "alpha"), number(cfg, "lambda"), count(cfg, "n_max"));
  }));
}

Outcome run_no_convergence(Json& cfg) {
  const auto truncation = static_cast<Eigen::Index>(integer(cfg, "truncation"));
  if (truncation < 3) throw UsageError("field 'truncation': must be >= 3");
  if (cfg["mu0"].is_null()) {
    std::vector<double> d(static_cast<std::size_t>(truncation), 0.0);
    d[0] = 1.0;
    cfg["mu0"] = d;
  }
  const auto values = numbers(cfg, "mu0");
  if (static_cast<Eigen::Index>(values.size()) != truncation) {
    throw UsageError("field 'mu0': expected " + std::to_string(truncation) + " weights");
  }
  const auto demo = guarded([&] {
    return demonstrate_no_convergence(number(cfg, "alpha"), number(cfg, "lambda"), truncation,
                                      DiscreteMeasure(Eigen::Map<const Vector>(values.data(), truncation)),
                                      count(cfg, "steps"));
  });
  Outcome out = from_counterexample(demo.report);
  out.tables.push_back(rep::trajectory_csv(demo.trajectory));
  return out;
}

// smve ---------------------------------------------------------------------------

std::vector<Param> smve_common() {
  return {
      {"preset", Kind::string, "vh", "ou | vh | brownian"},
      {"dimension", Kind::integer, 1, "state dimension (1-3)"},
      {"r", Kind::number, 1.0, "inward drift strength (vh)"},
      {"M", Kind::number, 1.0, "radius beyond which the drift points inward (vh)"},
      {"D", Kind::number, 1.0, "interaction bound (vh)"},
      {"epsilon", Kind::number, 0.05, "interaction strength"},
      {"n", Kind::integer, 10'000, "particles"},
      {"h", Kind::number, 0.01, "time step"},
      {"seed", Kind::integer, 1, "seed"},
      {"stream", Kind::integer, 0, "stream id"},
      {"bins", Kind::integer, 200, "histogram bins per axis"},
      {"lower", Kind::number, -10.0, "histogram lower edge"},
      {"upper", Kind::number, 10.0, "histogram upper edge"},
      {"workers", Kind::integer, 1, "worker threads"},
  };
}

std::vector<Param> with(std::vector<Param> base, std::vector<Param> extra) {
  for (auto& p : extra) {
    auto it = std::find_if(base.begin(), base.end(), [&](const Param& b) { return b.key == p.key; });
    if (it != base.end()) {
      *it = std::move(p);
    } else {
      base.push_back(std::move(p));
    }
  }
  return base;
}

SMVESpec build_spec(Json& cfg) {
  const std::string preset = text(cfg, "preset");
  const int d = static_cast<int>(integer(cfg, "dimension"));
  if (d < 1 || d > kMaxDimension) throw UsageError("field 'dimension': must be 1, 2 or 3");
  SMVESpec spec;
  if (preset == "vh") {
    spec = guarded([&] { return vh_spec(number(cfg, "r"), number(cfg, "M"), number(cfg, "D"), number(cfg, "epsilon"), d); });
  } else if (preset == "ou" || preset == "brownian") {
    spec = preset == "ou" ? ou_spec(d) : brownian_spec(d);
    spec.epsilon = number(cfg, "epsilon");
    cfg["r"] = spec.r;
    cfg["M"] = spec.M;
    cfg["D"] = spec.D;
  } else {
    throw UsageError("field 'preset': unknown preset '" + preset + "'");
  }
  guarded([&] {
    spec.validate();
    return 0;
  });
  cfg["L"] = spec.L;
  return spec;
}

SimulationConfig build_sim(const Json& cfg, double horizon, std::vector<double> snapshots) {
  SimulationConfig s;
  s.particles = count(cfg, "n");
  s.h = number(cfg, "h");
  s.horizon = horizon;
  s.snapshot_times = std::move(snapshots);
  s.seed = static_cast<std::uint64_t>(integer(cfg, "seed"));
  s.stream = static_cast<std::uint32_t>(count(cfg, "stream"));
  s.workers = workers_of(cfg);
  guarded([&] {
    s.validate();
    return 0;
  });
  return s;
}

Binning build_binning(const Json& cfg, int d) {
  Binning b;
  for (int c = 0; c < d; ++c) {
    b.lower.push_back(number(cfg, "lower"));
    b.upper.push_back(number(cfg, "upper"));
    b.bins.push_back(count(cfg, "bins"));
  }
  guarded([&] {
    b.validate();
    return 0;
  });
  return b;
}

std::vector<double> grid_times(double every, double horizon, const std::string& field) {
  if (!(every > 0.0) || !std::isfinite(every)) throw UsageError("field '" + field + "': must be > 0");
  std::vector<double> t;
  const auto n = static_cast<long long>(std::floor(horizon / every + 1e-9));
  for (long long k = 0; k <= n; ++k) t.push_back(static_cast<double>(k) * every);
  return t;
}

InitialLaw law_field(const Json& cfg, const std::string& key, int d) {
  const auto law = parse_law(text(cfg, key), key);
  if (dimension_of(law) != d) throw UsageError("field '" + key + "': law dimension does not match 'dimension'");
  return law;
}

Json spec_json(const SMVESpec& s) {
  return Json{{"label", s.label}, {"dimension", s.dimension}, {"epsilon", s.epsilon}, {"r", s.r},
              {"M", s.M},         {"D", s.D},                 {"L", s.L},             {"interaction", s.b2.has_value()}};
}

Outcome run_simulate(Json& cfg) {
  const auto spec = build_spec(cfg);
  const double t = number(cfg, "t");
  const auto sim = build_sim(cfg, t, grid_times(number(cfg, "snapshot_every"), t, "snapshot_every"));
  const auto init = law_field(cfg, "init", spec.dimension);
  const auto traj = simulate(spec, init, sim);
  const auto vh = verify_vh(spec.b1, spec.r, spec.M, vh_shell_points(spec.dimension, spec.M));
  Outcome out;
  out.body["spec"] = spec_json(spec);
  out.body["vh"] = rep::to_json(vh);
  out.body["integral_I"] = rep::to_json(integral_I(init));
  out.body["max_b2_norm"] = traj.max_b2_norm;
  out.body["snapshots"] = traj.snapshots.size();
  out.tables.push_back(rep::moments_csv(traj));
  out.passed = vh.passed && traj.max_b2_norm <= spec.D + kBoundTolerance;
  return out;
}

Outcome run_decay(Json& cfg) {
  const auto spec = build_spec(cfg);
  const double t = number(cfg, "t");
  const auto times = grid_times(number(cfg, "snapshot_every"), t, "snapshot_every");
  auto sim = build_sim(cfg, t, times);
  const auto a = law_field(cfg, "init_a", spec.dimension);
  const auto b = law_field(cfg, "init_b", spec.dimension);
  const auto binning = build_binning(cfg, spec.dimension);
  const auto ta = simulate(spec, a, sim);
  if (!flag(cfg, "common_noise")) ++sim.stream;
  const auto tb = simulate(spec, b, sim);
  const auto series = tv_series(ta, tb, binning);
  Outcome out;
  out.body["spec"] = spec_json(spec);
  out.body["final_tv"] = series.back().second;
  out.tables.push_back(rep::tv_csv(series));
  try {
    const auto fit = fit_decay(series, number(cfg, "noise_floor"));
    out.body["fit"] = rep::to_json(fit);
    out.tables.push_back(rep::decay_csv(fit));
    out.passed = fit.theta > 0.0 && fit.theta_lower > 0.0;
  } catch (const DiagnosticError& e) {
    out.body["fit"] = Json{{"error", e.what()}};
    out.passed = false;
  }
  return out;
}

Outcome run_girsanov(Json& cfg) {
  const auto spec = build_spec(cfg);
  const auto mu0 = law_field(cfg, "mu0", spec.dimension);
  const auto nu0 = law_field(cfg, "nu0", spec.dimension);
  if (cfg["tv0"].is_null()) {
    const auto exact = exact_tv(mu0, nu0);
    if (!exact) throw UsageError("missing required field 'tv0': the initial laws have no closed-form distance");
    cfg["tv0"] = *exact;
  }
  GirsanovConfig g;
  g.times = numbers(cfg, "times");
  if (g.times.empty()) throw UsageError("field 'times': at least one time is required");
  g.simulation = build_sim(cfg, *std::max_element(g.times.begin(), g.times.end()), {});
  g.binning = build_binning(cfg, spec.dimension);
  g.calibration_pairs = count(cfg, "calibration_pairs");
  g.calibration_quantile = number(cfg, "calibration_quantile");
  const auto r = guarded([&] { return girsanov_bound_check(spec, mu0, nu0, number(cfg, "tv0"), g); });
  Outcome out;
  out.body["spec"] = spec_json(spec);
  out.body["girsanov"] = rep::to_json(r);
  out.tables.push_back(rep::girsanov_csv(r));
  out.passed = r.violations.empty();
  return out;
}

Outcome run_local_alpha(Json& cfg) {
  const auto spec = build_spec(cfg);
  LocalAlphaConfig c;
  c.R = number(cfg, "R");
  c.t = number(cfg, "t");
  c.n_sims = count(cfg, "n_sims");
  c.h = number(cfg, "h");
  c.binning = build_binning(cfg, spec.dimension);
  c.seed = static_cast<std::uint64_t>(integer(cfg, "seed"));
  c.workers = workers_of(cfg);
  if (cfg["grid"].is_null()) {
    Json g = Json::array();
    for (int axis = 0; axis < spec.dimension; ++axis) {
      for (double s : {-1.0, 1.0}) {
        Json p = Json::array();
        for (int k = 0; k < spec.dimension; ++k) p.push_back(k == axis ? s * c.R : 0.0);
        g.push_back(p);
      }
    }
    g.push_back(Json(std::vector<double>(static_cast<std::size_t>(spec.dimension), 0.0)));
    cfg["grid"] = g;
  }
  const Matrix pts = matrix(cfg, "grid");
  if (pts.cols() != spec.dimension) throw UsageError("field 'grid': points must have 'dimension' coordinates");
  for (Eigen::Index i = 0; i < pts.rows(); ++i) c.x_grid.push_back(pts.row(i).transpose());
  const auto r = guarded([&] { return estimate_local_alpha(spec.b1, spec.dimension, c); });
  Outcome out;
  out.body["spec"] = spec_json(spec);
  out.body["local_alpha"] = rep::to_json(r);
  if (r.alpha > 0.0) {
    const double eps0 = epsilon_zero(r.alpha, spec.r, spec.D);
    out.body["epsilon_zero"] = eps0;
    out.body["epsilon_within_epsilon_zero"] = spec.epsilon <= eps0;
  } else {
    out.body["epsilon_zero"] = nullptr;
  }
  if (text(cfg, "preset") == "ou" && spec.dimension == 1) {
    const auto& x = c.x_grid[r.worst_i];
    const auto& y = c.x_grid[r.worst_j];
    out.body["ou_exact_alpha_worst_pair"] = ou_exact_overlap(x[0], y[0], c.t);
  }
  out.passed = r.alpha > 0.0;
  return out;
}

Outcome run_lyapunov(Json& cfg) {
  const auto spec = build_spec(cfg);
  const double t = number(cfg, "t"), lag = number(cfg, "lag");
  const auto sim = build_sim(cfg, t, grid_times(lag, t, "lag"));
  const auto init = law_field(cfg, "init", spec.dimension);
  const auto traj = simulate(spec, init, sim);
  const WeightFunction v = guarded([&] { return WeightFunction(spec.r, spec.M); });
  const auto r = lyapunov_diagnostic(traj, v, lag, spec.r);
  Outcome out;
  out.body["spec"] = spec_json(spec);
  out.body["weight"] = Json{{"kappa", v.kappa()}, {"M", v.M()}, {"blend_start", v.blend_start()}};
  out.body["lyapunov"] = rep::to_json(r);
  out.tables.push_back(rep::lyapunov_csv(r));
  out.passed = r.bounded && (r.degenerate || r.gamma_hat < 1.0);
  return out;
}

// hm -----------------------------------------------------------------------------

Matrix reset_birth_death() {
  Matrix q = Matrix::Zero(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i) {
    q(i, 0) += 0.1;
    q(i, std::max<Eigen::Index>(i - 1, 0)) += 0.5;
    q(i, std::min<Eigen::Index>(i + 1, 4)) += 0.3;
    q(i, i) += 0.1;
  }
  return q;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Outcome run_hm(Json& cfg) {
  if (cfg["matrix"].is_null()) cfg["matrix"] = matrix_json(reset_birth_death());
  const Matrix q = matrix(cfg, "matrix");
  if (cfg["v"].is_null()) {
    Json v = Json::array();
    for (Eigen::Index i = 0; i < q.rows(); ++i) v.push_back(std::ldexp(1.0, static_cast<int>(i)));
    cfg["v"] = v;
  }
  const auto v_values = numbers(cfg, "v");
  if (static_cast<Eigen::Index>(v_values.size()) != q.rows()) {
    throw UsageError("field 'v': expected " + std::to_string(q.rows()) + " values");
  }
  const Vector v = Eigen::Map<const Vector>(v_values.data(), q.rows());
  const double gamma = number(cfg, "gamma"), K = number(cfg, "K");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("field 'gamma': must lie in [0, 1)");
  const auto kernel = guarded([&] { return markov_kernel(q); });
  if (cfg["alpha_local"].is_null()) {
    std::vector<Eigen::Index> sub;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] <= 4.0 * K / (1.0 - gamma)) sub.push_back(i);
    }
    cfg["alpha_local"] = sub.empty() ? 1.0 : matrix_overlap(q, sub);
  }
  const auto pairs = random_measure_pairs(q.rows(), count(cfg, "pairs"), static_cast<std::uint64_t>(integer(cfg, "seed")));
  Outcome out;
  try {
    const auto cert = guarded([&] {
      return certify_hm_contraction(kernel, v, gamma, K, number(cfg, "alpha_local"), default_beta_grid(), pairs,
                                    number(cfg, "tolerance"));
    });
    out.body = rep::to_json(cert);
    out.passed = cert.lambda_w < 1.0;
  } catch (const HMCertificationFailure& e) {
    out.body = Json{{"error", e.what()}};
    out.passed = false;
  }
  return out;
}

// driver -------------------------------------------------------------------------

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string default_output_dir() {
  if (const char* env = std::getenv("NLERG_OUTPUT_DIR"); env && *env) return env;
  return "nlerg-output";
}

int execute(const Command& cmd, const std::string& config_path, const std::string& output_dir) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  Json file_cfg;
  if (!config_path.empty()) {
    file_cfg = load_config_file(config_path);
    if (file_cfg.contains("command")) {
      if (file_cfg["command"] != cmd.path) {
        throw UsageError("config field 'command' is '" + file_cfg["command"].dump() + "', not '" + cmd.path + "'");
      }
      file_cfg.erase("command");
    }
  }
  Json cfg = cmd.params->resolve(file_cfg);

  Outcome outcome;
  try {
    outcome = cmd.run(cfg);
  } catch (const UsageError&) {
    throw;
  } catch (const DiagnosticError& e) {
    outcome = Outcome{false, Json{{"error", e.what()}}, {}};
  } catch (const SimulationError& e) {
    outcome = Outcome{false, Json{{"error", e.what()}, {"step", e.step()}}, {}};
  } catch (const EvolutionError& e) {
    outcome = Outcome{false, Json{{"error", e.what()}, {"step", e.step()}}, {}};
  } catch (const FalsificationError& e) {
    outcome = Outcome{false, Json{{"error", e.what()}}, {}};
  }

  Json resolved;
  resolved["command"] = cmd.path;
  for (auto it = cfg.begin(); it != cfg.end(); ++it) resolved[it.key()] = it.value();

  const std::filesystem::path dir(output_dir);
  std::string kind = cmd.path;
  std::replace(kind.begin(), kind.end(), ' ', '-');
  rep::write_file((dir / "report.json").string(), rep::dump(rep::envelope(kind, outcome.passed, outcome.body)));
  rep::write_file((dir / "resolved_config.json").string(), rep::dump(resolved));
  Json files = Json::array({"report.json", "resolved_config.json"});
  for (const auto& t : outcome.tables) {
    rep::write_file((dir / (t.name + ".csv")).string(), rep::to_csv(t));
    files.push_back(t.name + ".csv");
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  Json meta;
  meta["schema"] = "nlerg-metadata/1";
  meta["version"] = kVersion;
  meta["command"] = cmd.path;
  meta["started_utc"] = started_utc;
  meta["elapsed_seconds"] = elapsed;
  meta["output_dir"] = std::filesystem::absolute(dir).string();
  meta["files"] = files;
  rep::write_file((dir / "metadata.json").string(), rep::dump(meta));

  std::cout << kind << ": " << (outcome.passed ? "pass" : "fail") << " (" << (dir / "report.json").string() << ")\n";
  return outcome.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlerg: ergodicity diagnostics for nonlinear Markov chains and mean-field SDEs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir = default_output_dir();
  std::vector<Command> commands;

  auto add = [&](CLI::App* parent, const std::string& path, const std::string& name, const std::string& help,
                 std::vector<Param> params, Runner run) {
    CLI::App* sub = parent->add_subcommand(name, help);
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--config", config_path, "JSON config; flags override its fields");
    sub->add_option("-o,--output-dir", output_dir, "output directory (default $NLERG_OUTPUT_DIR or ./nlerg-output)");
    Command c;
    c.path = path;
    c.app = sub;
    c.params = std::make_unique<ParamSet>(*sub, std::move(params));
    c.run = std::move(run);
    commands.push_back(std::move(c));
  };

  add(&app, "chain", "chain", "certify, propagate and rate-check a nonlinear chain", chain_params(), run_chain);

  CLI::App* cx = app.add_subcommand("counterexample", "replay the optimality constructions");
  cx->require_subcommand(1);
  add(cx, "counterexample oscillation", "oscillation", "period-two oscillation",
      {{"gamma", Kind::number, 0.5, "clamp"},
       {"a", Kind::number, 0.3, "initial mass on state 1"},
       {"steps", Kind::integer, 100, "steps"},
       {"grid_resolution", Kind::integer, 50, "grid resolution for alpha"}},
      run_oscillation);
  add(cx, "counterexample continuum", "continuum", "continuum of invariant measures",
      {{"alpha", Kind::number, 0.2, "alpha"},
       {"lambda", Kind::number, 0.8, "lambda"},
       {"a_samples", Kind::number_list, nullptr, "values of a to test; default spans the interval and both sides"},
       {"steps", Kind::integer, 100, "steps"},
       {"grid_resolution", Kind::integer, 50, "grid resolution"}},
      run_continuum);
  add(cx, "counterexample no-invariant", "no-invariant", "level-by-level stationarity contradiction",
      {{"alpha", Kind::number, 0.2, "alpha"},
       {"lambda", Kind::number, 0.5, "lambda"},
       {"n_max", Kind::integer, 50, "largest level"}},
      run_no_invariant);
  add(cx, "counterexample no-convergence", "no-convergence", "evolution of the truncated chain",
      {{"alpha", Kind::number, 0.2, "alpha"},
       {"lambda", Kind::number, 0.5, "lambda"},
       {"truncation", Kind::integer, 30, "states"},
       {"steps", Kind::integer, 200, "steps"},
       {"mu0", Kind::number_list, nullptr, "initial law; default delta at state 1"},
       {"workers", Kind::integer, 1, "worker threads"}},
      run_no_convergence);

  CLI::App* smve = app.add_subcommand("smve", "mean-field SDE experiments");
  smve->require_subcommand(1);
  add(smve, "smve simulate", "simulate", "simulate one ensemble",
      with(smve_common(), {{"init", Kind::string, "gaussian:2:1", "initial law"},
                           {"t", Kind::number, 10.0, "horizon"},
                           {"snapshot_every", Kind::number, 0.5, "snapshot spacing"}}),
      run_simulate);
  add(smve, "smve decay", "decay", "TV decay between two ensembles",
      with(smve_common(), {{"init_a", Kind::string, "dirac:0", "first initial law"},
                           {"init_b", Kind::string, "gaussian:2:1", "second initial law"},
                           {"t", Kind::number, 20.0, "horizon"},
                           {"snapshot_every", Kind::number, 0.5, "snapshot spacing"},
                           {"noise_floor", Kind::number, 1e-3, "TV values at or below this are not fitted"},
                           {"common_noise", Kind::boolean, true, "drive both ensembles with the same noise"}}),
      run_decay);
  add(smve, "smve girsanov-check", "girsanov-check", "TV growth bound under the interaction",
      with(smve_common(), {{"mu0", Kind::string, "dirac:0", "first initial law"},
                           {"nu0", Kind::string, "atoms:0@0.9;1@0.1", "second initial law"},
                           {"tv0", Kind::number, nullptr, "initial distance; default exact when available"},
                           {"times", Kind::number_list, Json::array({0.5, 1.0, 2.0}), "check times"},
                           {"calibration_pairs", Kind::integer, 20, "same-law pairs for the allowance"},
                           {"calibration_quantile", Kind::number, 0.99, "allowance quantile"}}),
      run_girsanov);
  add(smve, "smve local-alpha", "local-alpha", "local overlap of the unperturbed diffusion",
      with(smve_common(), {{"R", Kind::number, 1.0, "ball radius"},
                           {"t", Kind::number, 1.0, "transition time"},
                           {"n_sims", Kind::integer, 100'000, "paths per start point"},
                           {"grid", Kind::matrix, nullptr, "start points, one per row; default 0 and +-R on each axis"}}),
      run_local_alpha);
  add(smve, "smve lyapunov", "lyapunov", "Lyapunov drift diagnostic",
      with(smve_common(), {{"init", Kind::string, "gaussian:2:1", "initial law"},
                           {"t", Kind::number, 20.0, "horizon"},
                           {"lag", Kind::number, 1.0, "regression lag"}}),
      run_lyapunov);

  add(&app, "hm", "hm", "weighted-TV contraction certificate for a fixed matrix",
      {{"matrix", Kind::matrix, nullptr, "transition matrix; default a 5-state birth-death chain with resets"},
       {"v", Kind::number_list, nullptr, "Lyapunov function; default 2^i"},
       {"gamma", Kind::number, 0.8, "drift factor"},
       {"K", Kind::number, 2.0, "drift constant"},
       {"alpha_local", Kind::number, nullptr, "local overlap; default computed on the sublevel set"},
       {"pairs", Kind::integer, 1000, "validation pairs"},
       {"seed", Kind::integer, 1, "seed for validation pairs"},
       {"tolerance", Kind::number, 1e-10, "validation tolerance"}},
      run_hm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      return execute(cmd, config_path, output_dir);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  std::cerr << app.help();
  return 2;
}

// Acceptance run: one PASS/FAIL line per criterion, report files per criterion,
// then a full rerun compared byte for byte.
//
// usage: acceptance [output-dir]   (default ./acceptance-output)

#include "nlerg/counterexamples.hpp"
#include "nlerg/ergodicity.hpp"
#include "nlerg/kernels.hpp"
#include "nlerg/mckean_vlasov.hpp"
#include "nlerg/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace rep = nlerg::report;
using namespace nlerg;
using Json = rep::Json;

namespace {

struct Outcome {
  bool passed = true;
  Json body = Json::object();
  std::vector<rep::CsvTable> tables;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      if (!note.empty()) note += "; ";
      note += what;
    }
  }
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

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

Matrix cyclic_five() {
  Matrix q = Matrix::Constant(5, 5, 0.1);
  for (Eigen::Index i = 0; i < 5; ++i) q(i, (i + 1) % 5) += 0.5;
  return q;
}

Matrix two_state(double p, double q) {
  Matrix m(2, 2);
  m << 1 - p, p, q, 1 - q;
  return m;
}

std::vector<NonlinearKernel> mixture_kernels() {
  return {mixture_kernel(two_state(0.3, 0.4), 0.2, "mixture-2a"),
          mixture_kernel(two_state(0.5, 0.45), 0.4, "mixture-2b"),
          mixture_kernel(cyclic_five(), 0.3, "mixture-5")};
}

Json claims_summary(const CounterexampleReport& r) {
  return Json{{"construction", r.construction}, {"all_passed", r.all_passed()}, {"claims", r.claims.size()}};
}

// 1 ----------------------------------------------------------------------------

Outcome ac1() {
  Outcome out;
  Json runs = Json::array();
  for (double gamma : {0.1, 0.4, 0.8}) {
    for (double a : linspace(gamma / 2, 1 - gamma / 2, 5)) {
      const auto r = verify_oscillation(gamma, a, 100);
      runs.push_back(rep::to_json(r));
      out.require(r.all_passed(), "oscillation gamma=" + rep::format_double(gamma) + " a=" + rep::format_double(a));
    }
  }
  out.body["runs"] = runs;
  return out;
}

// 2 ----------------------------------------------------------------------------

Outcome ac2() {
  Outcome out;
  const std::vector<double> as{0.125, 0.3, 0.5, 0.7, 0.875};
  const auto r = verify_continuum(0.2, 0.8, as, 100);
  out.body["continuum"] = rep::to_json(r);
  out.require(r.all_passed(), "continuum claims");

  const auto kernel = continuum_kernel(0.2, 0.8);
  double worst_residual = 0.0, worst_gap = 0.0;
  std::vector<Trajectory> trajs;
  for (double a : as) {
    const auto mu = DiscreteMeasure::two_point(a);
    worst_residual = std::max(worst_residual, verify_invariant(kernel, mu));
    trajs.push_back(evolve(kernel, mu, 100));
  }
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t j = i + 1; j < as.size(); ++j) {
      for (std::size_t n = 0; n <= 100; ++n) {
        const double d = tv_distance(trajs[i].measures[n], trajs[j].measures[n]);
        worst_gap = std::max(worst_gap, std::abs(d - 2 * std::abs(as[i] - as[j])));
      }
    }
  }
  out.body["worst_invariance_residual"] = worst_residual;
  out.body["worst_distance_deviation"] = worst_gap;
  out.require(worst_residual < 1e-12, "invariance residual");
  out.require(worst_gap < 1e-12, "constant pairwise distance");
  return out;
}

// 3 ----------------------------------------------------------------------------

Outcome ac3() {
  Outcome out;
  Json runs = Json::array();
  for (double alpha : {0.05, 0.1, 0.2, 0.3, 0.4}) {
    for (double lambda : {0.5, 0.6, 0.7, 0.8, 0.9}) {
      const auto r = verify_no_invariant_recursion(alpha, lambda, 50);
      runs.push_back(claims_summary(r));
      out.require(r.all_passed(),
                  "no-invariant alpha=" + rep::format_double(alpha) + " lambda=" + rep::format_double(lambda));
    }
  }
  out.body["runs"] = runs;
  return out;
}

// 4 ----------------------------------------------------------------------------

Outcome ac4() {
  Outcome out;
  Json runs = Json::array();
  std::uint64_t seed = 4001;
  for (const auto& k : mixture_kernels()) {
    const MeasureGrid grid(k.space_size(), MeasureGrid::default_resolution(k.space_size()));
    const auto cert = certify(k, grid);
    const auto pairs = random_measure_pairs(k.space_size(), 10'000, seed++);
    const auto r = check_contraction_inequality(k, cert.alpha_hat, cert.lambda_hat, pairs, 1e-10);
    runs.push_back(Json{{"kernel", k.label()}, {"certificate", rep::to_json(cert)}, {"contraction", rep::to_json(r)}});
    out.require(cert.lambda_hat <= cert.alpha_hat, k.label() + ": lambda_hat > alpha_hat");
    out.require(r.pairs_checked == 10'000 && r.violations.empty(), k.label() + ": contraction violated");
  }
  out.body["runs"] = runs;
  return out;
}

// 5 ----------------------------------------------------------------------------

Outcome ac5() {
  Outcome out;
  Json runs = Json::array();
  auto run = [&](const NonlinearKernel& k, bool markov) {
    const MeasureGrid grid(k.space_size(), MeasureGrid::default_resolution(k.space_size()));
    const auto cert = certify(k, grid);
    out.require(cert.regime == Regime::fast, k.label() + ": not in the fast regime");
    if (cert.regime != Regime::fast) return;
    try {
      const auto r = check_rate(k, cert, DiscreteMeasure::dirac(k.space_size(), k.space_size() - 1), 200);
      runs.push_back(Json{{"kernel", k.label()}, {"rate", rep::to_json(r)}});
      out.tables.push_back(rep::rate_csv(r));
      out.tables.back().name = "rate-" + k.label();
      out.require(r.violations.empty(), k.label() + ": rate violations");
      if (markov) {
        out.require(cert.lambda_hat == 0.0, k.label() + ": lambda_hat != 0");
        double worst = 0.0;
        for (std::size_t n = 0; n < r.bound.size(); ++n) {
          worst = std::max(worst, std::abs(r.bound[n] - 2 * std::pow(1 - cert.alpha_hat, static_cast<double>(n))));
        }
        out.require(worst < 1e-12, k.label() + ": bound is not 2(1-alpha)^n");
      }
    } catch (const std::exception& e) {
      out.require(false, k.label() + ": " + e.what());
    }
  };
  for (const auto& k : mixture_kernels()) run(k, false);
  run(markov_kernel(example_markov_matrix(), "markov-example"), true);
  run(markov_kernel(reset_birth_death(), "markov-reset"), true);
  out.body["runs"] = runs;
  return out;
}

// 6 ----------------------------------------------------------------------------

Outcome ac6() {
  Outcome out;
  const Matrix q = reset_birth_death();
  Vector v(5);
  for (Eigen::Index i = 0; i < 5; ++i) v[i] = std::ldexp(1.0, static_cast<int>(i));
  const double gamma = 0.8, K = 2.0;
  const Vector drift = q * v - gamma * v - Vector::Constant(5, K);
  out.body["drift_max_excess"] = drift.maxCoeff();
  out.require(drift.maxCoeff() <= 0.0, "drift QV <= 0.8V + 2");

  std::vector<Eigen::Index> sub;
  for (Eigen::Index i = 0; i < 5; ++i) {
    if (v[i] <= 4 * K / (1 - gamma)) sub.push_back(i);
  }
  try {
    const auto cert = certify_hm_contraction(markov_kernel(q, "reset-birth-death"), v, gamma, K,
                                             matrix_overlap(q, sub), default_beta_grid(),
                                             random_measure_pairs(5, 1000, 6001), 1e-10);
    out.body["certificate"] = rep::to_json(cert);
    out.require(cert.lambda_w < 1.0, "lambda_w >= 1");
    out.require(cert.validation_pairs == 1000, "validation pairs");
  } catch (const std::exception& e) {
    out.require(false, e.what());
  }
  return out;
}

// 7 ----------------------------------------------------------------------------

Outcome ac7() {
  Outcome out;
  SimulationConfig sim;
  sim.particles = 10'000;
  sim.h = 0.01;
  sim.horizon = 10.0;
  sim.seed = 7001;
  const auto traj = simulate(ou_spec(1), DiracLaw{Point::Zero(1)}, sim);
  const Eigen::RowVectorXd x = traj.snapshots.back().positions.row(0);
  const double n = static_cast<double>(x.size());
  const double mean = x.mean();
  const Eigen::RowVectorXd c = x.array() - mean;
  const double var = c.squaredNorm() / (n - 1);
  const double m4 = c.array().pow(4).mean();
  const double se_var = std::sqrt((m4 - var * var) / n);
  const double se_mean = std::sqrt(var / n);
  out.body["variance"] = Json{{"value", var}, {"standard_error", se_var}, {"target", 0.5}};
  out.body["mean"] = Json{{"value", mean}, {"standard_error", se_mean}, {"target", 0.0}};
  out.require(std::abs(var - 0.5) <= 3 * se_var, "variance outside 3 SE of 1/2");
  out.require(std::abs(mean) <= 3 * se_mean, "mean outside 3 SE of 0");
  out.tables.push_back(rep::moments_csv(traj));

  LocalAlphaConfig c7;
  c7.R = 1.0;
  c7.t = 1.0;
  c7.n_sims = 100'000;
  c7.h = 0.01;
  c7.x_grid = {Point::Constant(1, -1.0), Point::Constant(1, 0.0), Point::Constant(1, 1.0)};
  c7.seed = 7002;
  const auto la = estimate_local_alpha(ou_spec(1).b1, 1, c7);
  const double oracle = ou_exact_overlap(-1.0, 1.0, 1.0);
  out.body["local_alpha"] = rep::to_json(la);
  out.body["local_alpha_oracle"] = oracle;
  out.require(std::abs(la.alpha - oracle) <= 0.05, "local alpha more than 0.05 from the oracle");
  return out;
}

// 8 ----------------------------------------------------------------------------

Outcome ac8() {
  Outcome out;
  Json runs = Json::array();
  const InitialLaw mu0 = DiracLaw{Point::Zero(1)};
  const InitialLaw nu0 = AtomicLaw{{Point::Zero(1), Point::Constant(1, 1.0)}, {0.9, 0.1}};
  const auto tv0 = exact_tv(mu0, nu0);
  out.require(tv0 && std::abs(*tv0 - 0.2) < 1e-15, "tv0 != 0.2");
  std::uint64_t seed = 8001;
  const std::vector<std::pair<double, std::string>> grid{{0.0, "0"}, {0.01, "0.01"}, {0.05, "0.05"}};
  for (const auto& [eps, tag] : grid) {
    const auto spec = vh_spec(1.0, 1.0, 1.0, eps);
    GirsanovConfig g;
    g.times = {0.5, 1.0, 2.0};
    g.simulation.particles = 10'000;
    g.simulation.h = 0.01;
    g.simulation.horizon = 2.0;
    g.simulation.seed = seed++;
    g.calibration_pairs = 20;
    g.calibration_quantile = 0.99;
    const auto r = girsanov_bound_check(spec, mu0, nu0, 0.2, g);
    runs.push_back(rep::to_json(r));
    out.tables.push_back(rep::girsanov_csv(r));
    out.tables.back().name = "girsanov-eps-" + tag;
    out.require(r.violations.empty(), "violations at epsilon=" + tag);
  }
  out.body["runs"] = runs;
  return out;
}

// 9 ----------------------------------------------------------------------------

Outcome ac9() {
  Outcome out;
  const double r = 1.0, M = 1.0, D = 1.0, eps = 0.05;
  out.require(eps <= r / (2 * D), "epsilon > r/(2D)");
  const auto spec = vh_spec(r, M, D, eps);
  SimulationConfig sim;
  sim.particles = 10'000;
  sim.h = 0.01;
  sim.horizon = 20.0;
  sim.seed = 9001;
  for (int k = 0; k <= 40; ++k) sim.snapshot_times.push_back(0.5 * k);
  const InitialLaw a = DiracLaw{Point::Zero(1)};
  const InitialLaw b = GaussianLaw{Point::Constant(1, 2.0), 1.0};
  const auto ta = simulate(spec, a, sim);
  const auto tb = simulate(spec, b, sim);
  const auto binning = Binning::default_for(1);
  const auto series = tv_series(ta, tb, binning);
  out.tables.push_back(rep::tv_csv(series));
  out.body["final_tv"] = series.back().second;
  out.require(series.back().first == 20.0 && series.back().second < 0.05, "TV at T = 20 not below 0.05");
  try {
    const auto fit = fit_decay(series, 1e-3);
    out.body["fit"] = rep::to_json(fit);
    out.tables.push_back(rep::decay_csv(fit));
    out.require(fit.theta > 0.0 && fit.theta_lower > 0.0, "theta or its lower bound not positive");
  } catch (const DiagnosticError& e) {
    out.require(false, e.what());
  }

  SimulationConfig lsim = sim;
  lsim.snapshot_times.clear();
  for (int k = 0; k <= 20; ++k) lsim.snapshot_times.push_back(k);
  const auto lt = simulate(spec, b, lsim);
  const auto ly = lyapunov_diagnostic(lt, WeightFunction(r, M), 1.0, r);
  out.body["lyapunov"] = rep::to_json(ly);
  out.tables.push_back(rep::lyapunov_csv(ly));
  out.require(!ly.degenerate && ly.gamma_hat < 1.0, "gamma_hat >= 1");
  out.require(ly.bounded, "V-moments exceed the fitted bound");
  return out;
}

// driver -----------------------------------------------------------------------

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"AC1", "oscillating chain: period two, constant distance to pi", 1, ac1},
      {"AC2", "continuum of invariant measures", 1, ac2},
      {"AC3", "no invariant measure: recursion contradiction", 1, ac3},
      {"AC4", "contraction inequality on mixture kernels", 10, ac4},
      {"AC5", "rate bounds, fast regime and Markov", 5, ac5},
      {"AC6", "weighted-TV certifier on the reset birth-death chain", 5, ac6},
      {"AC7", "OU stationary variance and local alpha", 120, ac7},
      {"AC8", "Gronwall TV bound with calibrated allowance", 300, ac8},
      {"AC9", "perturbed VH ensembles merge", 600, ac9},
  };
  return all;
}

struct RunResult {
  bool passed;
  double seconds;
  std::string note;
};

RunResult run_one(const Criterion& c, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = c.run();
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json body = out.body;
  body["criterion"] = c.title;
  if (!out.note.empty()) body["failures"] = out.note;
  rep::write_file((dir / "report.json").string(), rep::dump(rep::envelope("acceptance-" + c.id, out.passed, body)));
  for (const auto& t : out.tables) rep::write_file((dir / (t.name + ".csv")).string(), rep::to_csv(t));
  return {out.passed, seconds, out.note};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Files in a and b with differing content, or present in only one.
std::vector<std::string> differences(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diff;
  auto check = [&](const fs::path& from, const fs::path& other) {
    for (const auto& e : fs::recursive_directory_iterator(from)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), from);
      if (!fs::exists(other / rel) || slurp(e.path()) != slurp(other / rel)) diff.push_back(rel.string());
    }
  };
  check(a, b);
  check(b, a);
  std::sort(diff.begin(), diff.end());
  diff.erase(std::unique(diff.begin(), diff.end()), diff.end());
  return diff;
}

void print(const std::string& id, bool passed, const std::string& title, double seconds, const std::string& note) {
  std::printf("%s %s  %s (%.2f s)%s%s\n", id.c_str(), passed ? "PASS" : "FAIL", title.c_str(), seconds,
              note.empty() ? "" : "  -- ", note.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance-output");
  fs::remove_all(root);
  bool all = true;

  for (const auto& c : criteria()) {
    const auto r = run_one(c, root / "run1" / c.id);
    const bool in_budget = r.seconds < c.budget_seconds;
    std::string note = r.note;
    if (!in_budget) note += (note.empty() ? "" : "; ") + std::string("over the runtime budget");
    print(c.id, r.passed && in_budget, c.title, r.seconds, note);
    all = all && r.passed && in_budget;
  }

  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : criteria()) run_one(c, root / "run2" / c.id);
  const auto diff = differences(root / "run1", root / "run2");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string note;
  for (const auto& d : diff) note += (note.empty() ? "differs: " : ", ") + d;
  print("AC10", diff.empty(), "rerun with the same seeds is byte-identical", seconds, note);
  all = all && diff.empty();

  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}

#include "nlerg/counterexamples.hpp"

#include <algorithm>
#include <cmath>

namespace nlerg {

bool CounterexampleReport::all_passed() const {
  return std::all_of(claims.begin(), claims.end(), [](const Claim& c) { return c.passed; });
}

CounterexampleReport verify_oscillation(double gamma, double a, std::size_t n_steps, int grid_resolution) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("verify_oscillation: gamma must lie in (0, 1)");
  if (!(a >= gamma / 2 && a <= 1.0 - gamma / 2)) {
    throw std::invalid_argument("verify_oscillation: a must lie in [gamma/2, 1 - gamma/2]");
  }
  const auto kernel = oscillating_kernel(gamma);
  const auto traj = evolve(kernel, DiscreteMeasure::two_point(a), n_steps);
  const auto pi = DiscreteMeasure::uniform(2);
  const auto even = DiscreteMeasure::two_point(a);
  const auto odd = DiscreteMeasure::two_point(1.0 - a);
  const double expected_distance = 2.0 * std::abs(a - 0.5);

  double alternation = 0.0, period = 0.0, distance = 0.0;
  std::vector<double> distances;
  for (std::size_t n = 0; n < traj.measures.size(); ++n) {
    const auto& mu = traj.measures[n];
    alternation = std::max(alternation, tv_distance(mu, n % 2 == 0 ? even : odd));
    if (n + 2 < traj.measures.size()) period = std::max(period, tv_distance(traj.measures[n + 2], mu));
    const double d = tv_distance(mu, pi);
    distances.push_back(d);
    distance = std::max(distance, std::abs(d - expected_distance));
  }
  const double alpha_hat = estimate_alpha(kernel, MeasureGrid(2, grid_resolution));
  const double pi_residual = verify_invariant(kernel, pi);

  CounterexampleReport r{"oscillation", {{"gamma", gamma}, {"a", a}, {"steps", static_cast<double>(n_steps)}}, {}, {}};
  r.claims.push_back({"alternation", "mu_n = a d1 + (1-a) d2 for even n and (1-a) d1 + a d2 for odd n",
                      alternation <= kExactTolerance, alternation, "max d_TV to the predicted measure"});
  r.claims.push_back({"period-two", "mu_{n+2} = mu_n", period <= kExactTolerance, period, "max d_TV(mu_{n+2}, mu_n)"});
  r.claims.push_back({"constant-distance", "d_TV(mu_n, pi) = 2|a - 1/2| for all n", distance <= kExactTolerance,
                      distance, "max |d_TV(mu_n, pi) - 2|a - 1/2||"});
  r.claims.push_back({"pi-stationary", "pi = (d1 + d2)/2 is stationary", pi_residual <= kExactTolerance,
                      pi_residual, "d_TV(P_pi pi, pi)"});
  r.claims.push_back({"overlap-equals-gamma", "the chain satisfies the global condition with alpha = gamma",
                      std::abs(alpha_hat - gamma) <= kExactTolerance, alpha_hat,
                      "grid estimate of alpha at resolution " + std::to_string(grid_resolution)});
  r.series.emplace_back("distance_to_pi", std::move(distances));
  return r;
}

CounterexampleReport verify_continuum(double alpha, double lambda, const std::vector<double>& a_samples,
                                      std::size_t n_steps, int grid_resolution) {
  const auto kernel = continuum_kernel(alpha, lambda);  // validates 0 < alpha < lambda <= 1
  const double lo = alpha / (2 * lambda), hi = 1.0 - alpha / (2 * lambda);
  CounterexampleReport r{"continuum",
                         {{"alpha", alpha}, {"lambda", lambda}, {"interval_lower", lo}, {"interval_upper", hi}},
                         {},
                         {}};

  std::vector<double> inside;
  std::vector<double> residuals;
  for (double a : a_samples) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("verify_continuum: a samples must lie in [0, 1]");
    const double res = verify_invariant(kernel, DiscreteMeasure::two_point(a));
    residuals.push_back(res);
    const bool in_interval = a >= lo && a <= hi;
    if (in_interval) {
      inside.push_back(a);
      r.claims.push_back({"stationary(a=" + std::to_string(a) + ")", "mu(a) = a d1 + (1-a) d2 is stationary for a in I",
                          res < kExactTolerance, res, "d_TV(P_mu mu, mu)"});
    } else {
      r.claims.push_back({"not-stationary(a=" + std::to_string(a) + ")", "mu(a) is not stationary for a outside I",
                          res > kExactTolerance, res, "d_TV(P_mu mu, mu)"});
    }
  }
  r.series.emplace_back("residuals", residuals);

  std::sort(inside.begin(), inside.end());
  inside.erase(std::unique(inside.begin(), inside.end()), inside.end());
  r.claims.push_back({"multiple-stationary", "the chain has more than one stationary measure", inside.size() >= 2,
                      static_cast<double>(inside.size()), "distinct stationary samples"});

  std::vector<Trajectory> trajs;
  for (double a : inside) trajs.push_back(evolve(kernel, DiscreteMeasure::two_point(a), n_steps));
  double worst = 0.0;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    for (std::size_t j = i + 1; j < inside.size(); ++j) {
      const double expected = 2.0 * std::abs(inside[i] - inside[j]);
      for (std::size_t n = 0; n <= n_steps; ++n) {
        worst = std::max(worst, std::abs(tv_distance(trajs[i].measures[n], trajs[j].measures[n]) - expected));
      }
    }
  }
  r.claims.push_back({"no-merging", "d_TV(X_n^{mu(a1)}, X_n^{mu(a2)}) = 2|a1 - a2| does not tend to 0",
                      worst <= kExactTolerance, worst, "max deviation from 2|a1 - a2| over all steps"});

  const MeasureGrid grid(2, grid_resolution);
  const double alpha_hat = estimate_alpha(kernel, grid);
  const double lambda_hat = estimate_lambda(kernel, grid);
  r.claims.push_back({"global-overlap", "condition holds with the given alpha", alpha_hat >= alpha - kExactTolerance,
                      alpha_hat, "grid estimate of alpha"});
  r.claims.push_back({"measure-lipschitz", "condition holds with the given lambda",
                      lambda_hat <= lambda + kExactTolerance, lambda_hat, "grid estimate of lambda"});
  return r;
}

CounterexampleReport verify_no_invariant_recursion(double alpha, double lambda, std::size_t n_max) {
  if (!(alpha > 0.0 && alpha < lambda && lambda <= 1.0)) {
    throw std::invalid_argument("verify_no_invariant_recursion: requires 0 < alpha < lambda <= 1");
  }
  if (n_max < 2) throw std::invalid_argument("verify_no_invariant_recursion: n_max must be >= 2");

  CounterexampleReport r{"no-invariant",
                         {{"alpha", alpha}, {"lambda", lambda}, {"n_max", static_cast<double>(n_max)}},
                         {},
                         {}};
  const bool boundary = lambda == 1.0;

  // Level 1: lambda mu({1}) >= alpha. Stationarity at j = 1 reads
  // mu({1}) = lambda mu({1}), i.e. (1 - lambda) mu({1}) = 0.
  if (!boundary) {
    // The defect (1 - lambda) mu({1}) is smallest at mu({1}) = alpha / lambda.
    const double defect = (1.0 - lambda) * (alpha / lambda);
    r.claims.push_back({"level-1", "if mu({1}) >= alpha/lambda then stationarity forces mu({1}) = 0",
                        defect > kExactTolerance, defect,
                        "min over admissible mu({1}) of the stationarity defect at j = 1"});
  } else {
    // At lambda = 1 every row equals nu whenever nu({1}) >= alpha, so such nu
    // are invariant. Exhibit delta_1 on the (exact, shift-free) truncated chain.
    const auto kernel = no_invariant_kernel(alpha, lambda, 3);
    const double res = verify_invariant(kernel, DiscreteMeasure::dirac(3, 0));
    r.claims.push_back({"level-1", "if mu({1}) >= alpha/lambda then stationarity forces mu({1}) = 0",
                        res > kExactTolerance, res,
                        "boundary case lambda = 1: the stationarity equation is an identity and delta_1 "
                        "is invariant (residual shown)"});
  }

  // Levels n >= 2: mu({1}) = alpha, mu({i}) = alpha (1-lambda)^(i-1) for i < n;
  // stationarity at j = n gives
  //   (1 - lambda) mu({n}) = lambda mu({1..n-1}) - alpha + (1 - lambda) mu({n-1}).
  std::vector<double> solved, required;
  double worst = 0.0;
  bool all_ok = true;
  for (std::size_t n = 2; n <= n_max; ++n) {
    double cum = 0.0, prev = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      prev = alpha * std::pow(1.0 - lambda, static_cast<double>(i - 1));
      cum += prev;
    }
    // n(mu) = n needs lambda mu({1..n}) >= alpha, i.e. mu({n}) >= (alpha - lambda mu({1..n-1})) / lambda,
    // which equals alpha (1-lambda)^(n-1) / lambda (closed form avoids cancellation).
    const double lower = alpha * std::pow(1.0 - lambda, static_cast<double>(n - 1)) / lambda;
    if (!boundary) {
      const double mass = (lambda * cum - alpha + (1.0 - lambda) * prev) / (1.0 - lambda);
      solved.push_back(mass);
      required.push_back(lower);
      worst = std::max(worst, std::abs(mass));
      // Contradiction: mu({n}) is 0 but n(mu) = n requires mu({n}) > 0.
      all_ok = all_ok && std::abs(mass) <= kExactTolerance && lower > 0.0;
    } else {
      // mu({1}) = alpha already gives lambda mu({1..n-1}) >= alpha, so n(mu) < n.
      solved.push_back(std::numeric_limits<double>::quiet_NaN());
      required.push_back(lower);
      worst = std::max(worst, lower);
      all_ok = all_ok && lower <= kExactTolerance;
    }
  }
  r.claims.push_back(
      {"levels-2-to-n_max",
       "for 2 <= n(mu) <= n_max the stationarity equations force mu({n(mu)}) = 0, contradicting mu({n(mu)}) > 0",
       all_ok, worst,
       boundary ? "lambda = 1: the level definition itself is violated (witness: max (alpha - lambda mu({1..n-1}))/lambda)"
                : "max |solved mu({n})|"});
  r.series.emplace_back("solved_mass", std::move(solved));
  r.series.emplace_back("required_lower_bound", std::move(required));
  return r;
}

DiscreteMeasure recursion_profile(double alpha, double lambda, Eigen::Index n, Eigen::Index truncation) {
  if (n < 1 || n > truncation) throw std::invalid_argument("recursion_profile: need 1 <= n <= truncation");
  Vector p = Vector::Zero(truncation);
  double cum = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    p[i - 1] = alpha * std::pow(1.0 - lambda, static_cast<double>(i - 1));
    cum += p[i - 1];
  }
  if (cum >= 1.0) throw std::invalid_argument("recursion_profile: profile mass exceeds 1");
  p[n - 1] = 1.0 - cum;
  return DiscreteMeasure(std::move(p));
}

NoConvergenceDemo demonstrate_no_convergence(double alpha, double lambda, Eigen::Index truncation,
                                             const DiscreteMeasure& mu0, std::size_t steps) {
  const auto kernel = no_invariant_kernel(alpha, lambda, truncation);
  NoConvergenceDemo demo{evolve(kernel, mu0, steps), {}, {}, {}};
  double first_mass_error = 0.0;
  std::vector<double> first_mass;
  for (std::size_t k = 0; k < demo.trajectory.measures.size(); ++k) {
    const auto& mu = demo.trajectory.measures[k];
    demo.levels.push_back(no_invariant_level(mu, alpha, lambda));
    demo.residuals.push_back(verify_invariant(kernel, mu));
    first_mass.push_back(mu[0]);
    if (k + 1 < demo.trajectory.measures.size()) {
      const double predicted = std::max(lambda * mu[0], alpha);
      first_mass_error = std::max(first_mass_error, std::abs(demo.trajectory.measures[k + 1][0] - predicted));
    }
  }
  auto& r = demo.report;
  r.construction = "no-convergence";
  r.parameters = {{"alpha", alpha},
                  {"lambda", lambda},
                  {"truncation", static_cast<double>(truncation)},
                  {"steps", static_cast<double>(steps)}};
  r.claims.push_back({"first-state-mass", "mu_{k+1}({1}) = max(lambda mu_k({1}), alpha)",
                      first_mass_error <= kExactTolerance, first_mass_error, "max deviation over the run"});
  const double final_residual = demo.residuals.empty() ? 0.0 : demo.residuals.back();
  r.claims.push_back({"illustrative-final-residual",
                      "informational: the truncated chain may have spurious near-fixed points; "
                      "verify_no_invariant_recursion is the authoritative check",
                      true, final_residual, "d_TV(P_mu mu, mu) at the last step"});
  std::vector<double> levels(demo.levels.begin(), demo.levels.end());
  r.series.emplace_back("level", std::move(levels));
  r.series.emplace_back("first_state_mass", std::move(first_mass));
  r.series.emplace_back("step_distance", demo.trajectory.step_distances);
  r.series.emplace_back("residual", demo.residuals);
  return demo;
}

}  // namespace nlerg

#pragma once

#include "nlerg/ergodicity.hpp"

#include <string>
#include <utility>
#include <vector>

namespace nlerg {

struct Claim {
  std::string name;       // short identifier
  std::string statement;  // the mathematical statement being instantiated
  bool passed = false;
  double witness = 0.0;   // the number that decides the claim
  std::string detail;
};

struct CounterexampleReport {
  std::string construction;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<Claim> claims;
  std::vector<std::pair<std::string, std::vector<double>>> series;

  bool all_passed() const;
};

inline constexpr double kExactTolerance = 1e-12;

/// Two-state chain whose law alternates between a*delta_1 + (1-a)*delta_2 and
/// its mirror image. Requires a in [gamma/2, 1 - gamma/2].
CounterexampleReport verify_oscillation(double gamma, double a, std::size_t n_steps = 100,
                                        int grid_resolution = 50);

/// Two-state chain with a continuum of invariant measures mu(a), a in
/// [alpha/(2 lambda), 1 - alpha/(2 lambda)]. Samples outside the interval are
/// checked to be non-invariant.
CounterexampleReport verify_continuum(double alpha, double lambda, const std::vector<double>& a_samples,
                                      std::size_t n_steps = 100, int grid_resolution = 50);

/// Replays the stationarity equations for the infinite-state chain level by
/// level (n(mu) = 1, 2, ..., n_max) and checks that each case contradicts the
/// definition of n(mu).
CounterexampleReport verify_no_invariant_recursion(double alpha, double lambda, std::size_t n_max);

/// mu({i}) = alpha (1-lambda)^(i-1) for i < n, the remaining mass at state n
/// (one-based), on `truncation` states.
DiscreteMeasure recursion_profile(double alpha, double lambda, Eigen::Index n, Eigen::Index truncation);

struct NoConvergenceDemo {
  Trajectory trajectory;
  std::vector<Eigen::Index> levels;  // n(mu_k), one-based
  std::vector<double> residuals;     // d_TV(P_{mu_k} mu_k, mu_k)
  CounterexampleReport report;
};

/// Evolves the truncated chain. Truncation distorts the tail, so this is an
/// illustration; verify_no_invariant_recursion is the authoritative check.
NoConvergenceDemo demonstrate_no_convergence(double alpha, double lambda, Eigen::Index truncation,
                                             const DiscreteMeasure& mu0, std::size_t steps);

}  // namespace nlerg

#pragma once

#include "nlerg/kernels.hpp"

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace nlerg {

/// mu_0, ..., mu_n under mu_{k+1} = P_{mu_k} mu_k.
struct Trajectory {
  std::string kernel_label;
  std::vector<DiscreteMeasure> measures;
  std::vector<double> step_distances;  // d_TV(mu_k, mu_{k+1})
};

/// Raised when the kernel produces an invalid row during evolution.
class EvolutionError : public std::runtime_error {
 public:
  EvolutionError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Exact propagation for `steps` steps. Step k fails if the pushed-forward
/// mass misses 1 by more than 1e-12 * (k + 2); the result is then renormalized.
Trajectory evolve(const NonlinearKernel& kernel, const DiscreteMeasure& mu0, std::size_t steps);

/// One exact step.
DiscreteMeasure step(const NonlinearKernel& kernel, const DiscreteMeasure& mu, std::size_t k = 0);

inline constexpr double kFixedPointTolerance = 1e-10;
inline constexpr std::size_t kMaxFixedPointIterations = 100'000;

struct Converged {
  DiscreteMeasure pi;
  std::size_t iterations;
  double residual;
};

struct NoConvergence {
  std::vector<DiscreteMeasure> tail;   // last (up to) 10 measures
  std::optional<std::size_t> period;   // smallest p <= 8 with mu_n ≈ mu_{n-p}
  double last_step_distance;
  std::size_t iterations;
};

using FixedPointResult = std::variant<Converged, NoConvergence>;

/// Iterates the nonlinear map. Accepts mu_k as invariant only when both the
/// successive distance d_TV(mu_k, mu_{k-1}) and the residual
/// d_TV(P_{mu_k} mu_k, mu_k) are below `tol` (at k = 0 only the residual).
FixedPointResult find_invariant(const NonlinearKernel& kernel, const DiscreteMeasure& mu0,
                                double tol = kFixedPointTolerance,
                                std::size_t max_iter = kMaxFixedPointIterations);

/// d_TV(P_pi pi, pi).
double verify_invariant(const NonlinearKernel& kernel, const DiscreteMeasure& pi);

// Contraction inequality ------------------------------------------------------

struct ContractionViolation {
  std::size_t pair_index;
  double lhs;
  double rhs;
};

struct ContractionReport {
  std::size_t pairs_checked = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max(lhs - rhs)
  std::vector<ContractionViolation> violations;
};

/// Right-hand side d (1 - alpha + lambda) - lambda d^2 / 2.
double contraction_rhs(double d, double alpha, double lambda);

/// Checks d_TV(P_mu mu, P_nu nu) <= contraction_rhs(d_TV(mu, nu), alpha, lambda)
/// on every pair; violations beyond `tolerance` are reported.
ContractionReport check_contraction_inequality(
    const NonlinearKernel& kernel, double alpha, double lambda,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs, double tolerance = 1e-10,
    unsigned workers = 1);

// Rate bounds -----------------------------------------------------------------

/// fast: 2 (1 - (alpha - lambda))^n; slow: 2 / (lambda n).
double rate_bound(const ErgodicityCertificate& certificate, std::size_t n);

struct RateViolation {
  std::size_t n;
  double measured;
  double bound;
};

struct RateReport {
  ErgodicityCertificate certificate;
  DiscreteMeasure pi;
  std::size_t fixed_point_iterations = 0;
  double fixed_point_residual = 0.0;
  /// Slack for the error of the numerically found pi relative to the true
  /// invariant measure, derived from its residual.
  double pi_slack = 0.0;
  std::vector<double> measured;  // d_TV(mu_n, pi), n = 0..steps
  std::vector<double> bound;
  std::vector<RateViolation> violations;
};

/// Thrown when a certified kernel fails to reach a fixed point.
class FalsificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RateReport check_rate(const NonlinearKernel& kernel, const ErgodicityCertificate& certificate,
                      const DiscreteMeasure& mu0, std::size_t steps, double tol = kFixedPointTolerance,
                      std::size_t max_iter = kMaxFixedPointIterations);

// Weighted-TV contraction for measure-independent kernels ------------------------

struct HMCertificate {
  double gamma = 0.0;
  double K = 0.0;
  double alpha_local = 0.0;
  double beta = 0.0;
  double lambda_w = 1.0;
  double sublevel_threshold = 0.0;           // 4K / (1 - gamma)
  std::vector<Eigen::Index> sublevel_states;  // S_V
  std::vector<std::pair<double, double>> beta_scan;  // (beta, lambda_w(beta))
  std::size_t validation_pairs = 0;
  double validation_worst_ratio = 0.0;
};

class HMPreconditionError : public std::invalid_argument {
 public:
  HMPreconditionError(const std::string& what, std::optional<Eigen::Index> state)
      : std::invalid_argument(what), state_(state) {}
  std::optional<Eigen::Index> state() const { return state_; }

 private:
  std::optional<Eigen::Index> state_;
};

class HMCertificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Contraction factor of d_{1+beta V} for a fixed matrix, computed exactly as
/// the max over Dirac pairs.
double weighted_contraction_factor(const Matrix& q, const Vector& v, double beta);

/// Verifies QV <= gamma V + K pointwise and the local overlap on
/// S_V = {V <= 4K / (1 - gamma)}, scans beta_grid for the smallest contraction
/// factor, and validates the winning beta on `test_pairs`.
HMCertificate certify_hm_contraction(
    const NonlinearKernel& kernel, const Vector& v, double gamma, double K, double alpha_local,
    const std::vector<double>& beta_grid,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& test_pairs, double tolerance = 1e-10);

std::vector<double> default_beta_grid();

// Random measures ------------------------------------------------------------

/// Uniform on the simplex (Dirichlet(1, ..., 1)).
DiscreteMeasure random_measure(Eigen::Index size, std::mt19937_64& rng);
/// Mix of simplex-uniform, sparse and near-Dirac pairs.
std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> random_measure_pairs(Eigen::Index size,
                                                                              std::size_t count,
                                                                              std::uint64_t seed);

}  // namespace nlerg

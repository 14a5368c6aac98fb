#pragma once

#include "nlerg/measures.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nlerg {

/// A point of R^d, d <= 3, stored without heap allocation.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline constexpr int kMaxDimension = 3;

/// Measure-dependent drift b2(x, mu). `summarize` reduces the ensemble (d x N)
/// to the statistics b2 needs; it runs once per step before the particle
/// update. `drift` must not depend on anything but its arguments.
struct Interaction {
  std::function<Vector(const Matrix& positions)> summarize;
  std::function<Point(const Point& x, const Vector& summary)> drift;
};

/// dX = (b1(X) + epsilon b2(X, Law(X))) dt + dW.
struct SMVESpec {
  int dimension = 1;
  std::function<Point(const Point&)> b1;
  std::optional<Interaction> b2;
  double epsilon = 0.0;
  double r = 1.0;  // <b1(x), x> <= -r |x| for |x| >= M
  double M = 1.0;
  double D = 1.0;  // sup |b2|
  double L = 0.0;  // |b1(x)-b1(y)| + |b2(x,mu)-b2(y,nu)| <= L (|x-y| + W2(mu,nu))
  std::string label;

  void validate() const;
};

/// b1(x) = -x.
SMVESpec ou_spec(int dimension = 1);
/// b1(x) = -r x / max(|x|, M), b2(x, mu) = D tanh(|m - x|) (m - x)/|m - x| with m
/// the mean of mu; in d = 1 this is D tanh(m - x). L = r/M + D.
SMVESpec vh_spec(double r, double M, double D, double epsilon, int dimension = 1);
/// b1 = 0, no interaction.
SMVESpec brownian_spec(int dimension = 1);

Point vh_drift(const Point& x, double r, double M);
Point tanh_mean_attraction(const Point& x, const Vector& mean, double D);

// Initial laws ------------------------------------------------------------------

struct DiracLaw {
  Point at;
};
struct GaussianLaw {
  Point mean;
  double sd = 1.0;  // isotropic
};
struct AtomicLaw {
  std::vector<Point> atoms;
  std::vector<double> weights;
};
using InitialLaw = std::variant<DiracLaw, GaussianLaw, AtomicLaw>;

int dimension_of(const InitialLaw& law);
void validate_law(const InitialLaw& law);

/// d_TV between two laws when it is available in closed form (atomic or Dirac
/// on both sides); nullopt otherwise.
std::optional<double> exact_tv(const InitialLaw& a, const InitialLaw& b);

// Simulation -----------------------------------------------------------------

struct SimulationConfig {
  std::size_t particles = 10'000;
  double h = 0.01;
  double horizon = 10.0;
  std::vector<double> snapshot_times;  // rounded to the step grid; empty means {horizon}
  std::uint64_t seed = 1;
  std::uint32_t stream = 0;
  unsigned workers = 1;

  void validate() const;
};

struct Snapshot {
  double time = 0.0;
  std::size_t step = 0;
  Matrix positions;  // d x N
};

struct ParticleTrajectory {
  std::string label;
  double h = 0.0;
  std::size_t particles = 0;
  std::vector<Snapshot> snapshots;
  double max_b2_norm = 0.0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kBoundTolerance = 1e-9;

/// N-particle Euler-Maruyama with the empirical measure of the previous step
/// standing in for the law. The Gaussian increment of particle i at step k is
/// drawn from a counter-based stream keyed by (seed, i, k, stream), so results
/// do not depend on the worker count.
ParticleTrajectory simulate(const SMVESpec& spec, const InitialLaw& initial, const SimulationConfig& config);

/// Initial positions only (d x N), from the same streams simulate uses.
Matrix sample_initial(const InitialLaw& law, std::size_t particles, std::uint64_t seed, std::uint32_t stream);

// Lyapunov weight -------------------------------------------------------------

/// V(x) = e^{kappa |x|} for |x| >= M, kappa = min(r/4, 1); V = 1 for
/// |x| <= max(M - 1, 0); quintic blend in |x| between, matching value and two
/// derivatives at both ends.
class WeightFunction {
 public:
  WeightFunction(double r, double M);

  double kappa() const { return kappa_; }
  double M() const { return M_; }
  double blend_start() const { return a_; }

  /// V as a function of s = |x|.
  double radial(double s) const;
  double operator()(const Point& x) const { return radial(x.norm()); }
  double operator()(double x) const { return radial(std::abs(x)); }

 private:
  double kappa_, M_, a_;
  std::array<double, 6> c_{};  // blend polynomial in (s - a) / (M - a)
};

// VH condition ---------------------------------------------------------------

struct VHReport {
  bool passed = true;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max(<b1(x),x> + r|x|)
  std::optional<Point> failing_point;
  std::size_t points_checked = 0;
};

/// Checks <b1(x), x> <= -r |x| at every sample with |x| >= M (tolerance 1e-9;
/// |x| within a relative 1e-12 of M counts as on the shell).
VHReport verify_vh(const std::function<Point(const Point&)>& b1, double r, double M,
                   const std::vector<Point>& sample_points);

/// Points on the shells |x| = M * (1 + 9 k / (shells - 1)), k = 0..shells-1;
/// in d = 1 both signs, otherwise `per_shell` directions from a fixed seed.
std::vector<Point> vh_shell_points(int dimension, double M, std::size_t shells = 50,
                                   std::size_t per_shell = 64, std::uint64_t seed = 7);

// Lyapunov diagnostic --------------------------------------------------------

struct LyapunovReport {
  double lag = 0.0;
  std::vector<double> times;
  std::vector<double> means;           // m_k: ensemble mean of V
  std::vector<double> standard_errors;
  bool degenerate = false;             // m_k has no spread; gamma_hat undefined
  double gamma_hat = 0.0;
  double K_hat = 0.0;
  std::vector<double> residuals;       // m_{k+1} - gamma_hat m_k - K_hat
  double predicted_gamma = 0.0;        // e^{-kappa lag r / 4}
  double bound = 0.0;                  // m_0 + K_hat / (1 - gamma_hat) + 3 max SE
  bool bounded = false;
};

class DiagnosticError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regresses m_{k+1} on m_k over the snapshots at multiples of `lag`.
LyapunovReport lyapunov_diagnostic(const ParticleTrajectory& trajectory, const WeightFunction& v, double lag,
                                   double r);

// Constants -------------------------------------------------------------------

/// min(alpha_R1 / (2D), r / (2D)).
double epsilon_zero(double alpha_R1, double r, double D);

/// C eps (1 + beta) (1 + zeta(V)) d.
double perturbation_bound(double C, double epsilon, double beta, double zeta_V, double weighted_distance);

/// lambda + C eps (1 + beta) (1 + K + nu(V)).
double contraction_factor_theta(double lambda, double C, double epsilon, double beta, double K, double nu_V);

// Local overlap -----------------------------------------------------------------

struct LocalAlphaConfig {
  double R = 1.0;
  double t = 1.0;
  std::size_t n_sims = 100'000;
  double h = 0.01;
  Binning binning = Binning::default_for(1);
  std::vector<Point> x_grid;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct LocalAlphaReport {
  double alpha = 1.0;
  double max_tv = 0.0;
  std::size_t worst_i = 0, worst_j = 0;
};

/// 1 - max TV / 2 over grid pairs, TV between histograms of the time-t laws of
/// dY = b1(Y) dt + dW started at each grid point.
LocalAlphaReport estimate_local_alpha(const std::function<Point(const Point&)>& b1, int dimension,
                                      const LocalAlphaConfig& config);

/// Exact overlap 1 - TV/2 of the OU transition laws from x and y after time t.
double ou_exact_overlap(double x, double y, double t);

// Two-ensemble comparisons ------------------------------------------------------

/// Histogram TV at every common snapshot time.
std::vector<std::pair<double, double>> tv_series(const ParticleTrajectory& a, const ParticleTrajectory& b,
                                                 const Binning& binning);

struct DecayFit {
  std::vector<double> times;
  std::vector<double> tv;
  std::vector<bool> used;
  double noise_floor = 0.0;
  double C = 0.0;
  double theta = 0.0;
  double theta_se = 0.0;
  double theta_lower = 0.0;  // 95% band from the fit residuals
  double theta_upper = 0.0;
  double residual_sd = 0.0;
};

/// Least squares log(tv) = log C - theta t on the points above `noise_floor`.
/// Fewer than three usable points raises DiagnosticError.
DecayFit fit_decay(const ParticleTrajectory& a, const ParticleTrajectory& b, const Binning& binning,
                   double noise_floor);
DecayFit fit_decay(const std::vector<std::pair<double, double>>& series, double noise_floor);

struct GirsanovConfig {
  std::vector<double> times{0.5, 1.0, 2.0};
  SimulationConfig simulation;
  Binning binning = Binning::default_for(1);
  std::size_t calibration_pairs = 20;
  double calibration_quantile = 0.99;
};

struct GirsanovReport {
  double epsilon = 0.0;
  double L = 0.0;
  double tv0 = 0.0;
  std::vector<double> times;
  std::vector<double> estimated;
  std::vector<double> bound;      // sqrt(2) tv0 e^{4 eps^2 L^2 t}
  std::vector<double> allowance;  // same-law calibration quantile
  std::vector<std::size_t> violations;
};

/// Paired runs from mu0 and nu0 on common random numbers; the allowance at each
/// time is the calibration quantile of TV between independent ensembles drawn
/// from nu0.
GirsanovReport girsanov_bound_check(const SMVESpec& spec, const InitialLaw& mu0, const InitialLaw& nu0, double tv0,
                                    const GirsanovConfig& config);

// Exponential moment ------------------------------------------------------------

struct IntegralI {
  double value = 0.0;
  bool exact = false;
  bool modulus = false;  // e^{|x|} used instead of e^x (d > 1)
};

/// Integral of e^x (d = 1) or e^{|x|} (d > 1). Exact for Dirac, atomic and 1-d
/// Gaussian laws; Monte Carlo with `samples` draws otherwise.
IntegralI integral_I(const InitialLaw& law, std::size_t samples = 1'000'000, std::uint64_t seed = 1);
IntegralI integral_I(const EmpiricalMeasure& ensemble);

// Measure-Lipschitz diagnostic for b2 ---------------------------------------------

struct InteractionLipschitzReport {
  double drift_difference = 0.0;  // max over x of |b2(x, mu) - b2(x, nu)|
  double rho2_truncated = 0.0;
  double w2_plain = 0.0;
  double ratio_truncated = 0.0;
  double ratio_plain = 0.0;
};

/// Compares b2 under two 1-d ensembles at the given evaluation points.
InteractionLipschitzReport interaction_lipschitz(const Interaction& b2, const EmpiricalMeasure& mu,
                                                 const EmpiricalMeasure& nu, const std::vector<double>& x_points,
                                                 W2Method method);

}  // namespace nlerg

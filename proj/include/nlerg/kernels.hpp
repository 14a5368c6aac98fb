#pragma once

#include "nlerg/measures.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nlerg {

// ---------------------------------------------------------------------------
// A nonlinear transition kernel P_nu(x, .): for each law nu, a row-stochastic
// matrix whose row x is the transition law from state x.
// ---------------------------------------------------------------------------
class NonlinearKernel {
 public:
  using RowBuilder = std::function<Matrix(const DiscreteMeasure&)>;

  NonlinearKernel(Eigen::Index space_size, RowBuilder builder, std::string label,
                  bool measure_independent = false);

  Eigen::Index space_size() const { return space_size_; }
  const std::string& label() const { return label_; }
  /// True when the rows never depend on nu (an ordinary Markov kernel).
  bool measure_independent() const { return measure_independent_; }

  /// The transition matrix P_nu.
  Matrix matrix(const DiscreteMeasure& nu) const;
  /// One step of the nonlinear dynamics, (P_mu mu)_j = sum_i mu_i P_mu(i, j).
  /// Not renormalized.
  Vector push_forward(const DiscreteMeasure& mu) const;

 private:
  Eigen::Index space_size_;
  RowBuilder builder_;
  std::string label_;
  bool measure_independent_;
};

/// All measures with weights k / resolution (integer compositions); contains
/// every Dirac vertex.
class MeasureGrid {
 public:
  MeasureGrid(Eigen::Index space_size, int resolution);

  Eigen::Index space_size() const { return space_size_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<DiscreteMeasure>& points() const { return points_; }
  const DiscreteMeasure& operator[](std::size_t i) const { return points_[i]; }

  /// C(resolution + space_size - 1, space_size - 1).
  static std::size_t expected_size(Eigen::Index space_size, int resolution);
  /// 50 for two states, 8 for up to five, coarser beyond.
  static int default_resolution(Eigen::Index space_size);

 private:
  Eigen::Index space_size_;
  int resolution_;
  std::vector<DiscreteMeasure> points_;
};

struct ValidationReport {
  bool passed = true;
  double worst_deviation = 0.0;  // max |row sum - 1| (or magnitude of a negative entry)
  std::optional<std::size_t> failing_measure;
  std::optional<Eigen::Index> failing_row;
  std::string message;
};

inline constexpr double kRowTolerance = 1e-10;

ValidationReport validate(const NonlinearKernel& kernel, const MeasureGrid& grid,
                          double tolerance = kRowTolerance);
/// Row check for a single matrix; used by validate and by evolve.
ValidationReport validate_matrix(const Matrix& p, double tolerance = kRowTolerance);

// Built-in kernels --------------------------------------------------------------

/// Two states, both rows ((nu_1 ∧ (1-g/2)) ∨ g/2, (nu_0 ∧ (1-g/2)) ∨ g/2).
NonlinearKernel oscillating_kernel(double gamma);

/// Two states with every entry clamped to [alpha/2, 1 - alpha/2]; every
/// a * delta_0 + (1-a) * delta_1 with a in [alpha/(2 lambda), 1 - alpha/(2 lambda)]
/// is stationary. Requires 0 < alpha < lambda <= 1.
NonlinearKernel continuum_kernel(double alpha, double lambda);

/// The level n(nu): the smallest n >= 1 with lambda * nu({1..n}) >= alpha
/// (returned one-based, as in the construction).
Eigen::Index no_invariant_level(const DiscreteMeasure& nu, double alpha, double lambda);

/// Truncation of the infinite-state construction with no invariant measure.
/// The shift mass (1 - lambda) out of the last state stays in the last state.
NonlinearKernel no_invariant_kernel(double alpha, double lambda, Eigen::Index truncation);

/// Measure-independent kernel with a fixed row-stochastic matrix.
NonlinearKernel markov_kernel(Matrix q, std::string label = "markov");

/// P_nu = (1 - lambda) Q + lambda * (every row equal to nu).
NonlinearKernel mixture_kernel(Matrix q, double lambda, std::string label = "mixture");

/// Fixed 3-state example Markov matrix (overlap 0.4).
Matrix example_markov_matrix();

// Estimators ------------------------------------------------------------------

/// 1 - (1/2) max over grid pairs (mu, nu) and states (x, y) of
/// d_TV(P_mu(x, .), P_nu(y, .)).
double estimate_alpha(const NonlinearKernel& kernel, const MeasureGrid& grid, unsigned workers = 1);

inline constexpr double kLambdaMinSeparation = 1e-9;

/// max over grid pairs mu != nu and states x of
/// d_TV(P_mu(x, .), P_nu(x, .)) / d_TV(mu, nu). Pairs closer than
/// `min_separation` are skipped.
double estimate_lambda(const NonlinearKernel& kernel, const MeasureGrid& grid, unsigned workers = 1,
                       double min_separation = kLambdaMinSeparation);

/// Dobrushin overlap of a single matrix: 1 - (1/2) max_{x,y} ||P(x,.) - P(y,.)||_1,
/// optionally restricted to a subset of states.
double matrix_overlap(const Matrix& p, const std::vector<Eigen::Index>& states = {});

enum class Regime { fast, slow, uncertified };

std::string to_string(Regime regime);

/// fast iff lambda < alpha - tie, slow iff |lambda - alpha| <= tie.
Regime classify_regime(double alpha, double lambda, double tie_tolerance);

inline constexpr double kDefaultTieTolerance = 1e-6;

struct ErgodicityCertificate {
  double alpha_hat = 0.0;
  double lambda_hat = 0.0;
  Regime regime = Regime::uncertified;
  int grid_resolution = 0;
  double tie_tolerance = kDefaultTieTolerance;
};

ErgodicityCertificate certify(const NonlinearKernel& kernel, const MeasureGrid& grid,
                              double tie_tolerance = kDefaultTieTolerance, unsigned workers = 1);

}  // namespace nlerg

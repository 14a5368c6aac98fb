#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlerg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNormalizationTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Probability vectors on {0, ..., n-1}.
//
// State indices are zero-based throughout the library: the state written as 1
// in the usual mathematical notation is index 0 here.
// ---------------------------------------------------------------------------
class DiscreteMeasure {
 public:
  /// Rejects (does not renormalize) vectors with negative or non-finite
  /// entries, or whose sum deviates from 1 by more than `tolerance`.
  explicit DiscreteMeasure(Vector probs, double tolerance = kNormalizationTolerance);

  static DiscreteMeasure dirac(Eigen::Index size, Eigen::Index state);
  static DiscreteMeasure uniform(Eigen::Index size);
  /// a * delta_0 + (1 - a) * delta_1 on two states.
  static DiscreteMeasure two_point(double a);

  Eigen::Index size() const { return probs_.size(); }
  double operator[](Eigen::Index i) const { return probs_[i]; }
  const Vector& probs() const { return probs_; }

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return a.probs_ == b.probs_;
  }

 private:
  Vector probs_;
};

namespace detail {
inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}
}  // namespace detail

/// Total variation distance in the diameter-2 convention: sum_i |mu_i - nu_i|.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar tv_distance(const Eigen::MatrixBase<DerivedA>& mu,
                                      const Eigen::MatrixBase<DerivedB>& nu) {
  detail::require_same_size(mu.size(), nu.size(), "tv_distance");
  return (mu - nu).cwiseAbs().sum();
}

inline double tv_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return tv_distance(mu.probs(), nu.probs());
}

/// d_f(mu, nu) = sup_{|g| <= f} sum g_i (mu_i - nu_i) = sum f_i |mu_i - nu_i|.
template <typename DerivedF, typename DerivedA, typename DerivedB>
typename DerivedF::Scalar weighted_tv_distance(const Eigen::MatrixBase<DerivedF>& f,
                                               const Eigen::MatrixBase<DerivedA>& mu,
                                               const Eigen::MatrixBase<DerivedB>& nu) {
  detail::require_same_size(mu.size(), nu.size(), "weighted_tv_distance");
  detail::require_same_size(f.size(), mu.size(), "weighted_tv_distance");
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i]) || f[i] < 0) {
      throw std::invalid_argument("weighted_tv_distance: weight entry " + std::to_string(i) +
                                  " is negative or non-finite");
    }
  }
  return f.cwiseProduct((mu - nu).cwiseAbs()).sum();
}

inline double weighted_tv_distance(const Vector& f, const DiscreteMeasure& mu,
                                   const DiscreteMeasure& nu) {
  return weighted_tv_distance(f, mu.probs(), nu.probs());
}

/// The common part eta = min(mu, nu); its mass is 1 - d_TV(mu, nu) / 2.
Vector sub_measure_eta(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// ---------------------------------------------------------------------------
// Empirical measures on R^d. Points are stored column-wise (d x N).
// ---------------------------------------------------------------------------
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Matrix points);
  /// One-dimensional convenience constructor.
  static EmpiricalMeasure from_samples(const std::vector<double>& samples);

  Eigen::Index dimension() const { return points_.rows(); }
  Eigen::Index count() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.col(i); }

 private:
  Matrix points_;
};

enum class W2Method { monotone_upper_bound, exact_assignment };

inline constexpr Eigen::Index kMaxAssignmentSize = 256;

/// rho_2 with truncated cost |x - y|^2 ∧ 1.
///
/// `monotone_upper_bound` couples sorted samples (1-d only, unequal N allowed);
/// the truncated cost is not convex in |x - y|, so this is an upper bound.
/// `exact_assignment` solves the optimal matching (equal N <= 256).
double wasserstein2_truncated(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              W2Method method);

/// Plain (untruncated) W_2 between 1-d empirical measures; quantile coupling is
/// optimal for the convex cost |x - y|^2.
double wasserstein2_plain_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<Eigen::Index> solve_assignment(const Matrix& cost);

// ---------------------------------------------------------------------------
// Histograms on a shared binning; used as a density surrogate for TV between
// particle ensembles.
// ---------------------------------------------------------------------------
struct Binning {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> bins;

  static Binning uniform_1d(double lower, double upper, std::size_t bins);
  /// [-10, 10) split into 200 bins on each axis.
  static Binning default_for(std::size_t dimension);

  std::size_t dimension() const { return bins.size(); }
  std::size_t total_bins() const;
  void validate() const;

  friend bool operator==(const Binning&, const Binning&) = default;
};

struct HistogramDensity {
  Binning binning;
  Vector masses;
  double overflow = 0.0;
};

HistogramDensity histogram_of(const EmpiricalMeasure& ensemble, const Binning& binning);

/// Sum of |mass differences| over bins plus the overflow difference.
double tv_between_histograms(const HistogramDensity& a, const HistogramDensity& b);

}  // namespace nlerg

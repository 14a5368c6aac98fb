#include "nlerg/measures.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace nlerg {

DiscreteMeasure::DiscreteMeasure(Vector probs, double tolerance) : probs_(std::move(probs)) {
  if (probs_.size() == 0) {
    throw std::invalid_argument("DiscreteMeasure: empty probability vector");
  }
  for (Eigen::Index i = 0; i < probs_.size(); ++i) {
    if (!std::isfinite(probs_[i]) || probs_[i] < 0) {
      throw std::invalid_argument("DiscreteMeasure: weight " + std::to_string(i) + " = " +
                                  std::to_string(probs_[i]) + " is negative or non-finite");
    }
  }
  const double total = probs_.sum();
  if (std::abs(total - 1.0) > tolerance) {
    throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total) +
                                ", not 1");
  }
}

DiscreteMeasure DiscreteMeasure::dirac(Eigen::Index size, Eigen::Index state) {
  if (state < 0 || state >= size) {
    throw std::invalid_argument("DiscreteMeasure::dirac: state out of range");
  }
  Vector p = Vector::Zero(size);
  p[state] = 1.0;
  return DiscreteMeasure(std::move(p));
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::Index size) {
  return DiscreteMeasure(Vector::Constant(size, 1.0 / static_cast<double>(size)));
}

DiscreteMeasure DiscreteMeasure::two_point(double a) {
  Vector p(2);
  p << a, 1.0 - a;
  return DiscreteMeasure(std::move(p));
}

Vector sub_measure_eta(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  detail::require_same_size(mu.size(), nu.size(), "sub_measure_eta");
  return mu.probs().cwiseMin(nu.probs());
}

EmpiricalMeasure::EmpiricalMeasure(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw std::invalid_argument("EmpiricalMeasure: need dimension >= 1 and at least one point");
  }
  if (!points_.allFinite()) {
    throw std::invalid_argument("EmpiricalMeasure: non-finite coordinate");
  }
}

EmpiricalMeasure EmpiricalMeasure::from_samples(const std::vector<double>& samples) {
  Matrix pts(1, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) pts(0, static_cast<Eigen::Index>(i)) = samples[i];
  return EmpiricalMeasure(std::move(pts));
}

namespace {

std::vector<double> sorted_1d(const EmpiricalMeasure& m) {
  std::vector<double> v(m.points().data(), m.points().data() + m.count());
  std::sort(v.begin(), v.end());
  return v;
}

// Integrates cost(x_(i), y_(j)) against the monotone (quantile) coupling of two
// uniformly weighted sorted samples of possibly different sizes.
template <typename Cost>
double monotone_coupling_cost(const std::vector<double>& xs, const std::vector<double>& ys,
                              Cost cost) {
  const double wx = 1.0 / static_cast<double>(xs.size());
  const double wy = 1.0 / static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double rx = wx, ry = wy, total = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double m = std::min(rx, ry);
    total += m * cost(xs[i], ys[j]);
    rx -= m;
    ry -= m;
    // Residual masses below roundoff are treated as exhausted.
    if (rx <= 1e-15 * wx) {
      ++i;
      rx = wx;
    }
    if (ry <= 1e-15 * wy) {
      ++j;
      ry = wy;
    }
  }
  return total;
}

}  // namespace

std::vector<Eigen::Index> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw std::invalid_argument("solve_assignment: cost matrix must be square");
  }
  const Eigen::Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); p[j] = row matched to column j (1-based).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = p[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Eigen::Index> assignment(n);
  for (Eigen::Index j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double wasserstein2_truncated(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                              W2Method method) {
  detail::require_same_size(mu.dimension(), nu.dimension(), "wasserstein2_truncated");
  if (method == W2Method::monotone_upper_bound) {
    if (mu.dimension() != 1) {
      throw std::invalid_argument(
          "wasserstein2_truncated: monotone_upper_bound is only defined for d = 1");
    }
    const double c = monotone_coupling_cost(sorted_1d(mu), sorted_1d(nu), [](double x, double y) {
      return std::min((x - y) * (x - y), 1.0);
    });
    return std::sqrt(std::max(c, 0.0));
  }

  if (mu.count() != nu.count() || mu.count() > kMaxAssignmentSize) {
    throw std::invalid_argument(
        "wasserstein2_truncated: exact_assignment needs equal N <= 256 on both sides");
  }
  const Eigen::Index n = mu.count();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cost(i, j) = std::min((mu.point(i) - nu.point(j)).squaredNorm(), 1.0);
    }
  }
  const auto assignment = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, assignment[i]);
  return std::sqrt(total / static_cast<double>(n));
}

double wasserstein2_plain_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dimension() != 1 || nu.dimension() != 1) {
    throw std::invalid_argument("wasserstein2_plain_1d: both measures must be one-dimensional");
  }
  const double c = monotone_coupling_cost(sorted_1d(mu), sorted_1d(nu),
                                          [](double x, double y) { return (x - y) * (x - y); });
  return std::sqrt(std::max(c, 0.0));
}

Binning Binning::uniform_1d(double lower, double upper, std::size_t bins) {
  Binning b{{lower}, {upper}, {bins}};
  b.validate();
  return b;
}

Binning Binning::default_for(std::size_t dimension) {
  return Binning{std::vector<double>(dimension, -10.0), std::vector<double>(dimension, 10.0),
                 std::vector<std::size_t>(dimension, 200)};
}

std::size_t Binning::total_bins() const {
  return std::accumulate(bins.begin(), bins.end(), std::size_t{1}, std::multiplies<>());
}

void Binning::validate() const {
  if (bins.empty() || lower.size() != bins.size() || upper.size() != bins.size()) {
    throw std::invalid_argument("Binning: lower/upper/bins must have one entry per axis");
  }
  for (std::size_t a = 0; a < bins.size(); ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]) || !(lower[a] < upper[a])) {
      throw std::invalid_argument("Binning: axis " + std::to_string(a) +
                                  " needs finite bounds with lower < upper");
    }
    if (bins[a] < 1) {
      throw std::invalid_argument("Binning: axis " + std::to_string(a) + " needs bin_count >= 1");
    }
  }
}

HistogramDensity histogram_of(const EmpiricalMeasure& ensemble, const Binning& binning) {
  binning.validate();
  detail::require_same_size(ensemble.dimension(), static_cast<Eigen::Index>(binning.dimension()),
                            "histogram_of");
  std::vector<std::size_t> counts(binning.total_bins(), 0);
  std::size_t outside = 0;
  for (Eigen::Index i = 0; i < ensemble.count(); ++i) {
    std::size_t flat = 0;
    bool inside = true;
    for (std::size_t a = 0; a < binning.dimension(); ++a) {
      const double x = ensemble.points()(static_cast<Eigen::Index>(a), i);
      const double lo = binning.lower[a], hi = binning.upper[a];
      if (!(x >= lo && x < hi)) {
        inside = false;
        break;
      }
      const auto nb = binning.bins[a];
      auto idx = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(nb));
      idx = std::min(idx, nb - 1);  // x just below hi can round up to nb
      flat = flat * nb + idx;
    }
    if (inside) {
      ++counts[flat];
    } else {
      ++outside;
    }
  }
  const double n = static_cast<double>(ensemble.count());
  HistogramDensity h{binning, Vector(static_cast<Eigen::Index>(counts.size())),
                     static_cast<double>(outside) / n};
  for (std::size_t k = 0; k < counts.size(); ++k) {
    h.masses[static_cast<Eigen::Index>(k)] = static_cast<double>(counts[k]) / n;
  }
  return h;
}

double tv_between_histograms(const HistogramDensity& a, const HistogramDensity& b) {
  if (!(a.binning == b.binning)) {
    throw std::invalid_argument("tv_between_histograms: histograms use different binnings");
  }
  return tv_distance(a.masses, b.masses) + std::abs(a.overflow - b.overflow);
}

}  // namespace nlerg

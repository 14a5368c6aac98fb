#include "nlerg/kernels.hpp"

#include "nlerg/parallel.hpp"

#include <algorithm>

namespace nlerg {

NonlinearKernel::NonlinearKernel(Eigen::Index space_size, RowBuilder builder, std::string label,
                                 bool measure_independent)
    : space_size_(space_size),
      builder_(std::move(builder)),
      label_(std::move(label)),
      measure_independent_(measure_independent) {
  if (space_size_ < 1) throw std::invalid_argument("NonlinearKernel: space_size must be >= 1");
  if (!builder_) throw std::invalid_argument("NonlinearKernel: empty row builder");
}

Matrix NonlinearKernel::matrix(const DiscreteMeasure& nu) const {
  detail::require_same_size(nu.size(), space_size_, "NonlinearKernel::matrix");
  Matrix p = builder_(nu);
  if (p.rows() != space_size_ || p.cols() != space_size_) {
    throw std::logic_error("NonlinearKernel '" + label_ + "': row builder returned a " +
                           std::to_string(p.rows()) + "x" + std::to_string(p.cols()) + " matrix");
  }
  return p;
}

Vector NonlinearKernel::push_forward(const DiscreteMeasure& mu) const {
  return matrix(mu).transpose() * mu.probs();
}

namespace {

void enumerate_compositions(Eigen::Index parts, int remaining, Eigen::Index pos, Vector& current,
                            int resolution, std::vector<DiscreteMeasure>& out) {
  if (pos == parts - 1) {
    current[pos] = static_cast<double>(remaining) / resolution;
    // Exact k/R weights can miss 1 by an ulp; the grid is built, not user input.
    out.emplace_back(current, 1e-12);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    current[pos] = static_cast<double>(k) / resolution;
    enumerate_compositions(parts, remaining - k, pos + 1, current, resolution, out);
  }
}

}  // namespace

MeasureGrid::MeasureGrid(Eigen::Index space_size, int resolution)
    : space_size_(space_size), resolution_(resolution) {
  if (space_size < 1 || resolution < 1) {
    throw std::invalid_argument("MeasureGrid: space_size and resolution must be >= 1");
  }
  const std::size_t expected = expected_size(space_size, resolution);
  if (expected > 5'000'000) {
    throw std::invalid_argument("MeasureGrid: " + std::to_string(expected) +
                                " points requested; reduce the resolution");
  }
  points_.reserve(expected);
  Vector current = Vector::Zero(space_size);
  enumerate_compositions(space_size, resolution, 0, current, resolution, points_);
}

std::size_t MeasureGrid::expected_size(Eigen::Index space_size, int resolution) {
  // C(R + n - 1, n - 1) computed incrementally; exact in double for our sizes.
  const auto k = static_cast<std::size_t>(space_size - 1);
  const auto n = static_cast<std::size_t>(resolution) + k;
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return static_cast<std::size_t>(std::llround(c));
}

int MeasureGrid::default_resolution(Eigen::Index space_size) {
  if (space_size <= 2) return 50;
  if (space_size <= 5) return 8;
  int r = 8;
  while (r > 1 && expected_size(space_size, r) > 2000) --r;
  return r;
}

ValidationReport validate_matrix(const Matrix& p, double tolerance) {
  ValidationReport report;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double dev = std::abs(p.row(i).sum() - 1.0);
    const double neg = std::max(0.0, -p.row(i).minCoeff());
    const double worst = std::max(dev, neg);
    const bool finite = p.row(i).allFinite();
    if (!finite || worst > report.worst_deviation) {
      report.worst_deviation = finite ? worst : std::numeric_limits<double>::infinity();
    }
    if (report.passed && (!finite || dev > tolerance || neg > tolerance)) {
      report.passed = false;
      report.failing_row = i;
      report.message = "row " + std::to_string(i) + (neg > tolerance ? " has a negative entry"
                                                                      : " does not sum to 1") +
                       " (deviation " + std::to_string(worst) + ")";
    }
  }
  return report;
}

ValidationReport validate(const NonlinearKernel& kernel, const MeasureGrid& grid, double tolerance) {
  detail::require_same_size(kernel.space_size(), grid.space_size(), "validate");
  ValidationReport report;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const auto r = validate_matrix(kernel.matrix(grid[m]), tolerance);
    report.worst_deviation = std::max(report.worst_deviation, r.worst_deviation);
    if (report.passed && !r.passed) {
      report.passed = false;
      report.failing_measure = m;
      report.failing_row = r.failing_row;
      report.message = "kernel '" + kernel.label() + "' at grid measure " + std::to_string(m) + ": " +
                       r.message;
    }
  }
  return report;
}

NonlinearKernel oscillating_kernel(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("oscillating_kernel: gamma must lie in (0, 1)");
  }
  auto builder = [gamma](const DiscreteMeasure& nu) {
    const auto clamp = [gamma](double v) { return std::max(std::min(v, 1.0 - gamma / 2), gamma / 2); };
    Matrix p(2, 2);
    p.row(0) << clamp(nu[1]), clamp(nu[0]);
    p.row(1) = p.row(0);
    return p;
  };
  return NonlinearKernel(2, builder, "oscillating(gamma=" + std::to_string(gamma) + ")");
}

namespace {
void require_alpha_below_lambda(double alpha, double lambda, const char* who) {
  if (!(alpha > 0.0 && alpha < lambda && lambda <= 1.0)) {
    throw std::invalid_argument(std::string(who) + ": requires 0 < alpha < lambda <= 1");
  }
}
}  // namespace

NonlinearKernel continuum_kernel(double alpha, double lambda) {
  require_alpha_below_lambda(alpha, lambda, "continuum_kernel");
  auto builder = [alpha, lambda](const DiscreteMeasure& nu) {
    const auto off = [&](double mass) {
      return std::max(std::min(lambda * mass, lambda - alpha / 2), alpha / 2);
    };
    const auto diag = [&](double mass) {
      return std::max(std::min(1.0 - lambda * mass, 1.0 - alpha / 2), 1.0 - lambda + alpha / 2);
    };
    Matrix p(2, 2);
    p << diag(nu[1]), off(nu[1]),
         off(nu[0]), diag(nu[0]);
    return p;
  };
  return NonlinearKernel(2, builder,
                         "continuum(alpha=" + std::to_string(alpha) + ",lambda=" + std::to_string(lambda) + ")");
}

Eigen::Index no_invariant_level(const DiscreteMeasure& nu, double alpha, double lambda) {
  double cum = 0.0;
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    cum += nu[j];
    if (lambda * cum >= alpha) return j + 1;
  }
  return nu.size();
}

NonlinearKernel no_invariant_kernel(double alpha, double lambda, Eigen::Index truncation) {
  require_alpha_below_lambda(alpha, lambda, "no_invariant_kernel");
  if (truncation < 3) throw std::invalid_argument("no_invariant_kernel: truncation must be >= 3");
  auto builder = [alpha, lambda, truncation](const DiscreteMeasure& nu) {
    Matrix p = Matrix::Zero(truncation, truncation);
    p.col(0).setConstant(std::max(lambda * nu[0], alpha));
    double cum = nu[0];
    for (Eigen::Index j = 1; j < truncation; ++j) {
      cum += nu[j];
      p.col(j).setConstant(std::max(std::min(lambda * cum - alpha, lambda * nu[j]), 0.0));
    }
    for (Eigen::Index i = 0; i + 1 < truncation; ++i) p(i, i + 1) += 1.0 - lambda;
    p(truncation - 1, truncation - 1) += 1.0 - lambda;
    return p;
  };
  return NonlinearKernel(truncation, builder,
                         "no-invariant(alpha=" + std::to_string(alpha) + ",lambda=" +
                             std::to_string(lambda) + ",truncation=" + std::to_string(truncation) + ")");
}

NonlinearKernel markov_kernel(Matrix q, std::string label) {
  if (q.rows() != q.cols()) throw std::invalid_argument("markov_kernel: matrix must be square");
  const auto check = validate_matrix(q);
  if (!check.passed) throw std::invalid_argument("markov_kernel: " + check.message);
  const Eigen::Index n = q.rows();
  return NonlinearKernel(n, [q = std::move(q)](const DiscreteMeasure&) { return q; }, std::move(label),
                         true);
}

NonlinearKernel mixture_kernel(Matrix q, double lambda, std::string label) {
  if (q.rows() != q.cols()) throw std::invalid_argument("mixture_kernel: matrix must be square");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("mixture_kernel: lambda must lie in [0, 1]");
  const auto check = validate_matrix(q);
  if (!check.passed) throw std::invalid_argument("mixture_kernel: " + check.message);
  const Eigen::Index n = q.rows();
  auto builder = [q = std::move(q), lambda](const DiscreteMeasure& nu) {
    Matrix p = (1.0 - lambda) * q;
    p.rowwise() += lambda * nu.probs().transpose();
    return p;
  };
  return NonlinearKernel(n, builder, std::move(label), lambda == 0.0);
}

Matrix example_markov_matrix() {
  Matrix q(3, 3);
  q << 0.7, 0.2, 0.1,
       0.1, 0.7, 0.2,
       0.2, 0.1, 0.7;
  return q;
}

namespace {

std::vector<Matrix> matrices_on(const NonlinearKernel& kernel, const MeasureGrid& grid) {
  detail::require_same_size(kernel.space_size(), grid.space_size(), "estimator");
  std::vector<Matrix> out;
  // A measure-independent kernel has one matrix for the whole grid.
  const std::size_t count = kernel.measure_independent() ? std::min<std::size_t>(1, grid.size()) : grid.size();
  out.reserve(count);
  for (std::size_t m = 0; m < count; ++m) out.push_back(kernel.matrix(grid[m]));
  return out;
}

}  // namespace

double estimate_alpha(const NonlinearKernel& kernel, const MeasureGrid& grid, unsigned workers) {
  const auto mats = matrices_on(kernel, grid);
  const Eigen::Index n = kernel.space_size();
  Matrix rows(static_cast<Eigen::Index>(mats.size()) * n, n);
  for (std::size_t m = 0; m < mats.size(); ++m) rows.middleRows(static_cast<Eigen::Index>(m) * n, n) = mats[m];

  const auto total = static_cast<std::size_t>(rows.rows());
  const double worst = parallel_max(total, workers, 0.0, [&](std::size_t i) {
    double best = 0.0;
    const auto ri = rows.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = static_cast<Eigen::Index>(i) + 1; j < rows.rows(); ++j) {
      best = std::max(best, (ri - rows.row(j)).cwiseAbs().sum());
    }
    return best;
  });
  return std::clamp(1.0 - worst / 2.0, 0.0, 1.0);
}

double estimate_lambda(const NonlinearKernel& kernel, const MeasureGrid& grid, unsigned workers,
                       double min_separation) {
  if (kernel.measure_independent()) return 0.0;
  const auto mats = matrices_on(kernel, grid);
  return parallel_max(grid.size(), workers, 0.0, [&](std::size_t a) {
    double best = 0.0;
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const double d = tv_distance(grid[a], grid[b]);
      if (d < min_separation) continue;
      const double rows = (mats[a] - mats[b]).cwiseAbs().rowwise().sum().maxCoeff();
      best = std::max(best, rows / d);
    }
    return best;
  });
}

double matrix_overlap(const Matrix& p, const std::vector<Eigen::Index>& states) {
  std::vector<Eigen::Index> idx = states;
  if (idx.empty()) {
    idx.resize(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      worst = std::max(worst, (p.row(idx[a]) - p.row(idx[b])).cwiseAbs().sum());
    }
  }
  return 1.0 - worst / 2.0;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::fast: return "fast";
    case Regime::slow: return "slow";
    case Regime::uncertified: return "uncertified";
  }
  return "uncertified";
}

Regime classify_regime(double alpha, double lambda, double tie_tolerance) {
  // Without a positive overlap there is nothing to certify.
  if (alpha <= tie_tolerance) return Regime::uncertified;
  if (std::abs(lambda - alpha) <= tie_tolerance) return Regime::slow;
  if (lambda < alpha - tie_tolerance) return Regime::fast;
  return Regime::uncertified;
}

ErgodicityCertificate certify(const NonlinearKernel& kernel, const MeasureGrid& grid, double tie_tolerance,
                              unsigned workers) {
  ErgodicityCertificate cert;
  cert.alpha_hat = estimate_alpha(kernel, grid, workers);
  cert.lambda_hat = estimate_lambda(kernel, grid, workers);
  cert.tie_tolerance = tie_tolerance;
  cert.grid_resolution = grid.resolution();
  cert.regime = classify_regime(cert.alpha_hat, cert.lambda_hat, tie_tolerance);
  return cert;
}

}  // namespace nlerg

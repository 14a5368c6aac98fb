#include "nlerg/ergodicity.hpp"

#include "nlerg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace nlerg {

DiscreteMeasure step(const NonlinearKernel& kernel, const DiscreteMeasure& mu, std::size_t k) {
  const Matrix p = kernel.matrix(mu);
  const auto check = validate_matrix(p);
  if (!check.passed) throw EvolutionError(k, "kernel '" + kernel.label() + "': " + check.message);
  Vector next = p.transpose() * mu.probs();
  try {
    static_cast<void>(DiscreteMeasure(next, kNormalizationTolerance * static_cast<double>(k + 2)));
    // Rows built from nu carry nu's rounding into their sums; without this the
    // drift compounds geometrically.
    return DiscreteMeasure(next / next.sum());
  } catch (const std::invalid_argument& e) {
    throw EvolutionError(k, e.what());
  }
}

Trajectory evolve(const NonlinearKernel& kernel, const DiscreteMeasure& mu0, std::size_t steps) {
  detail::require_same_size(kernel.space_size(), mu0.size(), "evolve");
  Trajectory traj{kernel.label(), {mu0}, {}};
  traj.measures.reserve(steps + 1);
  traj.step_distances.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    traj.measures.push_back(step(kernel, traj.measures.back(), k));
    traj.step_distances.push_back(tv_distance(traj.measures[k], traj.measures[k + 1]));
  }
  return traj;
}

FixedPointResult find_invariant(const NonlinearKernel& kernel, const DiscreteMeasure& mu0, double tol,
                                std::size_t max_iter) {
  if (!(tol > 0)) throw std::invalid_argument("find_invariant: tol must be positive");
  detail::require_same_size(kernel.space_size(), mu0.size(), "find_invariant");

  constexpr std::size_t kTail = 10;
  constexpr std::size_t kMaxPeriod = 8;
  std::deque<DiscreteMeasure> history;
  DiscreteMeasure current = mu0;
  double previous_distance = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k <= max_iter; ++k) {
    DiscreteMeasure next = step(kernel, current, k);
    const double residual = tv_distance(next, current);
    if (residual < tol && (k == 0 || previous_distance < tol)) {
      return Converged{current, k, residual};
    }
    previous_distance = residual;
    history.push_back(std::move(current));
    if (history.size() > kTail) history.pop_front();
    current = std::move(next);
  }

  history.push_back(current);
  if (history.size() > kTail) history.pop_front();
  NoConvergence out{{history.begin(), history.end()}, std::nullopt, previous_distance, max_iter};
  const auto& last = history.back();
  for (std::size_t p = 1; p <= kMaxPeriod && p < history.size(); ++p) {
    if (tv_distance(last, history[history.size() - 1 - p]) < tol) {
      out.period = p;
      break;
    }
  }
  return out;
}

double verify_invariant(const NonlinearKernel& kernel, const DiscreteMeasure& pi) {
  return tv_distance(kernel.push_forward(pi), pi.probs());
}

double contraction_rhs(double d, double alpha, double lambda) {
  return d * (1.0 - alpha + lambda) - lambda * d * d / 2.0;
}

ContractionReport check_contraction_inequality(
    const NonlinearKernel& kernel, double alpha, double lambda,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs, double tolerance,
    unsigned workers) {
  std::vector<double> lhs(pairs.size()), rhs(pairs.size());
  parallel_chunks(pairs.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& [mu, nu] = pairs[i];
      lhs[i] = tv_distance(kernel.push_forward(mu), kernel.push_forward(nu));
      rhs[i] = contraction_rhs(tv_distance(mu, nu), alpha, lambda);
    }
  });
  ContractionReport report;
  report.pairs_checked = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    report.worst_margin = std::max(report.worst_margin, lhs[i] - rhs[i]);
    if (lhs[i] > rhs[i] + tolerance) report.violations.push_back({i, lhs[i], rhs[i]});
  }
  return report;
}

double rate_bound(const ErgodicityCertificate& certificate, std::size_t n) {
  switch (certificate.regime) {
    case Regime::fast:
      return 2.0 * std::pow(1.0 - (certificate.alpha_hat - certificate.lambda_hat), static_cast<double>(n));
    case Regime::slow: {
      if (n == 0) throw std::invalid_argument("rate_bound: the slow-regime bound is undefined at n = 0");
      const double lambda = std::min(certificate.alpha_hat, certificate.lambda_hat);
      return 2.0 / (lambda * static_cast<double>(n));
    }
    case Regime::uncertified: break;
  }
  throw std::invalid_argument("rate_bound: no rate is certified for an uncertified kernel");
}

RateReport check_rate(const NonlinearKernel& kernel, const ErgodicityCertificate& certificate,
                      const DiscreteMeasure& mu0, std::size_t steps, double tol, std::size_t max_iter) {
  if (certificate.regime == Regime::uncertified) {
    throw std::invalid_argument("check_rate: certificate regime is uncertified");
  }
  auto fixed = find_invariant(kernel, mu0, tol, max_iter);
  if (std::holds_alternative<NoConvergence>(fixed)) {
    throw FalsificationError("check_rate: kernel '" + kernel.label() + "' certified " +
                             to_string(certificate.regime) + " but no invariant measure was found within " +
                             std::to_string(max_iter) + " iterations");
  }
  auto& conv = std::get<Converged>(fixed);
  const double residual = verify_invariant(kernel, conv.pi);

  RateReport report{certificate, conv.pi, conv.iterations, residual, 0.0, {}, {}, {}};
  // If r = d_TV(P_pi pi, pi) then the contraction inequality puts the true
  // invariant measure within r / (alpha - lambda) (fast) or sqrt(2 r / lambda)
  // (slow) of pi.
  if (certificate.regime == Regime::fast) {
    report.pi_slack = residual / (certificate.alpha_hat - certificate.lambda_hat);
  } else {
    report.pi_slack = std::sqrt(2.0 * residual / std::min(certificate.alpha_hat, certificate.lambda_hat));
  }

  const auto traj = evolve(kernel, mu0, steps);
  for (std::size_t n = 0; n <= steps; ++n) {
    const double measured = tv_distance(traj.measures[n], conv.pi);
    const double bound = (certificate.regime == Regime::slow && n == 0) ? 2.0 : rate_bound(certificate, n);
    report.measured.push_back(measured);
    report.bound.push_back(bound);
    if (measured > bound + report.pi_slack + 1e-12) report.violations.push_back({n, measured, bound});
  }
  return report;
}

double weighted_contraction_factor(const Matrix& q, const Vector& v, double beta) {
  const Vector f = Vector::Ones(v.size()) + beta * v;
  double worst = 0.0;
  for (Eigen::Index x = 0; x < q.rows(); ++x) {
    for (Eigen::Index y = x + 1; y < q.rows(); ++y) {
      const double num = f.cwiseProduct((q.row(x) - q.row(y)).transpose().cwiseAbs()).sum();
      worst = std::max(worst, num / (f[x] + f[y]));
    }
  }
  return worst;
}

std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back(std::pow(10.0, -3.0 + 5.0 * k / 50.0));
  return grid;
}

HMCertificate certify_hm_contraction(
    const NonlinearKernel& kernel, const Vector& v, double gamma, double K, double alpha_local,
    const std::vector<double>& beta_grid,
    const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& test_pairs, double tolerance) {
  if (!kernel.measure_independent()) {
    throw std::invalid_argument("certify_hm_contraction: kernel must be measure-independent");
  }
  detail::require_same_size(kernel.space_size(), v.size(), "certify_hm_contraction");
  if (!(gamma >= 0.0 && gamma < 1.0) || !(K >= 0.0) || !(alpha_local > 0.0 && alpha_local <= 1.0)) {
    throw std::invalid_argument("certify_hm_contraction: need gamma in [0,1), K >= 0, alpha_local in (0,1]");
  }
  if (!v.allFinite() || v.minCoeff() < 0.0) {
    throw std::invalid_argument("certify_hm_contraction: V must be finite and non-negative");
  }
  if (beta_grid.empty()) throw std::invalid_argument("certify_hm_contraction: empty beta grid");

  const Matrix q = kernel.matrix(DiscreteMeasure::uniform(kernel.space_size()));
  const Vector qv = q * v;
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    const double rhs = gamma * v[x] + K;
    if (qv[x] > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) {
      throw HMPreconditionError("drift condition QV <= gamma V + K fails at state " + std::to_string(x) +
                                    " (QV = " + std::to_string(qv[x]) + ", gamma V + K = " + std::to_string(rhs) + ")",
                                x);
    }
  }

  HMCertificate cert;
  cert.gamma = gamma;
  cert.K = K;
  cert.alpha_local = alpha_local;
  cert.sublevel_threshold = 4.0 * K / (1.0 - gamma);
  for (Eigen::Index x = 0; x < v.size(); ++x) {
    if (v[x] <= cert.sublevel_threshold) cert.sublevel_states.push_back(x);
  }
  const double overlap = matrix_overlap(q, cert.sublevel_states);
  if (cert.sublevel_states.size() >= 2 && overlap < alpha_local - 1e-12) {
    throw HMPreconditionError("local Dobrushin overlap on S_V is " + std::to_string(overlap) +
                                  ", below alpha_local = " + std::to_string(alpha_local),
                              std::nullopt);
  }

  double best_lambda = std::numeric_limits<double>::infinity();
  for (double beta : beta_grid) {
    if (!(beta > 0.0)) throw std::invalid_argument("certify_hm_contraction: beta values must be positive");
    const double lam = weighted_contraction_factor(q, v, beta);
    cert.beta_scan.emplace_back(beta, lam);
    if (lam < best_lambda) {
      best_lambda = lam;
      cert.beta = beta;
    }
  }
  cert.lambda_w = best_lambda;
  if (!(best_lambda < 1.0)) {
    throw HMCertificationFailure("no beta in the grid gives a contraction factor below 1 (best " +
                                 std::to_string(best_lambda) + ")");
  }

  const Vector f = Vector::Ones(v.size()) + cert.beta * v;
  for (std::size_t i = 0; i < test_pairs.size(); ++i) {
    const auto& [mu, nu] = test_pairs[i];
    const double lhs = weighted_tv_distance(f, Vector(q.transpose() * mu.probs()), Vector(q.transpose() * nu.probs()));
    const double rhs = weighted_tv_distance(f, mu, nu);
    if (lhs > cert.lambda_w * rhs + tolerance) {
      throw HMCertificationFailure("validation pair " + std::to_string(i) + " violates the certified contraction (" +
                                   std::to_string(lhs) + " > " + std::to_string(cert.lambda_w * rhs) + ")");
    }
    if (rhs > 0) cert.validation_worst_ratio = std::max(cert.validation_worst_ratio, lhs / rhs);
  }
  cert.validation_pairs = test_pairs.size();
  return cert;
}

DiscreteMeasure random_measure(Eigen::Index size, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector w(size);
  for (Eigen::Index i = 0; i < size; ++i) w[i] = expo(rng);
  return DiscreteMeasure(w / w.sum());
}

std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> random_measure_pairs(Eigen::Index size,
                                                                              std::size_t count,
                                                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, size - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  const auto draw = [&](int kind) {
    if (kind == 0) return random_measure(size, rng);
    if (kind == 1) {
      // Sparse support.
      Vector w = Vector::Zero(size);
      const Eigen::Index support = 1 + pick(rng) % std::max<Eigen::Index>(1, size);
      for (Eigen::Index k = 0; k < support; ++k) w[pick(rng)] += expo(rng) + 1e-3;
      return DiscreteMeasure(w / w.sum());
    }
    // Near a vertex.
    const double eps = std::pow(unit(rng), 3);
    Vector w = (eps / static_cast<double>(size)) * Vector::Ones(size);
    w[pick(rng)] += 1.0 - eps;
    return DiscreteMeasure(w / w.sum());
  };

  std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int kind = static_cast<int>(i % 3);
    auto a = draw(kind);
    auto b = draw(static_cast<int>((i / 3) % 3));
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return pairs;
}

}  // namespace nlerg

#include "nlerg/ergodicity.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace nlerg;

namespace {

Matrix two_state(double p, double q) {
  Matrix m(2, 2);
  m << p, 1.0 - p, 1.0 - q, q;
  return m;
}

/// Birth-death chain on {0..4} with a reset to state 0: down 0.5, up 0.3,
/// reset 0.1, hold 0.1; blocked moves are held in place.
Matrix reset_birth_death() {
  Matrix q = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    q(i, 0) += 0.1;
    q(i, std::max(i - 1, 0)) += 0.5;
    q(i, std::min(i + 1, 4)) += 0.3;
    q(i, i) += 0.1;
  }
  return q;
}

Vector powers_of_two(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = std::ldexp(1.0, i);
  return v;
}

Vector stationary_by_powers(const Matrix& q) {
  Matrix p = q;
  for (int k = 0; k < 12; ++k) p = p * p;
  return p.row(0).transpose();
}

}  // namespace

TEST(Evolve, OscillatingExample) {
  const auto t = evolve(oscillating_kernel(0.5), DiscreteMeasure::two_point(0.3), 4);
  ASSERT_EQ(t.measures.size(), 5u);
  EXPECT_NEAR(t.measures[1][0], 0.7, 1e-15);
  EXPECT_NEAR(t.measures[2][0], 0.3, 1e-15);
  EXPECT_NEAR(t.step_distances[0], 0.8, 1e-15);
}

TEST(Evolve, InvariantStartStaysPut) {
  const auto pi = DiscreteMeasure::uniform(2);
  const auto t = evolve(continuum_kernel(0.2, 0.8), pi, 20);
  for (const auto& m : t.measures) EXPECT_LT(tv_distance(m, pi), 1e-15);
}

TEST(Evolve, MarkovMatchesMatrixPowers) {
  const Matrix q = example_markov_matrix();
  const DiscreteMeasure mu0(Vector{{0.6, 0.3, 0.1}});
  const auto t = evolve(markov_kernel(q), mu0, 30);
  Matrix qk = Matrix::Identity(3, 3);
  for (std::size_t k = 0; k <= 30; ++k) {
    const Vector expected = qk.transpose() * mu0.probs();
    EXPECT_LT((t.measures[k].probs() - expected).cwiseAbs().maxCoeff(), 1e-14);
    qk = qk * q;
  }
}

TEST(Evolve, NormalizationPreserved) {
  const auto t = evolve(no_invariant_kernel(0.2, 0.7, 8), DiscreteMeasure::uniform(8), 500);
  for (std::size_t k = 0; k < t.measures.size(); ++k) {
    EXPECT_NEAR(t.measures[k].probs().sum(), 1.0, 1e-12 * static_cast<double>(k + 1));
  }
}

TEST(Evolve, AbortsWithStepIndexOnBadRows) {
  const NonlinearKernel bad(2,
                            [](const DiscreteMeasure& nu) {
                              Matrix p = Matrix::Constant(2, 2, 0.5);
                              if (nu[0] > 0.8) p(0, 0) = 0.7;
                              return p;
                            },
                            "bad");
  try {
    evolve(bad, DiscreteMeasure::two_point(0.9), 5);
    FAIL() << "expected EvolutionError";
  } catch (const EvolutionError&) {
  }
  const NonlinearKernel drifting(2,
                                 [](const DiscreteMeasure&) {
                                   Matrix p(2, 2);
                                   p << 0.9, 0.1, 0.9, 0.1;
                                   return p;
                                 },
                                 "fine");
  EXPECT_NO_THROW(evolve(drifting, DiscreteMeasure::two_point(0.5), 5));
  const NonlinearKernel late(2,
                             [](const DiscreteMeasure& nu) {
                               Matrix p(2, 2);
                               p << 0.9, 0.1, 0.9, 0.1;
                               if (nu[0] > 0.85) p(1, 1) = 0.2;
                               return p;
                             },
                             "late");
  try {
    evolve(late, DiscreteMeasure::two_point(0.5), 5);
    FAIL() << "expected EvolutionError";
  } catch (const EvolutionError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(FindInvariant, ContinuumConvergesImmediately) {
  for (double a : {0.125, 0.4, 0.875}) {
    const auto r = find_invariant(continuum_kernel(0.2, 0.8), DiscreteMeasure::two_point(a));
    ASSERT_TRUE(std::holds_alternative<Converged>(r));
    EXPECT_EQ(std::get<Converged>(r).iterations, 0u);
  }
}

TEST(FindInvariant, OscillationIsPeriodTwo) {
  const auto r = find_invariant(oscillating_kernel(0.5), DiscreteMeasure::two_point(0.3), 1e-10, 1000);
  ASSERT_TRUE(std::holds_alternative<NoConvergence>(r));
  const auto& nc = std::get<NoConvergence>(r);
  ASSERT_TRUE(nc.period.has_value());
  EXPECT_EQ(*nc.period, 2u);
  EXPECT_EQ(nc.tail.size(), 10u);
  EXPECT_NEAR(nc.last_step_distance, 0.8, 1e-12);
}

TEST(FindInvariant, MixtureMatchesGridSearch) {
  const auto k = mixture_kernel(two_state(0.8, 0.6), 0.3);
  const auto r = find_invariant(k, DiscreteMeasure::two_point(0.9));
  ASSERT_TRUE(std::holds_alternative<Converged>(r));
  const auto& pi = std::get<Converged>(r).pi;
  const int resolution = 100'000;
  double best_a = 0.0, best = 3.0;
  for (int i = 0; i <= resolution; ++i) {
    const auto mu = DiscreteMeasure::two_point(static_cast<double>(i) / resolution);
    const double res = tv_distance(k.push_forward(mu), mu.probs());
    if (res < best) {
      best = res;
      best_a = mu[0];
    }
  }
  EXPECT_NEAR(pi[0], best_a, 1.0 / resolution);
  EXPECT_LT(verify_invariant(k, pi), 1e-10);
}

TEST(FindInvariant, ThreeStateMixtureMatchesGridSearch) {
  const auto k = mixture_kernel(example_markov_matrix(), 0.25);
  const auto r = find_invariant(k, DiscreteMeasure::dirac(3, 0));
  ASSERT_TRUE(std::holds_alternative<Converged>(r));
  const auto& pi = std::get<Converged>(r).pi;
  const MeasureGrid grid(3, 200);
  const DiscreteMeasure* best = nullptr;
  double best_res = 3.0;
  for (const auto& mu : grid.points()) {
    const double res = tv_distance(k.push_forward(mu), mu.probs());
    if (res < best_res) {
      best_res = res;
      best = &mu;
    }
  }
  ASSERT_NE(best, nullptr);
  EXPECT_LT(tv_distance(*best, pi), 4.0 / 200);
}

TEST(FindInvariant, MarkovMatchesPowerMethod) {
  for (const Matrix& q : {example_markov_matrix(), reset_birth_death()}) {
    const auto r = find_invariant(markov_kernel(q), DiscreteMeasure::uniform(q.rows()));
    ASSERT_TRUE(std::holds_alternative<Converged>(r));
    EXPECT_LT((std::get<Converged>(r).pi.probs() - stationary_by_powers(q)).cwiseAbs().sum(), 1e-9);
  }
}

TEST(VerifyInvariant, Examples) {
  EXPECT_LT(verify_invariant(continuum_kernel(0.2, 0.8), DiscreteMeasure::uniform(2)), 1e-12);
  for (double gamma : {0.1, 0.5, 0.9}) {
    EXPECT_LT(verify_invariant(oscillating_kernel(gamma), DiscreteMeasure::uniform(2)), 1e-12);
  }
  EXPECT_GT(verify_invariant(continuum_kernel(0.2, 0.8), DiscreteMeasure::two_point(0.05)), 1e-3);
}

TEST(Contraction, RightHandSide) {
  EXPECT_EQ(contraction_rhs(0.0, 0.3, 0.2), 0.0);
  EXPECT_NEAR(contraction_rhs(1.0, 0.5, 0.2), 0.6, 1e-15);
  EXPECT_NEAR(contraction_rhs(2.0, 0.5, 0.5), 1.0, 1e-15);
}

TEST(Contraction, EqualPairsHaveZeroSides) {
  const auto mu = DiscreteMeasure::two_point(0.3);
  const auto rep = check_contraction_inequality(mixture_kernel(two_state(0.6, 0.6), 0.3), 0.56, 0.3, {{mu, mu}});
  EXPECT_EQ(rep.pairs_checked, 1u);
  EXPECT_TRUE(rep.violations.empty());
  EXPECT_EQ(rep.worst_margin, 0.0);
}

TEST(Contraction, MixtureKernelsHold) {
  const std::vector<std::pair<Matrix, double>> cases{
      {two_state(0.6, 0.6), 0.3}, {two_state(0.9, 0.7), 0.1}, {example_markov_matrix(), 0.2}};
  for (const auto& [q, lambda] : cases) {
    const auto k = mixture_kernel(q, lambda);
    const auto cert = certify(k, MeasureGrid(q.rows(), MeasureGrid::default_resolution(q.rows())));
    ASSERT_LE(cert.lambda_hat, cert.alpha_hat);
    const auto pairs = random_measure_pairs(q.rows(), 10'000, 99);
    const auto rep = check_contraction_inequality(k, cert.alpha_hat, cert.lambda_hat, pairs, 1e-10, 4);
    EXPECT_EQ(rep.pairs_checked, 10'000u);
    EXPECT_TRUE(rep.violations.empty()) << "worst margin " << rep.worst_margin;
  }
}

TEST(Contraction, MarkovReducesToLinearContraction) {
  const Matrix q = example_markov_matrix();
  const auto k = markov_kernel(q);
  const double alpha = matrix_overlap(q);
  const auto pairs = random_measure_pairs(3, 2000, 5);
  const auto rep = check_contraction_inequality(k, alpha, 0.0, pairs);
  EXPECT_TRUE(rep.violations.empty());
  for (const auto& [mu, nu] : pairs) {
    const double lhs = tv_distance(k.push_forward(mu), k.push_forward(nu));
    EXPECT_LE(lhs, (1.0 - alpha) * tv_distance(mu, nu) + 1e-12);
  }
}

TEST(Contraction, DetectsViolations) {
  const auto pairs = random_measure_pairs(2, 200, 6);
  const auto rep = check_contraction_inequality(oscillating_kernel(0.2), 0.9, 0.0, pairs);
  EXPECT_FALSE(rep.violations.empty());
  EXPECT_GT(rep.worst_margin, 0.0);
}

TEST(Contraction, WorkerCountIndependent) {
  const auto k = mixture_kernel(example_markov_matrix(), 0.2);
  const auto pairs = random_measure_pairs(3, 3000, 8);
  const auto a = check_contraction_inequality(k, 0.3, 0.2, pairs, 1e-10, 1);
  const auto b = check_contraction_inequality(k, 0.3, 0.2, pairs, 1e-10, 5);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.violations.size(), b.violations.size());
}

TEST(RateBound, Examples) {
  ErgodicityCertificate fast{0.5, 0.2, Regime::fast, 50, kDefaultTieTolerance};
  EXPECT_NEAR(rate_bound(fast, 3), 0.686, 1e-12);
  ErgodicityCertificate slow{0.5, 0.5, Regime::slow, 50, kDefaultTieTolerance};
  EXPECT_NEAR(rate_bound(slow, 4), 1.0, 1e-15);
  ErgodicityCertificate markov{0.3, 0.0, Regime::fast, 50, kDefaultTieTolerance};
  EXPECT_NEAR(rate_bound(markov, 2), 0.98, 1e-15);
  EXPECT_NEAR(rate_bound(markov, 2), 2.0 * std::pow(1.0 - 0.3, 2), 1e-15);
  EXPECT_THROW(rate_bound(slow, 0), std::invalid_argument);
  ErgodicityCertificate none{0.2, 0.8, Regime::uncertified, 50, kDefaultTieTolerance};
  EXPECT_THROW(rate_bound(none, 3), std::invalid_argument);
}

TEST(CheckRate, MarkovExample) {
  const auto k = markov_kernel(example_markov_matrix());
  const auto cert = certify(k, MeasureGrid(3, 8));
  ASSERT_NEAR(cert.alpha_hat, 0.4, 1e-12);
  const auto rep = check_rate(k, cert, DiscreteMeasure::dirac(3, 0), 60);
  EXPECT_TRUE(rep.violations.empty());
  for (std::size_t n = 0; n <= 60; ++n) EXPECT_NEAR(rep.bound[n], 2.0 * std::pow(0.6, n), 1e-15);
}

TEST(CheckRate, MixtureHasNoViolations) {
  const auto k = mixture_kernel(two_state(0.6, 0.6), 0.3);
  const auto cert = certify(k, MeasureGrid(2, 50));
  ASSERT_EQ(cert.regime, Regime::fast);
  for (double a : {0.0, 0.3, 1.0}) {
    const auto rep = check_rate(k, cert, DiscreteMeasure::two_point(a), 200);
    EXPECT_TRUE(rep.violations.empty());
    EXPECT_EQ(rep.measured.size(), 201u);
  }
}

TEST(CheckRate, StartingAtPi) {
  const auto k = markov_kernel(example_markov_matrix());
  const auto cert = certify(k, MeasureGrid(3, 8));
  const DiscreteMeasure pi(Vector(Vector::Constant(3, 1.0 / 3.0)));
  const auto rep = check_rate(k, cert, pi, 20);
  for (double d : rep.measured) EXPECT_LT(d, 1e-12);
  EXPECT_TRUE(rep.violations.empty());
}

TEST(CheckRate, UncertifiedRejected) {
  const auto k = continuum_kernel(0.2, 0.8);
  const auto cert = certify(k, MeasureGrid(2, 50));
  EXPECT_THROW(check_rate(k, cert, DiscreteMeasure::uniform(2), 10), std::invalid_argument);
}

TEST(CheckRate, MissingFixedPointIsFalsification) {
  ErgodicityCertificate forged{0.4, 0.0, Regime::fast, 50, kDefaultTieTolerance};
  EXPECT_THROW(check_rate(oscillating_kernel(0.4), forged, DiscreteMeasure::two_point(0.3), 10, 1e-10, 500),
               FalsificationError);
}

TEST(HM, EqualRowsGiveZeroFactor) {
  const auto k = markov_kernel(Matrix::Constant(2, 2, 0.5));
  const auto cert =
      certify_hm_contraction(k, Vector::Ones(2), 0.0, 1.0, 1.0, default_beta_grid(), random_measure_pairs(2, 100, 1));
  EXPECT_EQ(cert.lambda_w, 0.0);
}

TEST(HM, ResetBirthDeathChain) {
  const Matrix q = reset_birth_death();
  const Vector v = powers_of_two(5);
  EXPECT_TRUE(((q * v).array() <= (0.8 * v.array() + 2.0)).all());
  const auto cert = certify_hm_contraction(markov_kernel(q), v, 0.8, 2.0, 0.1, default_beta_grid(),
                                           random_measure_pairs(5, 1000, 2));
  EXPECT_LT(cert.lambda_w, 1.0);
  EXPECT_GT(cert.beta, 0.0);
  EXPECT_EQ(cert.sublevel_states.size(), 5u);
  EXPECT_NEAR(cert.sublevel_threshold, 40.0, 1e-12);
  EXPECT_EQ(cert.validation_pairs, 1000u);
  EXPECT_LE(cert.validation_worst_ratio, cert.lambda_w + 1e-10);

  const Vector f = Vector::Ones(5) + cert.beta * v;
  for (const auto& [mu, nu] : random_measure_pairs(5, 1000, 3)) {
    const double lhs = weighted_tv_distance(f, Vector(q.transpose() * mu.probs()), Vector(q.transpose() * nu.probs()));
    EXPECT_LE(lhs, cert.lambda_w * weighted_tv_distance(f, mu, nu) + 1e-10);
  }
}

TEST(HM, DiracFactorMatchesDirectComputation) {
  const Matrix q = reset_birth_death();
  const Vector v = powers_of_two(5);
  const double beta = 0.3;
  const Vector f = Vector::Ones(5) + beta * v;
  double direct = 0.0;
  for (int x = 0; x < 5; ++x) {
    for (int y = x + 1; y < 5; ++y) {
      direct = std::max(direct, weighted_tv_distance(f, Vector(q.row(x).transpose()), Vector(q.row(y).transpose())) /
                                    (f[x] + f[y]));
    }
  }
  EXPECT_NEAR(weighted_contraction_factor(q, v, beta), direct, 1e-15);
}

TEST(HM, DriftViolationNamesState) {
  const Matrix q = reset_birth_death();
  try {
    certify_hm_contraction(markov_kernel(q), powers_of_two(5), 0.5, 0.5, 0.1, default_beta_grid(), {});
    FAIL() << "expected HMPreconditionError";
  } catch (const HMPreconditionError& e) {
    ASSERT_TRUE(e.state().has_value());
  }
}

TEST(HM, RejectsNonlinearKernels) {
  EXPECT_THROW(certify_hm_contraction(oscillating_kernel(0.5), Vector::Ones(2), 0.0, 1.0, 0.5, default_beta_grid(), {}),
               std::invalid_argument);
}

TEST(HM, OverlapPreconditionChecked) {
  Matrix q = Matrix::Zero(3, 3);
  q << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_THROW(certify_hm_contraction(markov_kernel(q), Vector::Ones(3), 0.0, 1.0, 0.1, default_beta_grid(), {}),
               HMPreconditionError);
}

TEST(HM, BetaGrid) {
  const auto grid = default_beta_grid();
  EXPECT_EQ(grid.size(), 51u);
  EXPECT_NEAR(grid.front(), 1e-3, 1e-15);
  EXPECT_NEAR(grid.back(), 1e2, 1e-12);
}

TEST(RandomPairs, Deterministic) {
  const auto a = random_measure_pairs(4, 50, 17), b = random_measure_pairs(4, 50, 17);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second, b[i].second);
  }
}

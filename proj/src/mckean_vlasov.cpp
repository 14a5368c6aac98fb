#include "nlerg/mckean_vlasov.hpp"

#include "nlerg/parallel.hpp"
#include "nlerg/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace nlerg {

namespace {

enum Purpose : std::uint32_t { kDynamics = 0, kInitial = 1, kAuxiliary = 2, kDirections = 3 };

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

Vector ensemble_mean(const Matrix& positions) { return positions.rowwise().mean(); }

double student_t_975(std::size_t df) {
  static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                     2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                     2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return std::numeric_limits<double>::infinity();
  if (df <= 30) return table[df - 1];
  const double z = 1.959963984540054;
  const double n = static_cast<double>(df);
  return z + (z * z * z + z) / (4.0 * n) + (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96.0 * n * n);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t steps_for(double duration, double h) {
  return static_cast<std::size_t>(std::llround(duration / h));
}

double exp_moment(const Point& x) { return x.size() == 1 ? std::exp(x[0]) : std::exp(x.norm()); }

}  // namespace

// Specs ---------------------------------------------------------------------

void SMVESpec::validate() const {
  require(dimension >= 1 && dimension <= kMaxDimension, "dimension must be 1, 2 or 3");
  require(static_cast<bool>(b1), "b1 is not set");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be finite and >= 0");
  require(positive(r), "r must be > 0");
  require(positive(M), "M must be > 0");
  require(positive(D), "D must be > 0");
  require(std::isfinite(L) && L >= 0.0, "L must be finite and >= 0");
  if (b2) require(b2->summarize && b2->drift, "interaction needs both summarize and drift");
}

Point vh_drift(const Point& x, double r, double M) { return -r * x / std::max(x.norm(), M); }

Point tanh_mean_attraction(const Point& x, const Vector& mean, double D) {
  const Point diff = mean - x;
  const double n = diff.norm();
  if (n == 0.0) return Point::Zero(x.size());
  return D * std::tanh(n) * diff / n;
}

SMVESpec ou_spec(int dimension) {
  SMVESpec s;
  s.dimension = dimension;
  s.b1 = [](const Point& x) -> Point { return -x; };
  s.r = 1.0;
  s.M = 1.0;
  s.L = 1.0;
  s.label = "ou";
  return s;
}

SMVESpec vh_spec(double r, double M, double D, double epsilon, int dimension) {
  SMVESpec s;
  s.dimension = dimension;
  s.b1 = [r, M](const Point& x) { return vh_drift(x, r, M); };
  s.b2 = Interaction{ensemble_mean, [D](const Point& x, const Vector& m) { return tanh_mean_attraction(x, m, D); }};
  s.epsilon = epsilon;
  s.r = r;
  s.M = M;
  s.D = D;
  s.L = r / M + D;
  s.label = "vh";
  s.validate();
  return s;
}

SMVESpec brownian_spec(int dimension) {
  SMVESpec s;
  s.dimension = dimension;
  s.b1 = [](const Point& x) -> Point { return Point::Zero(x.size()); };
  s.L = 0.0;
  s.label = "brownian";
  return s;
}

// Initial laws ----------------------------------------------------------------

int dimension_of(const InitialLaw& law) {
  return std::visit(
      [](const auto& l) -> int {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DiracLaw>) return static_cast<int>(l.at.size());
        if constexpr (std::is_same_v<T, GaussianLaw>) return static_cast<int>(l.mean.size());
        if constexpr (std::is_same_v<T, AtomicLaw>) {
          return l.atoms.empty() ? 0 : static_cast<int>(l.atoms.front().size());
        }
      },
      law);
}

void validate_law(const InitialLaw& law) {
  const int d = dimension_of(law);
  require(d >= 1 && d <= kMaxDimension, "initial law must live in dimension 1, 2 or 3");
  if (const auto* g = std::get_if<GaussianLaw>(&law)) {
    require(g->mean.allFinite(), "Gaussian mean must be finite");
    require(std::isfinite(g->sd) && g->sd >= 0.0, "Gaussian sd must be finite and >= 0");
  } else if (const auto* dl = std::get_if<DiracLaw>(&law)) {
    require(dl->at.allFinite(), "Dirac location must be finite");
  } else if (const auto* a = std::get_if<AtomicLaw>(&law)) {
    require(a->atoms.size() == a->weights.size(), "atomic law needs one weight per atom");
    double total = 0.0;
    for (std::size_t i = 0; i < a->atoms.size(); ++i) {
      require(a->atoms[i].size() == d && a->atoms[i].allFinite(), "atoms must be finite and share a dimension");
      require(std::isfinite(a->weights[i]) && a->weights[i] >= 0.0, "atom weights must be >= 0");
      total += a->weights[i];
    }
    require(std::abs(total - 1.0) <= kNormalizationTolerance, "atom weights must sum to 1");
  }
}

namespace {

std::map<std::vector<double>, double> atoms_of(const InitialLaw& law) {
  std::map<std::vector<double>, double> out;
  auto key = [](const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); };
  if (const auto* d = std::get_if<DiracLaw>(&law)) {
    out[key(d->at)] = 1.0;
  } else if (const auto* a = std::get_if<AtomicLaw>(&law)) {
    for (std::size_t i = 0; i < a->atoms.size(); ++i) out[key(a->atoms[i])] += a->weights[i];
  }
  return out;
}

}  // namespace

std::optional<double> exact_tv(const InitialLaw& a, const InitialLaw& b) {
  const bool ga = std::holds_alternative<GaussianLaw>(a), gb = std::holds_alternative<GaussianLaw>(b);
  if (ga || gb) {
    if (ga && gb) {
      const auto& x = std::get<GaussianLaw>(a);
      const auto& y = std::get<GaussianLaw>(b);
      if (x.mean == y.mean && x.sd == y.sd) return 0.0;
      return std::nullopt;
    }
    const auto& g = std::get<GaussianLaw>(ga ? a : b);
    if (g.sd > 0.0) return 2.0;
    return std::nullopt;
  }
  auto pa = atoms_of(a), pb = atoms_of(b);
  double tv = 0.0;
  for (const auto& [k, w] : pa) {
    const auto it = pb.find(k);
    tv += std::abs(w - (it == pb.end() ? 0.0 : it->second));
  }
  for (const auto& [k, w] : pb) {
    if (!pa.count(k)) tv += w;
  }
  return tv;
}

Matrix sample_initial(const InitialLaw& law, std::size_t particles, std::uint64_t seed, std::uint32_t stream) {
  validate_law(law);
  const int d = dimension_of(law);
  Matrix x(d, static_cast<Eigen::Index>(particles));
  std::vector<double> cumulative;
  if (const auto* a = std::get_if<AtomicLaw>(&law)) {
    cumulative.resize(a->weights.size());
    std::partial_sum(a->weights.begin(), a->weights.end(), cumulative.begin());
  }
  for (std::size_t i = 0; i < particles; ++i) {
    const CounterStream cs(seed, static_cast<std::uint32_t>(i), 0, stream, kInitial);
    const auto col = static_cast<Eigen::Index>(i);
    if (const auto* dl = std::get_if<DiracLaw>(&law)) {
      x.col(col) = dl->at;
    } else if (const auto* g = std::get_if<GaussianLaw>(&law)) {
      for (int c = 0; c < d; ++c) x(c, col) = g->mean[c] + g->sd * cs.normal(static_cast<std::uint32_t>(c));
    } else {
      const auto& a = std::get<AtomicLaw>(law);
      const double u = cs.uniform(0) * cumulative.back();
      auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      k = std::min(k, a.atoms.size() - 1);
      while (a.weights[k] == 0.0 && k > 0) --k;
      x.col(col) = a.atoms[k];
    }
  }
  return x;
}

// Simulation -------------------------------------------------------------------

void SimulationConfig::validate() const {
  require(particles >= 100, "N must be >= 100");
  require(particles <= std::numeric_limits<std::uint32_t>::max(), "N too large");
  require(positive(h), "h must be > 0");
  require(std::isfinite(horizon) && horizon >= h, "T must be >= h");
  require(static_cast<double>(steps_for(horizon, h)) < 4.0e9, "too many steps");
  for (double t : snapshot_times) {
    require(std::isfinite(t) && t >= 0.0 && t <= horizon + 0.5 * h, "snapshot times must lie in [0, T]");
  }
}

ParticleTrajectory simulate(const SMVESpec& spec, const InitialLaw& initial, const SimulationConfig& config) {
  spec.validate();
  config.validate();
  require(dimension_of(initial) == spec.dimension, "initial law dimension does not match the SDE dimension");

  const std::size_t steps = steps_for(config.horizon, config.h);
  std::vector<std::pair<std::size_t, double>> wanted;
  for (double t : config.snapshot_times) wanted.emplace_back(steps_for(t, config.h), t);
  if (wanted.empty()) wanted.emplace_back(steps, config.horizon);
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end(),
                           [](const auto& a, const auto& b) { return a.first == b.first; }),
               wanted.end());

  ParticleTrajectory out;
  out.label = spec.label;
  out.h = config.h;
  out.particles = config.particles;

  Matrix x = sample_initial(initial, config.particles, config.seed, config.stream);
  const auto n = static_cast<std::size_t>(x.cols());
  const int d = spec.dimension;
  const double sqrt_h = std::sqrt(config.h);
  const bool interacting = spec.b2.has_value() && spec.epsilon > 0.0;
  std::vector<double> b2_norm(interacting ? n : 0, 0.0);
  std::vector<std::uint8_t> bad(n, 0);

  auto next_wanted = wanted.begin();
  auto take = [&](std::size_t k) {
    while (next_wanted != wanted.end() && next_wanted->first == k) {
      out.snapshots.push_back({next_wanted->second, k, x});
      ++next_wanted;
    }
  };
  take(0);

  for (std::size_t k = 0; k < steps; ++k) {
    Vector summary;
    if (interacting) summary = spec.b2->summarize(x);
    parallel_chunks(n, config.workers, [&](std::size_t begin, std::size_t end) {
      Point xi(d), drift(d);
      for (std::size_t i = begin; i < end; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        xi = x.col(col);
        drift = spec.b1(xi);
        if (interacting) {
          const Point b2 = spec.b2->drift(xi, summary);
          b2_norm[i] = std::max(b2_norm[i], b2.norm());
          drift += spec.epsilon * b2;
        }
        const CounterStream cs(config.seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k),
                               config.stream, kDynamics);
        for (int c = 0; c < d; ++c) {
          xi[c] += drift[c] * config.h + sqrt_h * cs.normal(static_cast<std::uint32_t>(c));
        }
        if (!xi.allFinite()) bad[i] = 1;
        x.col(col) = xi;
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (bad[i]) throw SimulationError(k + 1, "particle " + std::to_string(i) + " left the finite range");
      if (interacting && b2_norm[i] > spec.D + kBoundTolerance) {
        throw SimulationError(k + 1, "|b2| = " + std::to_string(b2_norm[i]) + " exceeds D = " +
                                         std::to_string(spec.D) + " at particle " + std::to_string(i));
      }
    }
    take(k + 1);
  }
  if (interacting) out.max_b2_norm = *std::max_element(b2_norm.begin(), b2_norm.end());
  return out;
}

// Weight function -----------------------------------------------------------------

WeightFunction::WeightFunction(double r, double M)
    : kappa_(std::min(r / 4.0, 1.0)), M_(M), a_(std::max(M - 1.0, 0.0)) {
  require(positive(r) && positive(M), "weight function needs r > 0 and M > 0");
  const double w = M_ - a_;
  const double e = std::exp(kappa_ * M_);
  const double g1 = w * kappa_ * e;
  const double g2 = w * w * kappa_ * kappa_ * e;
  c_ = {1.0,
        0.0,
        0.0,
        -10.0 + 10.0 * e - 4.0 * g1 + 0.5 * g2,
        15.0 - 15.0 * e + 7.0 * g1 - g2,
        -6.0 + 6.0 * e - 3.0 * g1 + 0.5 * g2};
}

double WeightFunction::radial(double s) const {
  if (s >= M_) return std::exp(kappa_ * s);
  if (s <= a_) return 1.0;
  const double u = (s - a_) / (M_ - a_);
  double p = c_[5];
  for (int k = 4; k >= 0; --k) p = p * u + c_[static_cast<std::size_t>(k)];
  return p;
}

// VH condition ---------------------------------------------------------------------

VHReport verify_vh(const std::function<Point(const Point&)>& b1, double r, double M,
                   const std::vector<Point>& sample_points) {
  require(positive(r) && positive(M), "verify_vh needs r > 0 and M > 0");
  VHReport rep;
  for (const auto& x : sample_points) {
    const double norm = x.norm();
    if (norm < M * (1.0 - 1e-12)) continue;
    ++rep.points_checked;
    const double margin = b1(x).dot(x) + r * norm;
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (margin > kBoundTolerance && rep.passed) {
      rep.passed = false;
      rep.failing_point = x;
    }
  }
  if (rep.points_checked == 0) throw DiagnosticError("verify_vh: no sample point with |x| >= M");
  return rep;
}

std::vector<Point> vh_shell_points(int dimension, double M, std::size_t shells, std::size_t per_shell,
                                   std::uint64_t seed) {
  require(dimension >= 1 && dimension <= kMaxDimension, "dimension must be 1, 2 or 3");
  require(shells >= 2, "need at least two shells");
  std::vector<Point> dirs;
  if (dimension == 1) {
    dirs = {Point::Constant(1, 1.0), Point::Constant(1, -1.0)};
  } else {
    for (std::size_t j = 0; j < per_shell; ++j) {
      const CounterStream cs(seed, static_cast<std::uint32_t>(j), 0, 0, kDirections);
      Point u(dimension);
      for (int c = 0; c < dimension; ++c) u[c] = cs.normal(static_cast<std::uint32_t>(c));
      dirs.push_back(u / u.norm());
    }
  }
  std::vector<Point> pts;
  for (std::size_t k = 0; k < shells; ++k) {
    const double radius = M * (1.0 + 9.0 * static_cast<double>(k) / static_cast<double>(shells - 1));
    for (const auto& u : dirs) pts.push_back(radius * u);
  }
  return pts;
}

// Lyapunov diagnostic --------------------------------------------------------------

LyapunovReport lyapunov_diagnostic(const ParticleTrajectory& trajectory, const WeightFunction& v, double lag,
                                   double r) {
  require(positive(lag) && lag >= trajectory.h, "lag must be >= h");
  const std::size_t lag_steps = steps_for(lag, trajectory.h);
  LyapunovReport rep;
  rep.lag = lag;
  for (const auto& s : trajectory.snapshots) {
    if (s.step % lag_steps != 0) continue;
    if (!rep.times.empty() && s.step != steps_for(rep.times.front(), trajectory.h) + rep.times.size() * lag_steps) {
      throw DiagnosticError("lyapunov_diagnostic: snapshots at multiples of the lag are not contiguous");
    }
    const auto n = s.positions.cols();
    Vector values(n);
    for (Eigen::Index i = 0; i < n; ++i) values[i] = v(Point(s.positions.col(i)));
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
    rep.times.push_back(s.time);
    rep.means.push_back(mean);
    rep.standard_errors.push_back(std::sqrt(var / static_cast<double>(n)));
  }
  if (rep.means.size() < 3) {
    throw DiagnosticError("lyapunov_diagnostic: " + std::to_string(rep.means.size()) +
                          " lag points, at least 3 required");
  }
  if (rep.means.size() < 11) {
    throw DiagnosticError("lyapunov_diagnostic: trajectory spans " + std::to_string(rep.means.size() - 1) +
                          " lags, at least 10 required");
  }
  rep.predicted_gamma = std::exp(-v.kappa() * lag * r / 4.0);

  const std::size_t m = rep.means.size() - 1;
  const Eigen::Map<const Vector> xs(rep.means.data(), static_cast<Eigen::Index>(m));
  const Eigen::Map<const Vector> ys(rep.means.data() + 1, static_cast<Eigen::Index>(m));
  const double xbar = xs.mean(), ybar = ys.mean();
  const double sxx = (xs.array() - xbar).square().sum();
  const double scale = std::max(1.0, xs.cwiseAbs().maxCoeff());
  const double max_se = *std::max_element(rep.standard_errors.begin(), rep.standard_errors.end());
  if (sxx <= std::pow(1e-12 * scale, 2) * static_cast<double>(m)) {
    rep.degenerate = true;
    rep.gamma_hat = 0.0;
    rep.K_hat = ybar;
    rep.bound = rep.means.front() + 3.0 * max_se;
  } else {
    rep.gamma_hat = ((xs.array() - xbar) * (ys.array() - ybar)).sum() / sxx;
    rep.K_hat = ybar - rep.gamma_hat * xbar;
    rep.bound = rep.gamma_hat < 1.0 ? rep.means.front() + rep.K_hat / (1.0 - rep.gamma_hat) + 3.0 * max_se
                                    : std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < m; ++k) {
    rep.residuals.push_back(rep.means[k + 1] - rep.gamma_hat * rep.means[k] - rep.K_hat);
  }
  rep.bounded = std::isfinite(rep.bound) &&
                *std::max_element(rep.means.begin(), rep.means.end()) <= rep.bound;
  return rep;
}

// Constants ------------------------------------------------------------------------

double epsilon_zero(double alpha_R1, double r, double D) {
  require(positive(alpha_R1) && alpha_R1 <= 1.0, "alpha(R,1) must lie in (0, 1]");
  require(positive(r) && positive(D), "r and D must be > 0");
  return std::min(alpha_R1 / (2.0 * D), r / (2.0 * D));
}

double perturbation_bound(double C, double epsilon, double beta, double zeta_V, double weighted_distance) {
  require(C >= 0.0 && epsilon >= 0.0 && beta >= 0.0 && zeta_V >= 0.0 && weighted_distance >= 0.0,
          "perturbation bound inputs must be >= 0");
  return C * epsilon * (1.0 + beta) * (1.0 + zeta_V) * weighted_distance;
}

double contraction_factor_theta(double lambda, double C, double epsilon, double beta, double K, double nu_V) {
  require(lambda >= 0.0 && C >= 0.0 && epsilon >= 0.0 && beta >= 0.0 && K >= 0.0 && nu_V >= 0.0,
          "contraction factor inputs must be >= 0");
  return lambda + C * epsilon * (1.0 + beta) * (1.0 + K + nu_V);
}

// Local overlap --------------------------------------------------------------------

LocalAlphaReport estimate_local_alpha(const std::function<Point(const Point&)>& b1, int dimension,
                                      const LocalAlphaConfig& config) {
  require(dimension >= 1 && dimension <= kMaxDimension, "dimension must be 1, 2 or 3");
  require(static_cast<bool>(b1), "b1 is not set");
  require(positive(config.R), "R must be > 0");
  require(positive(config.h) && std::isfinite(config.t) && config.t >= config.h, "need t >= h > 0");
  require(config.n_sims >= 10'000, "n_sims must be >= 10000 per start point");
  require(!config.x_grid.empty(), "x_grid is empty");
  require(config.binning.dimension() == static_cast<std::size_t>(dimension), "binning dimension mismatch");
  for (const auto& x : config.x_grid) {
    require(x.size() == dimension, "grid point dimension mismatch");
    require(x.norm() <= config.R * (1.0 + 1e-12), "grid point outside the ball of radius R");
  }
  const std::size_t steps = steps_for(config.t, config.h);
  const double sqrt_h = std::sqrt(config.h);
  const auto n = static_cast<Eigen::Index>(config.n_sims);

  std::vector<HistogramDensity> hists;
  for (const auto& start : config.x_grid) {
    Matrix y(dimension, n);
    parallel_chunks(config.n_sims, config.workers, [&](std::size_t begin, std::size_t end) {
      Point yi(dimension);
      for (std::size_t i = begin; i < end; ++i) {
        yi = start;
        for (std::size_t k = 0; k < steps; ++k) {
          const CounterStream cs(config.seed, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k), 0,
                                 kAuxiliary);
          const Point drift = b1(yi);
          for (int c = 0; c < dimension; ++c) {
            yi[c] += drift[c] * config.h + sqrt_h * cs.normal(static_cast<std::uint32_t>(c));
          }
        }
        y.col(static_cast<Eigen::Index>(i)) = yi;
      }
    });
    if (!y.allFinite()) throw SimulationError(steps, "auxiliary diffusion left the finite range");
    hists.push_back(histogram_of(EmpiricalMeasure(std::move(y)), config.binning));
  }
  LocalAlphaReport rep;
  for (std::size_t i = 0; i < hists.size(); ++i) {
    for (std::size_t j = i + 1; j < hists.size(); ++j) {
      const double tv = config.x_grid[i] == config.x_grid[j] ? 0.0 : tv_between_histograms(hists[i], hists[j]);
      if (tv > rep.max_tv) {
        rep.max_tv = tv;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
  }
  rep.alpha = std::clamp(1.0 - 0.5 * rep.max_tv, 0.0, 1.0);
  return rep;
}

double ou_exact_overlap(double x, double y, double t) {
  require(positive(t), "t must be > 0");
  const double shift = std::abs(x - y) * std::exp(-t);
  const double sigma = std::sqrt(0.5 * (1.0 - std::exp(-2.0 * t)));
  return std::erfc(shift / (2.0 * sigma * std::sqrt(2.0)));
}

// Two-ensemble comparisons ------------------------------------------------------

std::vector<std::pair<double, double>> tv_series(const ParticleTrajectory& a, const ParticleTrajectory& b,
                                                 const Binning& binning) {
  require(a.h == b.h, "trajectories use different step sizes");
  std::vector<std::pair<double, double>> out;
  auto jt = b.snapshots.begin();
  for (const auto& s : a.snapshots) {
    while (jt != b.snapshots.end() && jt->step < s.step) ++jt;
    if (jt == b.snapshots.end()) break;
    if (jt->step != s.step) continue;
    const double tv = tv_between_histograms(histogram_of(EmpiricalMeasure(s.positions), binning),
                                            histogram_of(EmpiricalMeasure(jt->positions), binning));
    out.emplace_back(s.time, tv);
  }
  require(!out.empty(), "trajectories share no snapshot times");
  return out;
}

DecayFit fit_decay(const std::vector<std::pair<double, double>>& series, double noise_floor) {
  require(std::isfinite(noise_floor) && noise_floor >= 0.0, "noise floor must be finite and >= 0");
  DecayFit fit;
  fit.noise_floor = noise_floor;
  std::vector<double> ts, ls;
  for (const auto& [t, tv] : series) {
    fit.times.push_back(t);
    fit.tv.push_back(tv);
    const bool use = std::isfinite(tv) && tv > noise_floor;
    fit.used.push_back(use);
    if (use) {
      ts.push_back(t);
      ls.push_back(std::log(tv));
    }
  }
  if (ts.size() < 3) {
    throw DiagnosticError("fit_decay: " + std::to_string(ts.size()) + " of " + std::to_string(series.size()) +
                          " TV estimates lie above the noise floor " + std::to_string(noise_floor) +
                          ", at least 3 required");
  }
  const auto n = static_cast<Eigen::Index>(ts.size());
  const Eigen::Map<const Vector> t(ts.data(), n), l(ls.data(), n);
  const double tbar = t.mean(), lbar = l.mean();
  const double stt = (t.array() - tbar).square().sum();
  if (stt <= 0.0) throw DiagnosticError("fit_decay: usable points share a single time");
  const double slope = ((t.array() - tbar) * (l.array() - lbar)).sum() / stt;
  const double intercept = lbar - slope * tbar;
  const double ssr = (l.array() - intercept - slope * t.array()).square().sum();
  const auto df = static_cast<std::size_t>(n - 2);
  fit.residual_sd = std::sqrt(ssr / static_cast<double>(df));
  fit.theta = -slope;
  fit.C = std::exp(intercept);
  fit.theta_se = fit.residual_sd / std::sqrt(stt);
  const double q = student_t_975(df);
  fit.theta_lower = fit.theta - q * fit.theta_se;
  fit.theta_upper = fit.theta + q * fit.theta_se;
  return fit;
}

DecayFit fit_decay(const ParticleTrajectory& a, const ParticleTrajectory& b, const Binning& binning,
                   double noise_floor) {
  return fit_decay(tv_series(a, b, binning), noise_floor);
}

GirsanovReport girsanov_bound_check(const SMVESpec& spec, const InitialLaw& mu0, const InitialLaw& nu0, double tv0,
                                    const GirsanovConfig& config) {
  spec.validate();
  require(std::isfinite(tv0) && tv0 >= 0.0 && tv0 <= 2.0, "tv0 must lie in [0, 2]");
  if (const auto exact = exact_tv(mu0, nu0)) {
    require(std::abs(*exact - tv0) <= 1e-12, "tv0 disagrees with the initial laws");
  }
  require(!config.times.empty(), "no check times");
  require(config.calibration_pairs >= 1, "calibration needs at least one pair");
  require(config.calibration_quantile > 0.0 && config.calibration_quantile <= 1.0,
          "calibration quantile must lie in (0, 1]");
  SimulationConfig sim = config.simulation;
  sim.snapshot_times = config.times;
  sim.horizon = *std::max_element(config.times.begin(), config.times.end());

  GirsanovReport rep;
  rep.epsilon = spec.epsilon;
  rep.L = spec.L;
  rep.tv0 = tv0;
  const auto paired = tv_series(simulate(spec, mu0, sim), simulate(spec, nu0, sim), config.binning);

  std::vector<std::vector<double>> calib(paired.size());
  for (std::size_t j = 0; j < config.calibration_pairs; ++j) {
    SimulationConfig s1 = sim, s2 = sim;
    s1.stream = sim.stream + 1 + 2 * static_cast<std::uint32_t>(j);
    s2.stream = s1.stream + 1;
    const auto series = tv_series(simulate(spec, nu0, s1), simulate(spec, nu0, s2), config.binning);
    for (std::size_t k = 0; k < series.size(); ++k) calib[k].push_back(series[k].second);
  }
  for (std::size_t k = 0; k < paired.size(); ++k) {
    const double t = paired[k].first;
    rep.times.push_back(t);
    rep.estimated.push_back(paired[k].second);
    rep.bound.push_back(std::sqrt(2.0) * tv0 * std::exp(4.0 * spec.epsilon * spec.epsilon * spec.L * spec.L * t));
    rep.allowance.push_back(quantile(calib[k], config.calibration_quantile));
    if (rep.estimated.back() > rep.bound.back() + rep.allowance.back()) rep.violations.push_back(k);
  }
  return rep;
}

// Exponential moment ---------------------------------------------------------------

IntegralI integral_I(const InitialLaw& law, std::size_t samples, std::uint64_t seed) {
  validate_law(law);
  IntegralI out;
  out.modulus = dimension_of(law) > 1;
  if (const auto* d = std::get_if<DiracLaw>(&law)) {
    out.value = exp_moment(d->at);
    out.exact = true;
  } else if (const auto* a = std::get_if<AtomicLaw>(&law)) {
    for (std::size_t i = 0; i < a->atoms.size(); ++i) out.value += a->weights[i] * exp_moment(a->atoms[i]);
    out.exact = true;
  } else {
    const auto& g = std::get<GaussianLaw>(law);
    if (g.mean.size() == 1) {
      out.value = std::exp(g.mean[0] + 0.5 * g.sd * g.sd);
      out.exact = true;
    } else {
      require(samples >= 1, "samples must be >= 1");
      out.value = integral_I(EmpiricalMeasure(sample_initial(law, samples, seed, 0))).value;
    }
  }
  if (!std::isfinite(out.value)) out.value = std::numeric_limits<double>::infinity();
  return out;
}

IntegralI integral_I(const EmpiricalMeasure& ensemble) {
  IntegralI out;
  out.modulus = ensemble.dimension() > 1;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ensemble.count(); ++i) sum += exp_moment(Point(ensemble.point(i)));
  out.value = sum / static_cast<double>(ensemble.count());
  if (!std::isfinite(out.value)) out.value = std::numeric_limits<double>::infinity();
  return out;
}

// Interaction Lipschitz diagnostic ---------------------------------------------------

InteractionLipschitzReport interaction_lipschitz(const Interaction& b2, const EmpiricalMeasure& mu,
                                                 const EmpiricalMeasure& nu, const std::vector<double>& x_points,
                                                 W2Method method) {
  require(mu.dimension() == 1 && nu.dimension() == 1, "interaction_lipschitz is one-dimensional");
  require(!x_points.empty(), "no evaluation points");
  const Vector sm = b2.summarize(mu.points()), sn = b2.summarize(nu.points());
  InteractionLipschitzReport rep;
  for (double x : x_points) {
    const Point p = Point::Constant(1, x);
    rep.drift_difference = std::max(rep.drift_difference, (b2.drift(p, sm) - b2.drift(p, sn)).norm());
  }
  rep.rho2_truncated = wasserstein2_truncated(mu, nu, method);
  rep.w2_plain = wasserstein2_plain_1d(mu, nu);
  auto ratio = [&](double dist) {
    if (dist > 0.0) return rep.drift_difference / dist;
    return rep.drift_difference > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  rep.ratio_truncated = ratio(rep.rho2_truncated);
  rep.ratio_plain = ratio(rep.w2_plain);
  return rep;
}

}  // namespace nlerg

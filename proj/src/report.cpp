#include "nlerg/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace nlerg::report {

namespace {

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

template <typename T>
Json integers(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(static_cast<long long>(x));
  return a;
}

Json point(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

void write(std::ostream& out, const Json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  const std::string inner(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << inner << Json(it.key()).dump() << ": ";
        write(out, it.value(), depth + 1);
      }
      out << "\n" << pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      if (scalars) {
        out << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          write(out, j[i], depth + 1);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << inner;
        write(out, j[i], depth + 1);
      }
      out << "\n" << pad << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out << (std::isfinite(x) ? format_double(x) : "null");
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string dump(const Json& doc) {
  std::ostringstream out;
  write(out, doc, 0);
  out << "\n";
  return out.str();
}

Json envelope(const std::string& kind, bool passed, Json body) {
  Json j;
  j["schema"] = kReportSchema;
  j["kind"] = kind;
  j["status"] = passed ? "pass" : "fail";
  j["body"] = std::move(body);
  return j;
}

Json to_json(const DiscreteMeasure& mu) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < mu.size(); ++i) a.push_back(mu[i]);
  return a;
}

Json to_json(const ErgodicityCertificate& c) {
  Json j;
  j["alpha_hat"] = c.alpha_hat;
  j["lambda_hat"] = c.lambda_hat;
  j["regime"] = to_string(c.regime);
  j["grid_resolution"] = c.grid_resolution;
  j["tie_tolerance"] = c.tie_tolerance;
  return j;
}

Json to_json(const ValidationReport& v) {
  Json j;
  j["passed"] = v.passed;
  j["worst_deviation"] = v.worst_deviation;
  j["failing_measure"] = v.failing_measure ? Json(static_cast<long long>(*v.failing_measure)) : Json();
  j["failing_row"] = v.failing_row ? Json(static_cast<long long>(*v.failing_row + 1)) : Json();
  j["message"] = v.message;
  return j;
}

Json to_json(const ContractionReport& r) {
  Json j;
  j["pairs_checked"] = r.pairs_checked;
  j["worst_margin"] = r.worst_margin;
  Json v = Json::array();
  for (const auto& x : r.violations) {
    v.push_back(Json{{"pair", x.pair_index}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  }
  j["violations"] = std::move(v);
  return j;
}

Json to_json(const RateReport& r) {
  Json j;
  j["certificate"] = to_json(r.certificate);
  j["pi"] = to_json(r.pi);
  j["fixed_point_iterations"] = r.fixed_point_iterations;
  j["fixed_point_residual"] = r.fixed_point_residual;
  j["pi_slack"] = r.pi_slack;
  j["steps"] = r.measured.empty() ? 0 : r.measured.size() - 1;
  Json v = Json::array();
  for (const auto& x : r.violations) v.push_back(Json{{"n", x.n}, {"measured", x.measured}, {"bound", x.bound}});
  j["violations"] = std::move(v);
  return j;
}

Json to_json(const HMCertificate& c) {
  Json j;
  j["gamma"] = c.gamma;
  j["K"] = c.K;
  j["alpha_local"] = c.alpha_local;
  j["beta"] = c.beta;
  j["lambda_w"] = c.lambda_w;
  j["sublevel_threshold"] = c.sublevel_threshold;
  Json states = Json::array();
  for (auto s : c.sublevel_states) states.push_back(static_cast<long long>(s + 1));
  j["sublevel_states"] = std::move(states);
  Json scan = Json::array();
  for (const auto& [b, l] : c.beta_scan) scan.push_back(Json{{"beta", b}, {"lambda_w", l}});
  j["beta_scan"] = std::move(scan);
  j["validation_pairs"] = c.validation_pairs;
  j["validation_worst_ratio"] = c.validation_worst_ratio;
  return j;
}

Json to_json(const CounterexampleReport& r) {
  Json j;
  j["construction"] = r.construction;
  Json params;
  for (const auto& [k, v] : r.parameters) params[k] = v;
  j["parameters"] = params.is_null() ? Json::object() : params;
  Json claims = Json::array();
  for (const auto& c : r.claims) {
    claims.push_back(Json{{"name", c.name},
                          {"statement", c.statement},
                          {"passed", c.passed},
                          {"witness", c.witness},
                          {"detail", c.detail}});
  }
  j["claims"] = std::move(claims);
  j["all_passed"] = r.all_passed();
  return j;
}

Json to_json(const FixedPointResult& r) {
  Json j;
  if (const auto* c = std::get_if<Converged>(&r)) {
    j["converged"] = true;
    j["pi"] = to_json(c->pi);
    j["iterations"] = c->iterations;
    j["residual"] = c->residual;
  } else {
    const auto& n = std::get<NoConvergence>(r);
    j["converged"] = false;
    j["iterations"] = n.iterations;
    j["period"] = n.period ? Json(static_cast<long long>(*n.period)) : Json();
    j["last_step_distance"] = n.last_step_distance;
    Json tail = Json::array();
    for (const auto& m : n.tail) tail.push_back(to_json(m));
    j["tail"] = std::move(tail);
  }
  return j;
}

Json to_json(const DecayFit& f) {
  Json j;
  j["noise_floor"] = f.noise_floor;
  j["points"] = f.times.size();
  j["points_used"] = static_cast<long long>(std::count(f.used.begin(), f.used.end(), true));
  j["C"] = f.C;
  j["theta"] = f.theta;
  j["theta_se"] = f.theta_se;
  j["theta_lower"] = f.theta_lower;
  j["theta_upper"] = f.theta_upper;
  j["residual_sd"] = f.residual_sd;
  return j;
}

Json to_json(const GirsanovReport& r) {
  Json j;
  j["epsilon"] = r.epsilon;
  j["L"] = r.L;
  j["tv0"] = r.tv0;
  j["times"] = numbers(r.times);
  j["estimated"] = numbers(r.estimated);
  j["bound"] = numbers(r.bound);
  j["allowance"] = numbers(r.allowance);
  Json v = Json::array();
  for (auto k : r.violations) v.push_back(r.times[k]);
  j["violation_times"] = std::move(v);
  return j;
}

Json to_json(const LyapunovReport& r) {
  Json j;
  j["lag"] = r.lag;
  j["lag_points"] = r.means.size();
  j["degenerate"] = r.degenerate;
  j["gamma_hat"] = r.degenerate ? Json() : Json(r.gamma_hat);
  j["K_hat"] = r.K_hat;
  j["predicted_gamma"] = r.predicted_gamma;
  j["bound"] = r.bound;
  j["max_mean"] = r.means.empty() ? 0.0 : *std::max_element(r.means.begin(), r.means.end());
  j["bounded"] = r.bounded;
  j["residuals"] = numbers(r.residuals);
  return j;
}

Json to_json(const LocalAlphaReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["max_tv"] = r.max_tv;
  j["worst_pair"] = Json::array({static_cast<long long>(r.worst_i), static_cast<long long>(r.worst_j)});
  return j;
}

Json to_json(const VHReport& r) {
  Json j;
  j["passed"] = r.passed;
  j["points_checked"] = r.points_checked;
  j["worst_margin"] = r.worst_margin;
  j["failing_point"] = r.failing_point ? point(*r.failing_point) : Json();
  return j;
}

Json to_json(const IntegralI& i) {
  Json j;
  j["value"] = i.value;
  j["exact"] = i.exact;
  j["integrand"] = i.modulus ? "exp(|x|)" : "exp(x)";
  return j;
}

Json to_json(const InteractionLipschitzReport& r) {
  Json j;
  j["drift_difference"] = r.drift_difference;
  j["rho2_truncated"] = r.rho2_truncated;
  j["w2_plain"] = r.w2_plain;
  j["ratio_truncated"] = r.ratio_truncated;
  j["ratio_plain"] = r.ratio_plain;
  return j;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  out << "# " << kCsvSchema << " " << table.name << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::logic_error("csv row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

std::string to_csv(const CsvTable& table) {
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

CsvTable trajectory_csv(const Trajectory& t) {
  CsvTable out{"trajectory", {"n"}, {}};
  const Eigen::Index k = t.measures.empty() ? 0 : t.measures.front().size();
  for (Eigen::Index i = 0; i < k; ++i) out.columns.push_back("mu_" + std::to_string(i + 1));
  out.columns.push_back("step_distance");
  for (std::size_t n = 0; n < t.measures.size(); ++n) {
    std::vector<double> row{static_cast<double>(n)};
    for (Eigen::Index i = 0; i < k; ++i) row.push_back(t.measures[n][i]);
    row.push_back(n < t.step_distances.size() ? t.step_distances[n] : std::nan(""));
    out.rows.push_back(std::move(row));
  }
  return out;
}

CsvTable rate_csv(const RateReport& r) {
  CsvTable out{"rate", {"n", "measured", "bound"}, {}};
  for (std::size_t n = 0; n < r.measured.size(); ++n) {
    out.rows.push_back({static_cast<double>(n), r.measured[n], r.bound[n]});
  }
  return out;
}

CsvTable series_csv(const CounterexampleReport& r) {
  CsvTable out{"counterexample-series", {"index"}, {}};
  std::size_t len = 0;
  for (const auto& [name, values] : r.series) {
    out.columns.push_back(name);
    len = std::max(len, values.size());
  }
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (const auto& s : r.series) row.push_back(i < s.second.size() ? s.second[i] : std::nan(""));
    out.rows.push_back(std::move(row));
  }
  return out;
}

CsvTable moments_csv(const ParticleTrajectory& t) {
  CsvTable out{"moments", {"time"}, {}};
  const Eigen::Index d = t.snapshots.empty() ? 0 : t.snapshots.front().positions.rows();
  for (Eigen::Index c = 0; c < d; ++c) {
    out.columns.push_back("mean_" + std::to_string(c + 1));
    out.columns.push_back("var_" + std::to_string(c + 1));
  }
  for (const auto& s : t.snapshots) {
    std::vector<double> row{s.time};
    const auto n = static_cast<double>(s.positions.cols());
    for (Eigen::Index c = 0; c < d; ++c) {
      const double mean = s.positions.row(c).mean();
      const double var = (s.positions.row(c).array() - mean).square().sum() / (n - 1.0);
      row.push_back(mean);
      row.push_back(var);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

CsvTable tv_csv(const std::vector<std::pair<double, double>>& series) {
  CsvTable out{"tv", {"time", "tv"}, {}};
  for (const auto& [t, tv] : series) out.rows.push_back({t, tv});
  return out;
}

CsvTable decay_csv(const DecayFit& f) {
  CsvTable out{"decay", {"time", "tv", "used"}, {}};
  for (std::size_t i = 0; i < f.times.size(); ++i) out.rows.push_back({f.times[i], f.tv[i], f.used[i] ? 1.0 : 0.0});
  return out;
}

CsvTable girsanov_csv(const GirsanovReport& r) {
  CsvTable out{"girsanov", {"time", "estimated", "bound", "allowance"}, {}};
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    out.rows.push_back({r.times[i], r.estimated[i], r.bound[i], r.allowance[i]});
  }
  return out;
}

CsvTable lyapunov_csv(const LyapunovReport& r) {
  CsvTable out{"lyapunov", {"time", "mean_V", "standard_error"}, {}};
  for (std::size_t i = 0; i < r.times.size(); ++i) out.rows.push_back({r.times[i], r.means[i], r.standard_errors[i]});
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace nlerg::report

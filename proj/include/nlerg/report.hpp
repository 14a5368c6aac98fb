#pragma once

#include "nlerg/counterexamples.hpp"
#include "nlerg/ergodicity.hpp"
#include "nlerg/mckean_vlasov.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace nlerg::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "nlerg-report/1";
inline constexpr const char* kCsvSchema = "nlerg-csv/1";

/// "%.17g"; non-finite values print as "nan", "inf" or "-inf".
std::string format_double(double x);

/// Deterministic JSON text: keys in insertion order, numbers with 17
/// significant digits, non-finite numbers as null, two-space indent.
std::string dump(const Json& doc);

/// {"schema", "kind", "status", "body"}; status is "pass" or "fail".
Json envelope(const std::string& kind, bool passed, Json body);

Json to_json(const DiscreteMeasure& mu);
Json to_json(const ErgodicityCertificate& c);
Json to_json(const ValidationReport& v);
Json to_json(const ContractionReport& r);
Json to_json(const RateReport& r);
Json to_json(const HMCertificate& c);
Json to_json(const CounterexampleReport& r);
Json to_json(const FixedPointResult& r);
Json to_json(const DecayFit& f);
Json to_json(const GirsanovReport& r);
Json to_json(const LyapunovReport& r);
Json to_json(const LocalAlphaReport& r);
Json to_json(const VHReport& r);
Json to_json(const IntegralI& i);
Json to_json(const InteractionLipschitzReport& r);

struct CsvTable {
  std::string name;  // written after the schema tag in the comment line
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// "# nlerg-csv/1 <name>", the column header, then one line per row.
void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv(const CsvTable& table);

CsvTable trajectory_csv(const Trajectory& t);  // n, mu_1..mu_k, step_distance
CsvTable rate_csv(const RateReport& r);        // n, measured, bound
CsvTable series_csv(const CounterexampleReport& r);
CsvTable moments_csv(const ParticleTrajectory& t);  // time, mean_c, var_c per coordinate
CsvTable tv_csv(const std::vector<std::pair<double, double>>& series);
CsvTable decay_csv(const DecayFit& f);
CsvTable girsanov_csv(const GirsanovReport& r);
CsvTable lyapunov_csv(const LyapunovReport& r);

/// Writes `content` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& content);

}  // namespace nlerg::report

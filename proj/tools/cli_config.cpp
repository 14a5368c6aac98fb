#include "cli_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlerg::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& field) {
  const std::string t = trim(s);
  double x = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw UsageError("field '" + field + "': '" + s + "' is not a number");
  }
  return x;
}

bool fits(const Json& v, Kind kind) {
  switch (kind) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer() || (v.is_number_float() && std::trunc(v.get<double>()) == v.get<double>());
    case Kind::string: return v.is_string();
    case Kind::boolean: return v.is_boolean();
    case Kind::number_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); });
    case Kind::matrix:
      return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& row) {
               return row.is_array() && std::all_of(row.begin(), row.end(), [](const Json& e) { return e.is_number(); });
             });
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::string: return "a string";
    case Kind::boolean: return "true or false";
    case Kind::number_list: return "a list of numbers";
    case Kind::matrix: return "a list of rows of numbers";
  }
  return "?";
}

Json from_flag(const std::string& raw, const Param& p) {
  switch (p.kind) {
    case Kind::number: return parse_number(raw, p.key);
    case Kind::integer: {
      const double x = parse_number(raw, p.key);
      if (std::trunc(x) != x) throw UsageError("field '" + p.key + "': '" + raw + "' is not an integer");
      return static_cast<long long>(x);
    }
    case Kind::string: return raw;
    case Kind::boolean:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw UsageError("field '" + p.key + "': expected true or false, got '" + raw + "'");
    case Kind::number_list: {
      const std::string t = trim(raw);
      if (!t.empty() && t.front() == '[') {
        Json v = Json::parse(t, nullptr, false);
        if (v.is_discarded() || !fits(v, p.kind)) throw UsageError("field '" + p.key + "': expected " + kind_name(p.kind));
        return v;
      }
      Json v = Json::array();
      for (const auto& item : split(t, ',')) v.push_back(parse_number(item, p.key));
      return v;
    }
    case Kind::matrix: {
      Json v = Json::parse(raw, nullptr, false);
      if (v.is_discarded() || !fits(v, p.kind)) throw UsageError("field '" + p.key + "': expected " + kind_name(p.kind));
      return v;
    }
  }
  return Json();
}

const Json& field(const Json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw UsageError("missing field '" + key + "'");
  return cfg.at(key);
}

}  // namespace

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

ParamSet::ParamSet(CLI::App& app, std::vector<Param> params) : params_(std::move(params)) {
  for (const auto& p : params_) {
    std::string help = p.help;
    if (p.required) {
      help += " (required)";
    } else if (!p.fallback.is_null()) {
      help += " [" + p.fallback.dump() + "]";
    }
    options_[p.key] = app.add_option(flag_name(p.key), raw_[p.key], help);
  }
}

Json ParamSet::resolve(const Json& file_config) const {
  Json cfg;
  for (const auto& p : params_) cfg[p.key] = p.fallback;
  if (!file_config.is_null()) {
    for (auto it = file_config.begin(); it != file_config.end(); ++it) {
      const auto match = std::find_if(params_.begin(), params_.end(), [&](const Param& p) { return p.key == it.key(); });
      if (match == params_.end()) throw UsageError("config field '" + it.key() + "' is not a parameter of this command");
      if (!it.value().is_null() && !fits(it.value(), match->kind)) {
        throw UsageError("config field '" + it.key() + "': expected " + kind_name(match->kind));
      }
      cfg[it.key()] = it.value();
    }
  }
  for (const auto& p : params_) {
    if (options_.at(p.key)->count() > 0) cfg[p.key] = from_flag(raw_.at(p.key), p);
  }
  for (const auto& p : params_) {
    if (p.required && cfg[p.key].is_null()) throw UsageError("missing required field '" + p.key + "' (" + flag_name(p.key) + ")");
  }
  return cfg;
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc = Json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) throw UsageError("config file '" + path + "' is not valid JSON");
  if (!doc.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
  return doc;
}

double number(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!v.is_number()) throw UsageError("field '" + key + "': expected a number");
  return v.get<double>();
}

long long integer(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!fits(v, Kind::integer)) throw UsageError("field '" + key + "': expected an integer");
  return static_cast<long long>(v.get<double>());
}

std::size_t count(const Json& cfg, const std::string& key) {
  const long long v = integer(cfg, key);
  if (v < 0) throw UsageError("field '" + key + "': must be >= 0");
  return static_cast<std::size_t>(v);
}

std::string text(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!v.is_string()) throw UsageError("field '" + key + "': expected a string");
  return v.get<std::string>();
}

bool flag(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!v.is_boolean()) throw UsageError("field '" + key + "': expected true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!fits(v, Kind::number_list)) throw UsageError("field '" + key + "': expected a list of numbers");
  return v.get<std::vector<double>>();
}

Matrix matrix(const Json& cfg, const std::string& key) {
  const Json& v = field(cfg, key);
  if (!fits(v, Kind::matrix)) throw UsageError("field '" + key + "': expected a list of rows of numbers");
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(v[i].size()) != cols) throw UsageError("field '" + key + "': rows differ in length");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[i][j].get<double>();
  }
  return m;
}

namespace {

Point parse_point(const std::string& s, const std::string& field) {
  const auto parts = split(s, ',');
  if (parts.empty() || parts.size() > static_cast<std::size_t>(kMaxDimension)) {
    throw UsageError("field '" + field + "': a point needs 1 to 3 coordinates");
  }
  Point p(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) p[static_cast<Eigen::Index>(i)] = parse_number(parts[i], field);
  return p;
}

}  // namespace

InitialLaw parse_law(const std::string& spec, const std::string& field) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("field '" + field + "': expected dirac:X, gaussian:X:SD or atoms:X@W;...");
  const std::string kind = trim(spec.substr(0, colon));
  const std::string rest = spec.substr(colon + 1);
  InitialLaw law;
  if (kind == "dirac") {
    law = DiracLaw{parse_point(rest, field)};
  } else if (kind == "gaussian") {
    const auto sep = rest.rfind(':');
    if (sep == std::string::npos) throw UsageError("field '" + field + "': gaussian needs gaussian:MEAN:SD");
    law = GaussianLaw{parse_point(rest.substr(0, sep), field), parse_number(rest.substr(sep + 1), field)};
  } else if (kind == "atoms") {
    AtomicLaw a;
    for (const auto& item : split(rest, ';')) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw UsageError("field '" + field + "': atoms need X@W entries");
      a.atoms.push_back(parse_point(item.substr(0, at), field));
      a.weights.push_back(parse_number(item.substr(at + 1), field));
    }
    law = std::move(a);
  } else {
    throw UsageError("field '" + field + "': unknown law '" + kind + "'");
  }
  try {
    validate_law(law);
  } catch (const std::invalid_argument& e) {
    throw UsageError("field '" + field + "': " + e.what());
  }
  return law;
}

}  // namespace nlerg::cli

#pragma once

#include "nlerg/mckean_vlasov.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlerg::cli {

using Json = nlohmann::ordered_json;

/// Bad flags, bad config fields, parameters a constructor rejects. Exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { number, integer, string, boolean, number_list, matrix };

struct Param {
  std::string key;  // config key; the flag is --key with '_' -> '-'
  Kind kind;
  Json fallback;    // null means "computed at run time" unless required
  std::string help;
  bool required = false;
};

/// Flags registered on one (sub)command plus the raw text each received.
class ParamSet {
 public:
  ParamSet(CLI::App& app, std::vector<Param> params);

  /// fallback < config file < flags. Unknown or mistyped config fields and
  /// missing required fields raise UsageError naming the field.
  Json resolve(const Json& file_config) const;

  const std::vector<Param>& params() const { return params_; }

 private:
  std::vector<Param> params_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
};

std::string flag_name(const std::string& key);

/// Reads a JSON object from disk; UsageError on I/O or syntax problems.
Json load_config_file(const std::string& path);

// Typed access to a resolved config. All raise UsageError naming the field.
double number(const Json& cfg, const std::string& key);
long long integer(const Json& cfg, const std::string& key);
std::size_t count(const Json& cfg, const std::string& key);
std::string text(const Json& cfg, const std::string& key);
bool flag(const Json& cfg, const std::string& key);
std::vector<double> numbers(const Json& cfg, const std::string& key);
Matrix matrix(const Json& cfg, const std::string& key);

/// "dirac:X", "gaussian:X:SD" or "atoms:X@W;X@W;...", X a comma list of
/// coordinates.
InitialLaw parse_law(const std::string& text, const std::string& field);

}  // namespace nlerg::cli

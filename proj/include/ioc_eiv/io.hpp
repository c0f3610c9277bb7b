#pragma once

#include "ioc_eiv/demos.hpp"
#include "ioc_eiv/error.hpp"
#include "ioc_eiv/map_estimator.hpp"
#include "ioc_eiv/model.hpp"
#include "ioc_eiv/normalization.hpp"
#include "ioc_eiv/tls_estimator.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv::io {

using json = nlohmann::json;

/// A JSON document that does not match the documented layout. `path` is a
/// JSON pointer to the offending value.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : Error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// ---------------------------------------------------------------------------
// Primitives

/// {"rows": r, "cols": c, "data": [[row 0], [row 1], ...]}
json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& path);
json to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& path);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

// ---------------------------------------------------------------------------
// Problem configuration

ForwardProblem problem_from_json(const json& j, const std::string& path = "/problem");
/// Canonical form: discrete A/B, the full feature list, no shorthand.
json problem_to_json(const ForwardProblem& fp);
/// Fingerprint of the canonical problem JSON.
std::string problem_id(const ForwardProblem& fp);

NormalizationRule normalization_from_json(const json& j, const std::string& path);
json to_json(const NormalizationRule& rule);

/// Noise section: {"kind", "levels": [pct...], "seed", "lower", "upper"}.
struct NoiseConfig {
  NoiseSpec::Kind kind = NoiseSpec::Kind::gaussian;
  std::vector<double> levels;
  std::uint64_t seed = 0;
  Vector lower;  // truncated_gaussian only
  Vector upper;
};

NoiseConfig noise_config_from_json(const json& j, const std::string& path);

/// Noise at `pct` percent of the per-channel mean magnitude of U_star:
/// gaussian and truncated kinds use that standard deviation, the uniform kind
/// uses the half width that gives it.
NoiseSpec noise_at_level(const NoiseConfig& nc, const Vector& U_star, Index channels, double pct,
                         std::uint64_t seed);

map::MapConfig map_config_from_json(const json& j, const std::string& path, NormalizationRule norm);
tls::TlsConfig tls_config_from_json(const json& j, const std::string& path, NormalizationRule norm);

/// Everything a config file defines.
struct Config {
  json raw;
  ForwardProblem problem;
  NoiseConfig noise;
  int demo_count = 10;
  int reps = 10;
  std::vector<std::string> methods;
  NormalizationRule norm;
  map::MapConfig map;
  tls::TlsConfig tls;
  std::string output = "out";
};

Config config_from_json(const json& j);
Config load_config(const std::string& path);

const std::vector<std::string>& known_methods();

// ---------------------------------------------------------------------------
// Demo sets and reports

json demo_set_to_json(const DemoSet& ds, const std::optional<json>& noise = std::nullopt);
DemoSet demo_set_from_json(const json& j);

struct EstimateReport {
  std::string method;
  std::string problem_id;
  std::optional<Vector> theta;
  std::optional<Vector> theta_rescaled;
  std::optional<Vector> lambda;
  std::optional<Vector> U_hat;
  std::optional<Matrix> Sigma_U;
  std::optional<double> rmse_theta;
  std::optional<double> rmse_U;
  std::optional<double> rmse_U_mean;  // rmse of the sample mean, for reference
  json traces = json::object();
  std::vector<std::string> notes;
};

json to_json(const EstimateReport& r);
EstimateReport report_from_json(const json& j);

/// Layout checks; each throws SchemaError.
void validate_problem_json(const json& j, const std::string& path = "/problem");
void validate_demo_set_json(const json& j);
void validate_report_json(const json& j);
void validate_forward_json(const json& j);

}  // namespace ioc_eiv::io

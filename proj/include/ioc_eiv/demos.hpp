#pragma once

#include "ioc_eiv/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ioc_eiv {

/// Per-step additive input noise n_{d,k} in R^m.
struct NoiseSpec {
  enum class Kind { gaussian, truncated_gaussian, uniform };

  Kind kind = Kind::gaussian;
  Matrix sigma_u;     // m x m covariance (gaussian, truncated_gaussian)
  Vector lower;       // per-channel bounds on the noisy input (truncated_gaussian)
  Vector upper;
  Vector halfwidth;   // per-channel half width (uniform)
  std::uint64_t seed = 0;

  static NoiseSpec gaussian(Matrix sigma_u, std::uint64_t seed);
  static NoiseSpec truncated_gaussian(Matrix sigma_u, Vector lower, Vector upper, std::uint64_t seed);
  static NoiseSpec uniform(Vector halfwidth, std::uint64_t seed);

  Index channels() const;
  void validate() const;
};

const char* to_string(NoiseSpec::Kind kind);
NoiseSpec::Kind noise_kind_from_string(const std::string& name);

struct DemoSet {
  std::vector<Vector> demos;
  Vector x0;
  // Fingerprint of the forward problem the demos belong to.
  std::string problem_id;
  std::optional<Vector> U_star;

  Index count() const { return static_cast<Index>(demos.size()); }
  Index length() const { return demos.empty() ? 0 : demos.front().size(); }
  void validate() const;
};

/// U_d = U_star + n_d, d = 0..D-1. Demo d draws from substream (seed, d), so
/// the OpenMP loop reproduces generate_serial bit for bit.
DemoSet generate(const Vector& U_star, const NoiseSpec& spec, int count);

/// Reference single-threaded implementation of generate().
DemoSet generate_serial(const Vector& U_star, const NoiseSpec& spec, int count);

/// Per-channel noise standard deviation (pct/100) * |mean of U_star on that
/// channel|, U_star laid out as (u_0, ..., u_{N-1}) with u_k in R^m.
Vector noise_scale_from_percent(const Vector& U_star, double pct, Index channels);

Vector sample_mean(const DemoSet& ds);

/// Unbiased sample covariance (divides by D - 1; zero for D = 1).
Matrix sample_covariance(const DemoSet& ds);

double rmse(const Vector& a, const Vector& b);

}  // namespace ioc_eiv

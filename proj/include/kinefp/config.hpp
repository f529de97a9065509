#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "kinefp/kernels.hpp"
#include "kinefp/params.hpp"
#include "kinefp/picard.hpp"

namespace kinefp {

struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg)
      : std::runtime_error(msg), field(std::move(f)) {}
};

struct GaussianSpec {
  std::array<double, 3> center_x{0, 0, 0};
  std::array<double, 3> center_v{0, 0, 0};
  double sigma_x = 1.0;
  double sigma_v = 0.8;
  double mass = 1.0;  // analytic total mass; 0 gives the zero field
};

struct TafInitSpec {
  std::string type = "gaussian";  // "gaussian" or "constant"
  double amplitude = 1.0;
  std::array<double, 3> center{0, 0, 0};
  double sigma = 1.5;
  double background = 0.0;
};

struct OutputSpec {
  int snapshots = 10;
  bool plots = false;
};

struct RunConfig {
  ModelParams params;
  GridSpec grid;
  RhoSpec rho;
  GaussianSpec p0;
  TafInitSpec c0;
  SchemeOptions scheme;
  double beta2 = 4.0;
  OutputSpec output;
  std::uint64_t seed = 1;

  std::string raw_text;       // canonical config bytes (for reproducibility)
  std::uint64_t config_hash = 0;
};

/// Parses and validates a JSON config file. Model and grid fields are
/// required; everything else has documented defaults. Throws ConfigError
/// with the offending field path.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

PhaseField build_p0(const GaussianSpec& spec, const Grid& g);
SpatialField build_c0(const TafInitSpec& spec, const Grid& g);  // decaying part

/// The analytically-carried constant part of c: the configured background,
/// plus the amplitude when c0 is of constant type.
inline double taf_background(const TafInitSpec& spec) {
  return spec.background + (spec.type == "constant" ? spec.amplitude : 0.0);
}

}  // namespace kinefp

#pragma once

#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/params.hpp"

namespace kinefp {

/// Data for the TAF equation dc/dt = d Lap c - eta c j. The non-decaying
/// part of the concentration is carried analytically as the constant
/// `background`; c0 holds the decaying remainder.
struct TafProblem {
  SpatialField c0;                 // decaying part of the initial datum
  double background = 0;           // c_infinity >= 0
  std::vector<SpatialField> flux;  // j(t): one entry per step, or size 1
  double d = 0.5;
  double eta = 0.5;
  double horizon = 1.0;
};

struct TafSolution {
  std::vector<SpatialField> c;                       // full c, nt+1 snapshots
  std::vector<std::vector<SpatialField>> grad_c;     // per snapshot, per axis
  double background = 0;
};

/// Duhamel heat-kernel marching with the sink treated explicitly per step.
/// Refuses when eta * ||j||_inf * dt > 1 (explicit sink stability) and when
/// data are negative. Maintains 0 <= c <= ||c0||_inf exactly.
TafSolution solve_taf(const TafProblem& prob, int nt);

struct GradBoundReport {
  double fitted_C = 0;        // smallest C making the bound hold at all t
  double fitted_exponent = 0; // log-log slope of ||F(t)||_inf - base vs t
  double base = 0;            // d1 ||grad c0||_inf
  std::vector<double> times;
  std::vector<double> lhs;    // ||F(t)||_inf
  bool pass = false;
};

/// Checks the force bound shape ||F(t)||_inf <= d1 ||grad c0||_inf +
/// C t^{1/2 - N/(2q)} ||j||_{L^inf_t L^q_x} with a single fitted C.
/// Requires q > N.
GradBoundReport grad_bound_check(const TafSolution& run,
                                 const SpatialField& c0_full,
                                 const std::vector<SpatialField>& grad_c0,
                                 const std::vector<SpatialField>& j_series,
                                 const ModelParams& params, double q);

}  // namespace kinefp

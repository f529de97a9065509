#pragma once

#include <vector>

#include "kinefp/params.hpp"

namespace kinefp {

enum class FieldKind {
  taf,
  grad_taf_component,
  force_component,
  flux_j,
  marginal,
  anastomosis_a,
  generic
};

/// Density on the (x, v) tensor grid. Layout is x-major: the flat index is
/// (x-multi-index) * vel_size + (v-multi-index), each multi-index row-major
/// over its axes.
struct PhaseField {
  Grid grid;
  std::vector<double> values;
  double time_stamp = 0;

  PhaseField() = default;
  explicit PhaseField(const Grid& g, double t = 0)
      : grid(g), values(g.phase_size(), 0.0), time_stamp(t) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Scalar field over the x grid only.
struct SpatialField {
  Grid grid;
  std::vector<double> values;
  FieldKind kind = FieldKind::generic;
  double time_stamp = 0;

  SpatialField() = default;
  explicit SpatialField(const Grid& g, FieldKind k = FieldKind::generic,
                        double t = 0)
      : grid(g), values(g.space_size(), 0.0), kind(k), time_stamp(t) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

/// Trapezoidal (uniform cell weight) approximation of the phase-space mass
/// integral. Rejects non-finite entries.
double integrate_phase(const PhaseField& f);
double integrate_space(const SpatialField& f);

/// Discrete L^q norm with quadrature weights; q may be
/// std::numeric_limits<double>::infinity(). q < 1 is rejected.
double lp_norm(const PhaseField& f, double q);
double lp_norm(const SpatialField& f, double q);

double max_abs(const std::vector<double>& v);
double min_value(const std::vector<double>& v);
bool all_finite(const std::vector<double>& v);

/// max over x of the velocity L^1 norm (the L^inf_x L^1_v norm).
double sup_x_l1_v(const PhaseField& f);

/// L^1 distance between two phase fields on the same grid.
double l1_distance(const PhaseField& a, const PhaseField& b);

/// Multi-index helpers for the x part of a flat spatial index.
void unflatten(std::size_t flat, int n, int dim, int* out);

}  // namespace kinefp

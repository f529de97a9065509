#pragma once

#include <cstddef>
#include <string>

namespace kinefp {

enum class FluxMode { cutoff, raw };

/// Physical constants of the coupled tip-density / TAF system.
struct ModelParams {
  double gamma = 0.3;   // anastomosis rate, 1/(density*time)
  double k = 1.0;       // friction, 1/time
  double sigma = 1.0;   // velocity diffusivity, velocity^2/time
  double d = 0.5;       // TAF diffusivity, length^2/time
  double eta = 0.5;     // TAF consumption rate
  double alpha1 = 0.5;  // maximal branching rate, 1/time
  double c_R = 1.0;     // reference concentration
  double d1 = 0.3;      // chemotactic strength
  double gamma1 = 0.5;  // chemotactic saturation coefficient
  double q1 = 1.0;      // saturation exponent, >= 0
  double delta = 2.0;   // Fermi cutoff sharpness
  double v_max = 1.5;   // cutoff speed
  int dim = 1;          // spatial/velocity dimension, in {1,2,3}
  FluxMode flux_mode = FluxMode::cutoff;
};

/// Tensor-grid description of the truncated phase-space box
/// [-Lx,Lx]^N x [-Lv,Lv]^N and the time horizon.
struct GridSpec {
  double x_extent = 6.0;  // half-width per spatial axis
  double v_extent = 4.0;  // half-width per velocity axis
  int nx = 64;            // points per spatial axis (even, >= 4)
  int nv = 64;            // points per velocity axis (even, >= 4)
  double t_final = 1.0;   // horizon T
  int nt = 50;            // time steps
};

/// Cell-centered tensor grid. Nodes sit at the centers of nx (nv) equal
/// cells per axis, so the quadrature weight of every node is a full cell.
struct Grid {
  int dim = 1;
  int nx = 0, nv = 0;
  double Lx = 0, Lv = 0;
  double dx = 0, dv = 0;

  Grid() = default;
  Grid(const GridSpec& g, int dimension)
      : dim(dimension), nx(g.nx), nv(g.nv), Lx(g.x_extent), Lv(g.v_extent) {
    dx = 2.0 * Lx / nx;
    dv = 2.0 * Lv / nv;
  }

  double x(int i) const { return -Lx + (i + 0.5) * dx; }
  double v(int a) const { return -Lv + (a + 0.5) * dv; }

  std::size_t space_size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(nx);
    return s;
  }
  std::size_t vel_size() const {
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) s *= static_cast<std::size_t>(nv);
    return s;
  }
  std::size_t phase_size() const { return space_size() * vel_size(); }

  double cell_x() const {
    double w = 1;
    for (int i = 0; i < dim; ++i) w *= dx;
    return w;
  }
  double cell_v() const {
    double w = 1;
    for (int i = 0; i < dim; ++i) w *= dv;
    return w;
  }
  double cell_phase() const { return cell_x() * cell_v(); }

  bool operator==(const Grid&) const = default;
};

/// Checks every ModelParams/GridSpec invariant; throws std::invalid_argument
/// naming the offending field.
void validate_params(const ModelParams& p, const GridSpec& g);

/// Positivity slack used when asserting nonnegativity of discrete densities.
inline double eps_pos(double field_sup) { return 1e-10 * field_sup; }

std::string to_string(FluxMode m);

}  // namespace kinefp

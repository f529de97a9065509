#pragma once

#include <vector>

#include "kinefp/kernels.hpp"

namespace kinefp {

/// Quadrature checks of the fundamental-solution identities, shared by the
/// verify suites, the unit tests and the acceptance harness. Boxes are
/// sized from the exact transition moments (mean +- 8 std per axis).

/// integral of G over the forward variables (x, v); exact value 1.
double g_forward_mass(const PropagatorSpec& spec, double lag,
                      const double* xi, const double* nu, int pts_per_axis);

/// integral of G over the source variables (xi, nu); exact value e^{N k lag}.
double g_backward_mass(const PropagatorSpec& spec, double lag,
                       const double* x, const double* v, int pts_per_axis);

/// Chapman-Kolmogorov composition error at one target/source pair:
/// |int G(t;tau') G(tau';tau) - G(t;tau)| / G(t;tau).
double g_chapman_error(const PropagatorSpec& spec, double lag1, double lag2,
                       const double* x, const double* v, const double* xi,
                       const double* nu, int pts_per_axis);

/// RMS residual of the field-free equation for G by central differences
/// with step h, sampled on a fixed stencil of bulk points.
double g_pde_residual(const PropagatorSpec& spec, double lag, double h);

/// max relative disagreement between the two evaluation strategies over a
/// deterministic point cloud.
double g_strategy_disagreement(double k, double sigma, int dim, double lag);

}  // namespace kinefp

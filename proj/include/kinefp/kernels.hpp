#pragma once

#include <array>
#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/params.hpp"

namespace kinefp {

/// Evaluation strategy for the field-free fundamental solution G.
///  - paper_formula: literal transcription of the printed closed form.
///  - ou_covariance: Gaussian built from the exact mean/covariance of the
///    linear Langevin pair dX = V dt, dV = -k V dt + sqrt(2 sigma) dW.
/// Both must agree pointwise; ou_covariance is the production path.
enum class GStrategy { paper_formula, ou_covariance };

struct PropagatorSpec {
  double k = 1.0;
  double sigma = 1.0;
  int dim = 1;
  GStrategy strategy = GStrategy::ou_covariance;
};

/// Per-axis second moments of the transition over a lag s. The pair
/// (x, v) given (xi, nu) is Gaussian with mean
///   mu_v = nu * decay,  mu_x = xi + nu * mean_x_coef,
/// and covariance [[s_xx, s_xv], [s_xv, s_vv]]. cond_* describe the
/// conditional law of x given v: mean xi + nu*mean_x_coef +
/// cond_slope*(v - mu_v), variance cond_var.
struct OuMoments {
  double lag = 0;
  double decay = 0;        // e^{-k s}
  double mean_x_coef = 0;  // (1 - e^{-k s}) / k
  double s_xx = 0, s_xv = 0, s_vv = 0;
  double cond_var = 0;
  double cond_slope = 0;
};

OuMoments ou_moments(double k, double sigma, double lag);

/// Field-free fundamental solution G(t, x, v; tau, xi, nu). Strictly
/// positive; requires t > tau. Arrays are length spec.dim.
double eval_G(double t, const double* x, const double* v, double tau,
              const double* xi, const double* nu, const PropagatorSpec& spec);
double log_eval_G(double t, const double* x, const double* v, double tau,
                  const double* xi, const double* nu,
                  const PropagatorSpec& spec);

/// 1-D convenience overload.
double eval_G1(double t, double x, double v, double tau, double xi, double nu,
               const PropagatorSpec& spec);

/// Heat kernel (4 pi d t)^{-N/2} exp(-|x|^2 / (4 d t)); requires t > 0.
double eval_heat_kernel(double t, const double* x, double d_coef, int dim);

/// Exact constant M in ||d_i K(t)||_1 = M t^{-1/2} for the heat kernel with
/// diffusivity d (per component).
double grad_heat_l1_constant(double d_coef);

/// ||grad K(1)||_q for one component of the heat-kernel gradient, computed
/// by quadrature; used to assemble heat-decay constants C_{N,q}.
double grad_heat_lq_constant(double d_coef, int dim, double q);

/// Branching rate alpha(c) = alpha1 * c / (c_R + c); rejects c < 0.
double alpha_of_c(double c, const ModelParams& p);

/// Fermi-Dirac velocity cutoff 1 / (1 + e^{delta (|v|^2 - v_max^2)}).
double fermi_weight(double speed, const ModelParams& p);

/// Chemotactic force F_i = d1 (1 + gamma1 c)^{-q1} d_i c; rejects c < 0.
std::vector<SpatialField> force_from_c(const SpatialField& c,
                                       const std::vector<SpatialField>& grad_c,
                                       const ModelParams& p);

/// Smooth bounded velocity profile standing in for the branching kernel.
struct RhoSpec {
  std::array<double, 3> center{0, 0, 0};
  double width = 0.45;
  double amplitude = 1.0;

  static RhoSpec defaults(const ModelParams& p) {
    RhoSpec r;
    r.center = {p.v_max / 2, 0, 0};
    r.width = 0.3 * p.v_max;
    r.amplitude = 1.0;
    return r;
  }
};

double rho_eval(const double* v, int dim, const RhoSpec& spec);
inline double rho_sup(const RhoSpec& spec) { return spec.amplitude; }

/// rho sampled on the velocity grid (one value per velocity multi-index).
std::vector<double> rho_on_grid(const Grid& g, const RhoSpec& spec);

/// Discrete norms of the flux weight |v| g(|v|) on the velocity grid.
/// raw mode uses g = 1. sup is over grid nodes, l1 uses cell weights.
double weight_vg_sup(const Grid& g, const ModelParams& p);
double weight_vg_l1(const Grid& g, const ModelParams& p);

}  // namespace kinefp

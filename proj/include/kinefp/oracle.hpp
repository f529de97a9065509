#pragma once

#include <string>
#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/params.hpp"

namespace kinefp {

/// Coefficients for the finite-difference reference solve, in the same
/// step-indexed convention as LinearProblem (empty = zero, size 1 =
/// constant in time). Potential is a(t,x,v) = A(t,x) + B(t,x) rho(v).
struct FdProblem {
  PhaseField p0;
  std::vector<std::vector<SpatialField>> force;
  std::vector<SpatialField> potential_x;
  std::vector<SpatialField> potential_rho_coef;
  std::vector<double> rho_values;
  std::vector<PhaseField> source;
  double horizon = 1.0;
};

/// First-order upwind transport/drift, central velocity diffusion, explicit
/// Euler. Deliberately low order; arbitration only. Throws when dt violates
/// the CFL constraint, naming the binding term.
std::vector<PhaseField> fd_solve_fp(const FdProblem& prob,
                                    const ModelParams& params, int nt);

/// Largest stable dt for fd_solve_fp with the given data (0.9 safety
/// factor already applied).
double fd_fp_max_dt(const FdProblem& prob, const ModelParams& params);

/// Explicit central-difference heat solve with explicit sink
/// dc/dt = d Lap c - eta c j, Neumann box edges.
std::vector<SpatialField> fd_solve_heat(const SpatialField& c0,
                                        const std::vector<SpatialField>& sink_j,
                                        double d_coef, double eta,
                                        double horizon, int nt);

struct EnergyReport {
  std::vector<double> times;
  std::vector<double> residual;    // energy identity residual at each time
  double max_rate = 0;             // max_n |residual_n| / t_n
  double initial_energy = 0;
  bool l2_bound_ok = false;        // ||p(t)||_2^2 <= (E0 + int f^2) e^{beta t}
  bool h1_bound_ok = false;        // sigma int |grad_v p|^2 <= same ceiling
};

/// Residual of the discrete energy identity
///   E(t) = E(0) + int_0^t [N k E - 2 int a p^2 - 2 sigma ||grad_v p||^2
///                          + 2 int p f] ds
/// evaluated by trapezoid from a stored run, plus the exponential L2/H1
/// ceilings with beta = N k + 2 ||a^-||_inf + 1.
EnergyReport energy_check(const std::vector<PhaseField>& run,
                          const FdProblem& prob, const ModelParams& params);

/// Compactly supported C^2 test function: a (1-u^2)^3 bump profile in t and
/// in every x and v coordinate.
struct TestBump {
  double t_cut = 1.0;
  double cx[3] = {0, 0, 0}, cvv[3] = {0, 0, 0};
  double rx = 1.0, rv = 1.0;

  double theta(double t) const;
  double theta_dt(double t) const;
};

std::vector<TestBump> make_test_bank(const Grid& g, double T);

/// Weak-form residual of a stored (p, coefficients) run against each test
/// function; exact solutions give residuals at discretization level.
std::vector<double> weak_form_residual(const std::vector<PhaseField>& p_run,
                                       const FdProblem& coeffs,
                                       const ModelParams& params,
                                       const std::vector<TestBump>& bank);

}  // namespace kinefp

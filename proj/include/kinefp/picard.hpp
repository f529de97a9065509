#pragma once

#include <limits>
#include <string>
#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/kernels.hpp"
#include "kinefp/params.hpp"

namespace kinefp {

/// Variant A keeps the branching term implicit in the potential
/// (coefficient gamma*a - alpha(c) rho acting on the current iterate);
/// variant B moves alpha(c) rho p_{m-1} to the source.
enum class SchemeVariant { A, B };

struct SchemeOptions {
  int max_iter = 25;
  double tol_rel = 1e-6;          // relative to ||p0||_1
  SchemeVariant variant = SchemeVariant::A;
  bool store_gradient_norms = true;
  double beta = 4.0;              // weighted-moment order tracked per time
  bool raw_flux = false;          // use j = int |v| p dv and the tau_beta cap
  double divergence_slack = 1.05;
  int max_consecutive_growth = 3;
};

struct SchemeState {
  Grid grid;
  ModelParams params;
  RhoSpec rho;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  bool truncated = false;
  double horizon = 0;  // horizon of the stored series (may be < requested)
  double dt = 0;
  double tau_beta = std::numeric_limits<double>::infinity();
  std::string warning;
  SchemeVariant variant = SchemeVariant::A;
  FluxMode flux_mode = FluxMode::cutoff;

  std::vector<PhaseField> p;   // converged iterate, nt+1 snapshots
  std::vector<SpatialField> c;
  std::vector<std::vector<SpatialField>> grad_c;
  std::vector<SpatialField> ptilde;
  std::vector<SpatialField> j;
  std::vector<SpatialField> anastomosis;  // gamma * int_0^t ptilde ds

  std::vector<double> diffs_p;  // sup_t L1 difference per Picard update
  std::vector<double> diffs_c;  // sup_t L-inf difference of c
  double min_p_iterates = 0;    // min entry over every iterate and time
  double min_c_iterates = 0;
  double max_c_iterates = 0;
  // worst measured/ceiling ratios across every iterate and stored time for
  // the L1 and sup growth bounds (<= 1 within discretization slack)
  double iterate_l1_ratio = 0;
  double iterate_sup_ratio = 0;

  // scalars consumed by the bounds module
  double p0_l1 = 0, p0_sup = 0, p0_l2sq = 0;
  double c0_sup = 0, grad_c0_sup = 0, grad_c0_l2 = 0;
  double rho_sup_val = 0;
  double beta_order = 0;
  std::vector<double> moment_history;        // || |v|^beta p(t) ||_1
  std::vector<double> weighted_sup_history;  // ||(1+|v|^2)^{beta/2} p(t)||_inf
  double grad_v_sup_l1 = -1;   // ||grad_v p||_{L^inf_t L^inf_x L^1_v}
  double vgrad_v_sup_l1 = -1;  // |||v| grad_v p||, same mixed norm
  double mass_leak = 0;        // cumulative free-propagation box loss
};

/// The frozen-coefficient fixed-point scheme: p_1 = 0, j_1 = 0; per
/// iteration solve the TAF equation from the previous flux, rebuild the
/// force/branching/anastomosis coefficients, and re-solve the linear
/// Fokker-Planck problem. Stops when sup_t ||p_m - p_{m-1}||_1 falls
/// below tol_rel * ||p0||_1.
SchemeState run_scheme(const ModelParams& params, const GridSpec& gspec,
                       const PhaseField& p0, const SpatialField& c0,
                       double c_background, const RhoSpec& rho,
                       const SchemeOptions& opts);

/// Cutoff-free variant: raw flux, moment-order hypotheses
/// beta1 > max(N+1, N^2-N), beta2 > max(N+2, N^2-N), and the stored series
/// capped at the tau_beta2 moment horizon (with a warning when the request
/// exceeded it).
SchemeState run_scheme_raw_flux(const ModelParams& params,
                                const GridSpec& gspec, const PhaseField& p0,
                                const SpatialField& c0, double c_background,
                                const RhoSpec& rho, double beta2,
                                const SchemeOptions& opts);

struct StabilityReport {
  double ratio = 0;    // sup_t ||pbar(t)||_1 / ||pbar(0)||_1
  double G = 0;        // Gronwall constant assembled from the run pair
  double ceiling = 0;  // e^{G T}
  double slack = 0;    // ceiling - ratio
  bool pass = false;
};

/// Growth of the difference of two converged runs against the certified
/// e^{G(T) T} ceiling. Rejects non-converged inputs.
StabilityReport stability_probe(const SchemeState& run1,
                                const SchemeState& run2);

}  // namespace kinefp

#include "kinefp/oracle.hpp"

namespace kinefp {

/// Coefficient view of a converged state (force, anastomosis potential,
/// branching coefficient) in the step-indexed layout shared by the oracle
/// and the weak-form residual.
FdProblem scheme_coefficients(const SchemeState& state);

}  // namespace kinefp

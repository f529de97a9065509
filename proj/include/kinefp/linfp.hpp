#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/kernels.hpp"

namespace kinefp {

/// Source reconstruction used when the x kernel is integrated over source
/// cells. donor treats the source as constant per cell: every weight is
/// nonnegative, so the operator is monotone (exact comparison principle)
/// at the price of O(dx^2/dt) numerical diffusion. linear adds the cell
/// slope term (first kernel moment against a central-difference slope),
/// which removes that diffusion and is the production default.
enum class XReconstruction { donor, linear };

/// Discrete application of the field-free propagator G over a fixed lag.
/// Acts as a tensor product of per-axis (x_d, v_d) operators. Within one
/// axis pair the source integral is node-sampled in nu and cell-integrated
/// in xi, where the kernel over one step is far narrower than any
/// affordable dx. The nu quadrature needs the velocity kernel resolved:
/// keep 2 sigma lag >= dv^2 / 3 when choosing step counts, or aliasing
/// shows up as mass drift (visible in the mass-leak diagnostics).
class FreePropagator {
 public:
  FreePropagator(const Grid& g, double k, double sigma, double lag,
                 XReconstruction recon = XReconstruction::linear);

  void apply(PhaseField& p) const;
  double lag() const { return lag_; }

 private:
  void apply_axis(PhaseField& p, int axis) const;

  Grid grid_;
  double lag_;
  int nx_, nv_;
  XReconstruction recon_;
  std::vector<double> cv_;          // nv*nv velocity weights (0 = culled)
  std::vector<int> wlo_, whi_;      // per pair, x-offset support [lo, hi]
  std::vector<std::size_t> woff_;   // per pair, offset into wval_/mval_
  std::vector<double> wval_;        // cell weights int_cell W
  std::vector<double> mval_;        // cell first moments int_cell W (xi-c)
};

/// One quadrature application of G over duration t; requires t > 0.
PhaseField propagate_free(const PhaseField& p0, double t,
                          const PropagatorSpec& spec);

/// Linear Fokker-Planck problem with force F(t,x), potential
/// a(t,x,v) = A(t,x) + B(t,x) rho(v) and source f. Every time series is
/// indexed by step (size nt, entry n used on [t_n, t_{n+1})); size-1 series
/// are treated as constant in time and empty series as zero.
struct LinearProblem {
  PhaseField p0;
  std::vector<std::vector<SpatialField>> force;  // [step][axis]
  std::vector<SpatialField> potential_x;         // A(t,x)
  std::vector<SpatialField> potential_rho_coef;  // B(t,x), multiplies rho(v)
  std::vector<double> rho_values;                // rho on the velocity grid
  std::vector<PhaseField> source;                // f(t,x,v)
  double horizon = 1.0;
  int series_lmax = 20;
  double series_tol = 1e-10;
  XReconstruction x_reconstruction = XReconstruction::linear;
};

/// Volterra truncation bound ||a||_inf^{l+1} T^{l+1} / (l+1)!.
double series_truncation_bound(double a_sup, double T, int l);

/// Sup of |A + B rho| over the grid and all steps.
double potential_sup(const LinearProblem& prob, const Grid& g);

/// Time-stepped Duhamel solve. Per step: source quadrature, conservative
/// central v-drift for the force, free G propagation, exact exponential
/// factor for the potential. Returns nt+1 snapshots including p0. Refuses
/// (throws) when the truncation bound at series_lmax exceeds series_tol.
std::vector<PhaseField> solve_linear(const LinearProblem& prob,
                                     const PropagatorSpec& spec, int nt);

/// Successive-approximation levels for the potential term: level 0 solves
/// the force-only problem, level l+1 re-solves it with the potential moved
/// to the source evaluated on level l. Returns levels 0..lmax.
std::vector<std::vector<PhaseField>> volterra_levels(
    const LinearProblem& prob, const PropagatorSpec& spec, int nt, int lmax);

struct CompareVerdict {
  bool ordered = false;
  bool equal = false;
  double worst_margin = 0;  // min over stored states of (p2 - p1)
  int worst_step = -1;
  std::size_t worst_index = 0;
  std::string describe() const;
};

/// Asserts run1 <= run2 + eps pointwise at every stored time.
CompareVerdict compare_solutions(const std::vector<PhaseField>& run1,
                                 const std::vector<PhaseField>& run2,
                                 double eps);

/// Upper solution of Lemma-2.6 type: e^{alpha1 ||rho||_inf t} times the
/// free propagation with diffusivity 4 sigma of 2^{2N} M_T p0.
PhaseField upper_solution(const PhaseField& p0, const ModelParams& params,
                          double rho_sup_value, double t, double M_T);

/// Low-level building blocks shared with the oracle/picard modules.
void add_scaled(PhaseField& p, const PhaseField& f, double scale);
void apply_drift_central(PhaseField& p,
                         const std::vector<SpatialField>& force, double dt);
void apply_potential_factor(PhaseField& p, const SpatialField* A,
                            const SpatialField* B,
                            const std::vector<double>& rho_values, double dt);

}  // namespace kinefp

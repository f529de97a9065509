#pragma once

#include <string>
#include <vector>

#include "kinefp/field.hpp"
#include "kinefp/params.hpp"

namespace kinefp {

/// Velocity marginal p~(x) = integral of p over v.
SpatialField marginal(const PhaseField& p);

/// Scalar flux j(x) = integral of |v| g(|v|) p dv; the weight g is the
/// Fermi cutoff in cutoff mode and 1 in raw mode (params.flux_mode).
SpatialField flux_j(const PhaseField& p, const ModelParams& params);
SpatialField flux_j(const PhaseField& p, const ModelParams& params,
                    FluxMode mode);

/// Vector flux components integral v_i g(|v|) p dv.
std::vector<SpatialField> vector_flux(const PhaseField& p,
                                      const ModelParams& params);

/// Phase-space moment ||f| |v|^beta p ||_1 (signed integral for signed p).
double moment(const PhaseField& p, double beta);

/// Weighted sup norm ||(1+|v|^2)^{beta/2} p||_inf.
double weighted_sup(const PhaseField& p, double beta);

struct MomentReport {
  double beta = 0;
  double m_beta = 0;         // || |v|^beta p ||_1
  double weighted_sup = 0;   // ||(1+|v|^2)^{beta/2} p||_inf
  double marginal_sup = 0;   // ||p~||_inf
  double speed_marginal_sup = 0;  // || integral |v| p dv ||_inf
};

MomentReport make_moment_report(const PhaseField& p, double beta);

/// measure of the unit sphere S^{N-1} (2, 2 pi, 4 pi for N = 1, 2, 3).
double unit_sphere_measure(int dim);

/// Constants produced by the R-optimization in the velocity-decay proofs.
/// c_mlpinf bounds integral |v|^l p dv by ||p||_inf and integral |v|^beta p dv;
/// c_inf and c_vinf are the l = 0 / weighted-sup variants.
double c_mlpinf(int dim, double beta, double l);
double c_inf(int dim, double beta);
double c_vinf(int dim, double beta);

struct CheckRow {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double margin = 0;  // rhs - lhs
  bool skipped = false;
  bool passed = false;
  std::string note;
};

/// Executable forms of the velocity-decay inequalities for nonnegative p:
/// (boundmlpinf) with l = 1, (boundvinf) for beta > N+1, (boundinf) for
/// beta > N, (boundinterp) for beta > 1. Inequalities whose validity range
/// excludes beta are reported as skipped with a reason.
std::vector<CheckRow> decay_inequality_suite(const PhaseField& p, double beta);

}  // namespace kinefp

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kinefp/picard.hpp"

namespace kinefp {

struct LedgerInput {
  std::string tag;  // which norm/constant, with its provenance label
  double value = 0;
};

struct BoundLedger {
  std::string name;
  double lhs = 0;     // measured, at the worst stored time
  double rhs = 0;     // certified ceiling at that time
  double margin = 0;  // min over stored times of (rhs - lhs)
  bool pass = false;  // margin >= -0.05 * rhs
  std::vector<LedgerInput> inputs;
};

/// The per-iterate norm ceilings of the scheme: L1 and sup growth, the
/// interpolated L2 ceiling and the velocity-gradient energy ceiling.
std::vector<BoundLedger> apriori_suite(const SchemeState& state);

struct HorizonNorms {
  double m_beta0 = 0;      // || |v|^beta p0 ||_1
  double p_l1_sup = 0;     // sup_t ||p(t)||_1
  double p_sup_sup = 0;    // sup_t ||p(t)||_inf
  double grad_c0_lnb = 0;  // ||grad c0||_{L^{N+beta}}
  double c0_sup = 0;
  double rho_sup = 0;
  double horizon = 0;
};

HorizonNorms horizon_norms_from_state(const SchemeState& state);

struct MomentHorizon {
  double A_beta = 0;
  double B_beta = 0;
  double tau_beta = 0;
  double delta = 0;  // N / (N + beta)
  std::function<double(double)> envelope;
  std::vector<LedgerInput> inputs;
};

/// Assembles the moment-growth constants and the blow-up horizon
/// tau_beta = (N+beta) / (A^{N/(N+beta)} B N), with the envelope
/// t -> (-B delta t + A^{-delta})^{-1/delta}. Requires
/// beta > max(N+2, N^2-N) and positive norms.
MomentHorizon moment_horizon(const ModelParams& params,
                             const HorizonNorms& norms, double beta);

/// Weighted-sup Gronwall check ||Y(t)||_inf <= A' e^{(B'+C') t} with
/// Y = (1+|v|^2)^{beta/2} p. Cutoff mode needs beta > N and uses the
/// measured force sup; raw mode needs beta > max(N+1, N^2-N) and assembles
/// B', C' from the data norms.
BoundLedger weighted_sup_gronwall(const SchemeState& state, double beta);

struct UniquenessReport {
  double A = 0, B = 0, D = 0, E = 0, E2 = 0;
  double G = 0;
  std::vector<LedgerInput> inputs;
};

/// Step-8 style constants from a pair of runs sharing parameters; refuses
/// when gradient norms were not stored.
UniquenessReport uniqueness_constants(const SchemeState& run1,
                                      const SchemeState& run2);

}  // namespace kinefp

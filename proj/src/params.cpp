#include "kinefp/params.hpp"

#include <stdexcept>

namespace kinefp {

namespace {
void require_positive(double value, const char* name) {
  if (!(value > 0))
    throw std::invalid_argument(std::string(name) + " must be > 0");
}
}  // namespace

void validate_params(const ModelParams& p, const GridSpec& g) {
  require_positive(p.gamma, "gamma");
  require_positive(p.k, "k");
  require_positive(p.sigma, "sigma");
  require_positive(p.d, "d");
  require_positive(p.eta, "eta");
  require_positive(p.alpha1, "alpha1");
  require_positive(p.c_R, "c_R");
  require_positive(p.d1, "d1");
  require_positive(p.gamma1, "gamma1");
  if (p.q1 < 0) throw std::invalid_argument("q1 must be >= 0");
  require_positive(p.delta, "delta");
  require_positive(p.v_max, "v_max");
  if (p.dim < 1 || p.dim > 3)
    throw std::invalid_argument("dim must be in {1,2,3}");

  require_positive(g.x_extent, "x_extent");
  require_positive(g.v_extent, "v_extent");
  require_positive(g.t_final, "t_final");
  if (g.nx < 4 || g.nx % 2 != 0)
    throw std::invalid_argument("nx must be even and >= 4");
  if (g.nv < 4 || g.nv % 2 != 0)
    throw std::invalid_argument("nv must be even and >= 4");
  if (g.nt < 1) throw std::invalid_argument("nt must be >= 1");
}

std::string to_string(FluxMode m) {
  return m == FluxMode::cutoff ? "cutoff" : "raw";
}

}  // namespace kinefp

#include "kinefp/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "kinefp/util.hpp"

namespace kinefp {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& section,
                      const std::string& key) {
  const std::string path = section + "." + key;
  if (!j.contains(key)) throw ConfigError(path, "missing required field " + path);
  if (!j[key].is_number())
    throw ConfigError(path, "field " + path + " must be a number");
  return j[key].get<double>();
}

double optional_number(const json& j, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  return j[key].get<double>();
}

std::array<double, 3> optional_vec(const json& j, const std::string& key,
                                   std::array<double, 3> dflt) {
  if (!j.contains(key)) return dflt;
  std::array<double, 3> out{0, 0, 0};
  std::size_t i = 0;
  for (const auto& x : j[key]) {
    if (i < 3) out[i++] = x.get<double>();
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("<root>", std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig cfg;
  cfg.raw_text = text;
  cfg.config_hash = fnv1a(text);

  if (!j.contains("params")) throw ConfigError("params", "missing required section params");
  const json& p = j["params"];
  cfg.params.gamma = require_number(p, "params", "gamma");
  cfg.params.k = require_number(p, "params", "k");
  cfg.params.sigma = require_number(p, "params", "sigma");
  cfg.params.d = require_number(p, "params", "d");
  cfg.params.eta = require_number(p, "params", "eta");
  cfg.params.alpha1 = require_number(p, "params", "alpha1");
  cfg.params.c_R = require_number(p, "params", "c_R");
  cfg.params.d1 = require_number(p, "params", "d1");
  cfg.params.gamma1 = require_number(p, "params", "gamma1");
  cfg.params.q1 = require_number(p, "params", "q1");
  cfg.params.delta = require_number(p, "params", "delta");
  cfg.params.v_max = require_number(p, "params", "v_max");
  cfg.params.dim = static_cast<int>(require_number(p, "params", "dim"));
  if (p.contains("flux_mode")) {
    const std::string m = p["flux_mode"].get<std::string>();
    if (m == "cutoff")
      cfg.params.flux_mode = FluxMode::cutoff;
    else if (m == "raw")
      cfg.params.flux_mode = FluxMode::raw;
    else
      throw ConfigError("params.flux_mode", "flux_mode must be cutoff or raw");
  }

  if (!j.contains("grid")) throw ConfigError("grid", "missing required section grid");
  const json& g = j["grid"];
  cfg.grid.x_extent = require_number(g, "grid", "x_extent");
  cfg.grid.v_extent = require_number(g, "grid", "v_extent");
  cfg.grid.nx = static_cast<int>(require_number(g, "grid", "nx"));
  cfg.grid.nv = static_cast<int>(require_number(g, "grid", "nv"));
  cfg.grid.t_final = require_number(g, "grid", "t_final");
  cfg.grid.nt = static_cast<int>(require_number(g, "grid", "nt"));

  try {
    validate_params(cfg.params, cfg.grid);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("params", e.what());
  }

  cfg.rho = RhoSpec::defaults(cfg.params);
  if (j.contains("rho")) {
    const json& r = j["rho"];
    cfg.rho.center = optional_vec(r, "center", cfg.rho.center);
    cfg.rho.width = optional_number(r, "width", cfg.rho.width);
    cfg.rho.amplitude = optional_number(r, "amplitude", cfg.rho.amplitude);
    if (!(cfg.rho.width > 0))
      throw ConfigError("rho.width", "rho.width must be > 0");
    if (cfg.rho.amplitude < 0)
      throw ConfigError("rho.amplitude", "rho.amplitude must be >= 0");
  }

  if (j.contains("initial")) {
    const json& ini = j["initial"];
    if (ini.contains("p0")) {
      const json& q = ini["p0"];
      cfg.p0.center_x = optional_vec(q, "center_x", cfg.p0.center_x);
      cfg.p0.center_v = optional_vec(q, "center_v", cfg.p0.center_v);
      cfg.p0.sigma_x = optional_number(q, "sigma_x", cfg.p0.sigma_x);
      cfg.p0.sigma_v = optional_number(q, "sigma_v", cfg.p0.sigma_v);
      cfg.p0.mass = optional_number(q, "mass", cfg.p0.mass);
      if (cfg.p0.mass < 0) throw ConfigError("initial.p0.mass", "p0 mass must be >= 0");
    }
    if (ini.contains("c0")) {
      const json& q = ini["c0"];
      if (q.contains("type")) cfg.c0.type = q["type"].get<std::string>();
      if (cfg.c0.type != "gaussian" && cfg.c0.type != "constant")
        throw ConfigError("initial.c0.type", "c0.type must be gaussian or constant");
      cfg.c0.amplitude = optional_number(q, "amplitude", cfg.c0.amplitude);
      cfg.c0.center = optional_vec(q, "center", cfg.c0.center);
      cfg.c0.sigma = optional_number(q, "sigma", cfg.c0.sigma);
      cfg.c0.background = optional_number(q, "background", cfg.c0.background);
      if (cfg.c0.amplitude < 0 || cfg.c0.background < 0)
        throw ConfigError("initial.c0", "c0 must be nonnegative");
    }
  }

  if (j.contains("scheme")) {
    const json& s = j["scheme"];
    if (s.contains("variant")) {
      const std::string v = s["variant"].get<std::string>();
      if (v == "A")
        cfg.scheme.variant = SchemeVariant::A;
      else if (v == "B")
        cfg.scheme.variant = SchemeVariant::B;
      else
        throw ConfigError("scheme.variant", "variant must be A or B");
    }
    cfg.scheme.max_iter =
        static_cast<int>(optional_number(s, "max_iter", cfg.scheme.max_iter));
    cfg.scheme.tol_rel = optional_number(s, "tol_rel", cfg.scheme.tol_rel);
    cfg.scheme.beta = optional_number(s, "beta", cfg.scheme.beta);
    if (s.contains("store_gradients"))
      cfg.scheme.store_gradient_norms = s["store_gradients"].get<bool>();
    cfg.beta2 = optional_number(s, "beta2", cfg.beta2);
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    cfg.output.snapshots =
        static_cast<int>(optional_number(o, "snapshots", cfg.output.snapshots));
    if (o.contains("plots")) cfg.output.plots = o["plots"].get<bool>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

PhaseField build_p0(const GaussianSpec& spec, const Grid& g) {
  PhaseField p(g);
  if (spec.mass == 0) return p;
  const int N = g.dim;
  // normalize analytically so the whole-space mass equals spec.mass
  const double norm =
      spec.mass /
      (std::pow(2.0 * std::numbers::pi * spec.sigma_x * spec.sigma_x, 0.5 * N) *
       std::pow(2.0 * std::numbers::pi * spec.sigma_v * spec.sigma_v, 0.5 * N));
  const std::size_t nvel = g.vel_size();
  std::vector<double> vfac(nvel);
  int idx[3];
  for (std::size_t a = 0; a < nvel; ++a) {
    unflatten(a, g.nv, N, idx);
    double r2 = 0;
    for (int d = 0; d < N; ++d) {
      const double dv = g.v(idx[d]) - spec.center_v[d];
      r2 += dv * dv;
    }
    vfac[a] = std::exp(-r2 / (2.0 * spec.sigma_v * spec.sigma_v));
  }
  for (std::size_t ix = 0; ix < g.space_size(); ++ix) {
    unflatten(ix, g.nx, N, idx);
    double r2 = 0;
    for (int d = 0; d < N; ++d) {
      const double dx = g.x(idx[d]) - spec.center_x[d];
      r2 += dx * dx;
    }
    const double xfac = norm * std::exp(-r2 / (2.0 * spec.sigma_x * spec.sigma_x));
    double* blk = p.values.data() + ix * nvel;
    for (std::size_t a = 0; a < nvel; ++a) blk[a] = xfac * vfac[a];
  }
  return p;
}

SpatialField build_c0(const TafInitSpec& spec, const Grid& g) {
  SpatialField c(g, FieldKind::taf);
  if (spec.type == "constant") return c;  // background carries the value
  int idx[3];
  for (std::size_t i = 0; i < c.size(); ++i) {
    unflatten(i, g.nx, g.dim, idx);
    double r2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      const double dx = g.x(idx[d]) - spec.center[d];
      r2 += dx * dx;
    }
    c[i] = spec.amplitude * std::exp(-r2 / (2.0 * spec.sigma * spec.sigma));
  }
  return c;
}

}  // namespace kinefp

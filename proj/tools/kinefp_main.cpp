#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "kinefp/bounds.hpp"
#include "kinefp/config.hpp"
#include "kinefp/report.hpp"
#include "kinefp/util.hpp"
#include "kinefp/verify.hpp"

namespace {

using namespace kinefp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitVerify = 4;

struct CliOverrides {
  std::string flux_mode;
  int snapshots = -1;
  bool plots = false;
};

SchemeState execute_run(const RunConfig& cfg) {
  const Grid grid(cfg.grid, cfg.params.dim);
  PhaseField p0 = build_p0(cfg.p0, grid);
  SpatialField c0 = build_c0(cfg.c0, grid);
  const double bg = taf_background(cfg.c0);
  if (cfg.params.flux_mode == FluxMode::raw)
    return run_scheme_raw_flux(cfg.params, cfg.grid, p0, c0, bg, cfg.rho,
                               cfg.beta2, cfg.scheme);
  return run_scheme(cfg.params, cfg.grid, p0, c0, bg, cfg.rho, cfg.scheme);
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const CliOverrides& over) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!over.flux_mode.empty()) {
      if (over.flux_mode == "cutoff")
        cfg.params.flux_mode = FluxMode::cutoff;
      else if (over.flux_mode == "raw")
        cfg.params.flux_mode = FluxMode::raw;
      else
        throw ConfigError("flux-mode", "flux-mode must be cutoff or raw");
    }
    if (over.snapshots > 0) cfg.output.snapshots = over.snapshots;
    if (over.plots) cfg.output.plots = true;
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.field << ": " << e.what() << "\n";
    return kExitConfig;
  }

  SchemeState state;
  try {
    state = execute_run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<BoundLedger> ledgers = apriori_suite(state);
  try {
    ledgers.push_back(weighted_sup_gronwall(state, state.beta_order));
  } catch (const std::exception&) {
    // regime mismatch for the configured beta: skip the optional ledger
  }
  write_artifacts(out_dir, cfg, state, ledgers);

  if (!state.warning.empty()) std::cerr << "warning: " << state.warning << "\n";
  if (state.diverged) {
    std::cerr << "scheme diverged after " << state.iterations
              << " iterations (report written to " << out_dir << ")\n";
    return kExitDivergence;
  }
  std::cout << "run " << (state.converged ? "converged" : "stopped") << " in "
            << state.iterations << " iterations; artifacts in " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  std::vector<VerifyRow> rows;
  try {
    rows = run_verify_suite(suite);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  bool all = true;
  std::cout << std::left << std::setw(12) << "suite" << std::setw(52) << "check"
            << std::setw(14) << "margin" << "status\n";
  for (const auto& r : rows) {
    all = all && r.pass;
    std::cout << std::left << std::setw(12) << r.suite << std::setw(52)
              << r.name << std::setw(14) << std::setprecision(4) << r.margin
              << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << "\n";
  }
  return all ? kExitOk : kExitVerify;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& values, const std::string& out_dir) {
  if (values.empty()) {
    std::cerr << "sweep: empty value list\n";
    return kExitConfig;
  }
  RunConfig base;
  try {
    base = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.field << ": " << e.what() << "\n";
    return kExitConfig;
  }

  auto apply = [&](RunConfig& cfg, double v) -> bool {
    auto& p = cfg.params;
    auto& g = cfg.grid;
    if (param == "gamma") p.gamma = v;
    else if (param == "k") p.k = v;
    else if (param == "sigma") p.sigma = v;
    else if (param == "d") p.d = v;
    else if (param == "eta") p.eta = v;
    else if (param == "alpha1") p.alpha1 = v;
    else if (param == "c_R") p.c_R = v;
    else if (param == "d1") p.d1 = v;
    else if (param == "gamma1") p.gamma1 = v;
    else if (param == "q1") p.q1 = v;
    else if (param == "delta") p.delta = v;
    else if (param == "v_max") p.v_max = v;
    else if (param == "x_extent") g.x_extent = v;
    else if (param == "v_extent") g.v_extent = v;
    else if (param == "nx") g.nx = static_cast<int>(v);
    else if (param == "nv") g.nv = static_cast<int>(v);
    else if (param == "t_final") g.t_final = v;
    else if (param == "nt") g.nt = static_cast<int>(v);
    else return false;
    return true;
  };

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/sweep.csv");
  csv << "param,value,final_mass,p_sup,tau_beta,iterations,converged";
  const bool richardson = param == "nt" && values.size() >= 3;
  if (richardson) csv << ",order_vs_prev";
  csv << "\n";

  std::vector<SpatialField> prev_final, prev2_final;
  std::vector<double> final_diffs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig cfg = base;
    if (!apply(cfg, values[i])) {
      std::cerr << "sweep: unknown parameter " << param << "\n";
      return kExitConfig;
    }
    SchemeState st;
    try {
      st = execute_run(cfg);
    } catch (const std::exception& e) {
      std::cerr << "sweep value " << values[i] << " failed: " << e.what() << "\n";
      return kExitConfig;
    }
    csv << param << ',' << std::setprecision(17) << values[i] << ','
        << integrate_phase(st.p.back()) << ',' << max_abs(st.p.back().values)
        << ','
        << (std::isfinite(st.tau_beta) ? std::to_string(st.tau_beta) : "")
        << ',' << st.iterations << ',' << (st.converged ? 1 : 0);
    if (richardson) {
      double order = std::numeric_limits<double>::quiet_NaN();
      if (!prev_final.empty()) {
        double diff = 0;
        const SpatialField& cur = st.ptilde.back();
        const SpatialField& prv = prev_final.back();
        for (std::size_t q = 0; q < cur.size(); ++q)
          diff += std::abs(cur[q] - prv[q]);
        diff *= cur.grid.cell_x();
        final_diffs.push_back(diff);
        if (final_diffs.size() >= 2) {
          const double d1 = final_diffs[final_diffs.size() - 2];
          const double d2 = final_diffs.back();
          if (d2 > 0) order = std::log2(d1 / d2);
        }
      }
      csv << ',' << (std::isnan(order) ? "" : std::to_string(order));
      prev2_final = std::move(prev_final);
      prev_final = st.ptilde;
    }
    csv << "\n";
  }
  std::cout << "sweep table written to " << out_dir << "/sweep.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinefp: phase-space solver and verification harness for a "
               "kinetic tip-density / TAF angiogenesis model"};
  app.require_subcommand(1);

  int threads = 0;

  std::string run_config, run_out = "artifacts/run";
  CliOverrides over;
  auto* run = app.add_subcommand("run", "run the coupled scheme from a config");
  run->add_option("--config", run_config, "config JSON path")->required();
  run->add_option("--out-dir", run_out, "artifact directory");
  run->add_option("--snapshots", over.snapshots, "snapshot count");
  run->add_option("--flux-mode", over.flux_mode, "override flux mode (cutoff|raw)");
  run->add_flag("--plots", over.plots, "write PNG heatmaps");
  run->add_option("--threads", threads, "worker threads");

  std::string verify_suite;
  auto* verify = app.add_subcommand("verify", "run an invariant suite");
  verify
      ->add_option("suite", verify_suite,
                   "kernels|linfp|taf|vintegrals|bounds|all")
      ->required();
  verify->add_option("--threads", threads, "worker threads");

  std::string sweep_config, sweep_param, sweep_out = "artifacts/sweep";
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "repeat a run over parameter values");
  sweep->add_option("--config", sweep_config, "config JSON path")->required();
  sweep->add_option("--param", sweep_param, "ModelParams or GridSpec field")
      ->required();
  sweep->add_option("--values", sweep_values, "numeric sweep values")
      ->required()
      ->expected(-1);
  sweep->add_option("--out-dir", sweep_out, "artifact directory");
  sweep->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kinefp::set_thread_count(threads);

  if (run->parsed()) return cmd_run(run_config, run_out, over);
  if (verify->parsed()) return cmd_verify(verify_suite);
  if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_param, sweep_values, sweep_out);
  return kExitConfig;
}

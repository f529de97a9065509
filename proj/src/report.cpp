#include "kinefp/report.hpp"

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace kinefp {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void write_field_csv(const std::string& path, const SpatialField& f,
                     const std::string& hash) {
  std::ofstream out(path);
  const Grid& g = f.grid;
  out << "# config_hash " << hash << '\n';
  out << "t";
  for (int d = 0; d < g.dim; ++d) out << ",i" << d;
  out << ",value\n";
  std::vector<int> idx(g.dim);
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(i, g.nx, g.dim, idx.data());
    out << fmt(f.time_stamp);
    for (int d = 0; d < g.dim; ++d) out << ',' << idx[d];
    out << ',' << fmt(f[i]) << '\n';
  }
}

json grid_meta(const Grid& g) {
  return json{{"dim", g.dim},     {"nx", g.nx},  {"nv", g.nv},
              {"x_extent", g.Lx}, {"v_extent", g.Lv},
              {"dx", g.dx},       {"dv", g.dv}};
}

void append_raw(std::ofstream& bin, const std::vector<double>& v) {
  bin.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

std::string ledgers_to_json(const std::vector<BoundLedger>& ledgers) {
  json arr = json::array();
  for (const auto& l : ledgers) {
    json inputs = json::array();
    for (const auto& in : l.inputs)
      inputs.push_back(json{{"tag", in.tag}, {"value", in.value}});
    arr.push_back(json{{"name", l.name},
                       {"lhs", l.lhs},
                       {"rhs", l.rhs},
                       {"margin", l.margin},
                       {"pass", l.pass},
                       {"inputs", inputs}});
  }
  return arr.dump(2);
}

void write_heatmap_png(const std::string& path, const std::vector<double>& v,
                       int rows, int cols) {
  double lo = v.empty() ? 0 : v[0], hi = lo;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double span = hi > lo ? hi - lo : 1.0;

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) return;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    return;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, cols, rows, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(3 * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double u = (v[static_cast<std::size_t>(r) * cols + c] - lo) / span;
      // compact blue->green->yellow ramp
      row[3 * c + 0] = static_cast<png_byte>(255.0 * std::min(1.0, 2.0 * u));
      row[3 * c + 1] = static_cast<png_byte>(255.0 * u);
      row[3 * c + 2] = static_cast<png_byte>(255.0 * std::max(0.0, 1.0 - 2.0 * u));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void write_artifacts(const std::string& out_dir, const RunConfig& cfg,
                     const SchemeState& state,
                     const std::vector<BoundLedger>& ledgers) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string hash = std::to_string(cfg.config_hash);

  {
    std::ofstream out(out_dir + "/config.json");
    out << cfg.raw_text;
  }

  // run report
  {
    json rep;
    rep["config_hash"] = hash;
    rep["converged"] = state.converged;
    rep["diverged"] = state.diverged;
    rep["truncated"] = state.truncated;
    rep["iterations"] = state.iterations;
    rep["horizon"] = state.horizon;
    rep["dt"] = state.dt;
    rep["flux_mode"] = to_string(state.flux_mode);
    rep["variant"] = state.variant == SchemeVariant::A ? "A" : "B";
    rep["diffs_p"] = state.diffs_p;
    rep["diffs_c"] = state.diffs_c;
    rep["mass_leak"] = state.mass_leak;
    rep["warning"] = state.warning;
    rep["tau_beta"] = std::isfinite(state.tau_beta) ? state.tau_beta : -1.0;
    try {
      rep["gronwall_G"] = uniqueness_constants(state, state).G;
    } catch (const std::exception&) {
      rep["gronwall_G"] = nullptr;  // gradient norms not stored
    }
    json norms;
    norms["p0_l1"] = state.p0_l1;
    norms["p0_sup"] = state.p0_sup;
    norms["c0_sup"] = state.c0_sup;
    norms["grad_v_sup_l1"] = state.grad_v_sup_l1;
    norms["moment_history"] = state.moment_history;
    rep["norms"] = norms;
    std::vector<double> mass, sup;
    for (const auto& pf : state.p) {
      mass.push_back(integrate_phase(pf));
      sup.push_back(max_abs(pf.values));
    }
    rep["mass_history"] = mass;
    rep["sup_history"] = sup;
    std::ofstream out(out_dir + "/report.json");
    out << rep.dump(2);
  }
  {
    std::ofstream out(out_dir + "/ledgers.json");
    out << ledgers_to_json(ledgers);
  }

  // snapshot CSVs
  const int nt = static_cast<int>(state.p.size()) - 1;
  const int cadence = std::max(1, nt / std::max(1, cfg.output.snapshots));
  auto snap_name = [&](const char* field, int n) {
    std::ostringstream os;
    os << out_dir << '/' << field << '_' << std::setw(4) << std::setfill('0')
       << n << ".csv";
    return os.str();
  };
  for (int n = 0; n <= nt; n += cadence) {
    write_field_csv(snap_name("ptilde", n), state.ptilde[n], hash);
    write_field_csv(snap_name("j", n), state.j[n], hash);
    write_field_csv(snap_name("c", n), state.c[n], hash);
  }

  // binary container
  {
    json header;
    header["dtype"] = "float64";
    header["order"] = "C";
    header["config_hash"] = hash;
    header["grid"] = grid_meta(state.grid);
    json fields = json::array();
    std::ofstream bin(out_dir + "/fields.bin", std::ios::binary);
    std::size_t offset = 0;
    auto add_phase = [&](const std::string& name, const PhaseField& f) {
      json meta;
      meta["name"] = name;
      meta["offset_bytes"] = offset;
      json shape = json::array();
      for (int d = 0; d < state.grid.dim; ++d) shape.push_back(state.grid.nx);
      for (int d = 0; d < state.grid.dim; ++d) shape.push_back(state.grid.nv);
      meta["shape"] = shape;
      meta["time"] = f.time_stamp;
      fields.push_back(meta);
      append_raw(bin, f.values);
      offset += f.values.size() * sizeof(double);
    };
    auto add_spatial = [&](const std::string& name, const SpatialField& f) {
      json meta;
      meta["name"] = name;
      meta["offset_bytes"] = offset;
      json shape = json::array();
      for (int d = 0; d < state.grid.dim; ++d) shape.push_back(state.grid.nx);
      meta["shape"] = shape;
      meta["time"] = f.time_stamp;
      fields.push_back(meta);
      append_raw(bin, f.values);
      offset += f.values.size() * sizeof(double);
    };
    const std::size_t series_bytes =
        state.p.size() * state.grid.phase_size() * sizeof(double);
    if (series_bytes <= (64u << 20)) {
      for (int n = 0; n <= nt; ++n)
        add_phase("p[" + std::to_string(n) + "]", state.p[n]);
    } else {
      add_phase("p_final", state.p.back());
    }
    for (int n = 0; n <= nt; ++n)
      add_spatial("c[" + std::to_string(n) + "]", state.c[n]);
    std::ofstream hout(out_dir + "/fields.json");
    header["fields"] = fields;
    hout << header.dump(2);
  }

  if (cfg.output.plots) {
    const Grid& g = state.grid;
    if (g.dim == 1) {
      // time-by-space carpet of ptilde and c
      std::vector<double> carpet;
      for (const auto& f : state.ptilde)
        carpet.insert(carpet.end(), f.values.begin(), f.values.end());
      write_heatmap_png(out_dir + "/ptilde.png", carpet,
                        static_cast<int>(state.ptilde.size()), g.nx);
      carpet.clear();
      for (const auto& f : state.c)
        carpet.insert(carpet.end(), f.values.begin(), f.values.end());
      write_heatmap_png(out_dir + "/c.png", carpet,
                        static_cast<int>(state.c.size()), g.nx);
    } else {
      // final-time planes (first two axes; higher dims take the mid-slice)
      auto plane = [&](const SpatialField& f) {
        std::vector<double> v;
        if (g.dim == 2) {
          v = f.values;
        } else {
          const int mid = g.nx / 2;
          v.resize(static_cast<std::size_t>(g.nx) * g.nx);
          for (int i = 0; i < g.nx; ++i)
            for (int jj = 0; jj < g.nx; ++jj)
              v[static_cast<std::size_t>(i) * g.nx + jj] =
                  f[(static_cast<std::size_t>(i) * g.nx + jj) * g.nx + mid];
        }
        return v;
      };
      write_heatmap_png(out_dir + "/ptilde.png", plane(state.ptilde.back()),
                        g.nx, g.nx);
      write_heatmap_png(out_dir + "/c.png", plane(state.c.back()), g.nx, g.nx);
    }
  }
}

}  // namespace kinefp

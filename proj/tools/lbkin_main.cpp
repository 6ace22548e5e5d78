#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lbkin/io.hpp"

using nlohmann::json;
using namespace lbkin;

namespace {

struct GlobalOpts {
  int threads = 0;
  long long seed = -1;  // -1: keep config seed
  std::string log_level = "info";
};

RunConfig load_with_overrides(const std::string& path, const GlobalOpts& g) {
  RunConfig cfg = load_config(path);
  if (g.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(g.seed);
    cfg.initial.seed = static_cast<std::uint64_t>(g.seed);
  }
  return cfg;
}

void apply_threads(const GlobalOpts& g) { set_threads(g.threads); }

// a section argument is either inline JSON or a path to a JSON file
std::string read_json_arg(const std::string& arg) {
  auto pos = arg.find_first_not_of(" \t\n");
  if (pos != std::string::npos && arg[pos] == '{') return arg;
  std::ifstream in(arg, std::ios::binary);
  if (!in) throw IoError("cannot open " + arg);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig config_from_section(const char* key, const std::string& arg) {
  json sect;
  try {
    sect = json::parse(read_json_arg(arg));
  } catch (const json::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
  json full = json::object();
  full[key] = sect;
  return parse_config_text(full.dump());
}

VecV parse_vec(const std::string& s, const char* flag) {
  std::vector<double> comp;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',' || ch == ' ') {
      if (!cur.empty()) comp.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (comp.size() != 2 && comp.size() != 3)
    throw ConfigError(std::string(flag) + " needs 2 or 3 comma-separated components");
  VecV v(static_cast<int>(comp.size()));
  for (size_t i = 0; i < comp.size(); ++i) v[static_cast<int>(i)] = comp[i];
  return v;
}

int cmd_dispersion(const std::string& pot_arg, const std::string& background, int dv, double vmax,
                   double kmin, double kmax, int ksteps, double umin, double umax, int usteps,
                   const std::string& out_csv, const GlobalOpts& g) {
  apply_threads(g);
  InteractionPotential pot = config_from_section("potential", pot_arg).potential.make();
  if (kmax <= 0) kmax = pot.k_max;

  std::shared_ptr<const DispersionTable> table;
  if (background == "maxwellian") {
    VelocityGrid vel(dv, 9, vmax);  // analytic marginal: only d_v and v_max matter
    table = build_dispersion_table(pot, vel, nullptr, TableLattice{});
  } else {
    PhaseSpaceField f = read_snapshot(background);
    auto mu = maxwellian(f.vel);
    auto smu = sqrt_maxwellian(f.vel);
    i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
    std::vector<double> F(static_cast<size_t>(nv));
    for (i64 vn = 0; vn < nv; ++vn) {
      double acc = 0;
      for (i64 xn = 0; xn < nx; ++xn) acc += f.at(xn, vn);
      F[static_cast<size_t>(vn)] =
          mu[static_cast<size_t>(vn)] + smu[static_cast<size_t>(vn)] * acc / static_cast<double>(nx);
    }
    table = build_dispersion_table(pot, f.vel, &F, TableLattice{});
  }

  std::ofstream csv(out_csv, std::ios::binary);
  if (!csv) throw IoError("dispersion: cannot open " + out_csv);
  csv << "k,u,re_eps,im_eps,abs_eps\n";
  char buf[256];
  int dvk = table->dirs.d_v;
  for (int ik = 0; ik < ksteps; ++ik) {
    double k = ksteps == 1 ? kmin : kmin + (kmax - kmin) * ik / (ksteps - 1);
    for (int iu = 0; iu < usteps; ++iu) {
      double u = usteps == 1 ? umin : umin + (umax - umin) * iu / (usteps - 1);
      VecV kv(dvk);
      kv[0] = k;
      std::complex<double> e = table->eps(kv, u);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", k, u, e.real(), e.imag(),
                    std::abs(e));
      csv << buf;
    }
  }
  PenroseScan scan = penrose_scan(*table, ScanRange{kmin, kmax, ksteps}, ScanRange{umin, umax, usteps});
  json out = {{"min_abs_eps", scan.min_abs},
              {"argmin_k", scan.k},
              {"argmin_u", scan.u},
              {"table_min_abs_eps", table->min_abs_eps},
              {"csv", out_csv}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_kernel(const std::string& pot_arg, const std::string& mode, const std::string& v_str,
               const std::string& w_str, bool table_A, const std::string& grid_arg,
               const std::string& out_path, double vmax, const GlobalOpts& g) {
  apply_threads(g);
  InteractionPotential pot = config_from_section("potential", pot_arg).potential.make();
  KernelQuadrature quad;

  if (table_A) {
    if (grid_arg.empty() || out_path.empty())
      throw ConfigError("kernel --table-A needs --grid and --out");
    GridConfig gc = config_from_section("grid", grid_arg).grid;
    VelocityGrid vel = gc.velocity();
    auto disp = build_dispersion_table(pot, vel, nullptr, TableLattice{});
    CollisionTables t =
        build_tables(vel, pot, disp, quad, mode == "unity" ? EpsMode::unity : EpsMode::maxwellian);
    // snapshot layout with values = tr A(v), then d_v^2 doubles per node row-major
    TorusGrid one{1, 1};
    PhaseSpaceField tr(one, vel);
    i64 nv = vel.num_nodes();
    for (i64 vn = 0; vn < nv; ++vn) {
      MatV A = t.A_at(vn);
      double s = 0;
      for (int i = 0; i < vel.d_v; ++i) s += A(i, i);
      tr.at(0, vn) = s;
    }
    write_snapshot(tr, out_path);
    std::ofstream os(out_path, std::ios::binary | std::ios::app);
    for (i64 vn = 0; vn < nv; ++vn) {
      MatV A = t.A_at(vn);
      for (int i = 0; i < vel.d_v; ++i)
        for (int j = 0; j < vel.d_v; ++j) {
          double x = A(i, j);
          os.write(reinterpret_cast<const char*>(&x), 8);
        }
    }
    json out = {{"out", out_path}, {"n_v", vel.n_v}, {"d_v", vel.d_v}, {"mode", mode}};
    std::cout << out.dump(2) << std::endl;
    return 0;
  }

  if (v_str.empty() || w_str.empty()) throw ConfigError("kernel needs --v and --w (or --table-A)");
  VecV v = parse_vec(v_str, "--v"), w = parse_vec(w_str, "--w");
  if (v.dim != w.dim) throw ConfigError("kernel: --v and --w must have the same dimension");
  std::shared_ptr<const DispersionTable> table;
  const DispersionTable* eps = nullptr;
  if (mode == "maxwellian") {
    VelocityGrid vel(v.dim, 9, vmax);
    table = build_dispersion_table(pot, vel, nullptr, TableLattice{});
    eps = table.get();
  }
  MatV B = collision_matrix(v, w, eps, pot, quad);
  char buf[64];
  for (int i = 0; i < v.dim; ++i) {
    for (int j = 0; j < v.dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g%s", B(i, j), j + 1 < v.dim ? " " : "\n");
      std::cout << buf;
    }
  }
  return 0;
}

int cmd_spectrum(const std::string& pot_arg, const std::string& grid_arg, const std::string& mode,
                 const GlobalOpts& g) {
  apply_threads(g);
  InteractionPotential pot = config_from_section("potential", pot_arg).potential.make();
  VelocityGrid vel = config_from_section("grid", grid_arg).grid.velocity();
  auto disp = build_dispersion_table(pot, vel, nullptr, TableLattice{});
  KernelQuadrature quad;
  CollisionTables t =
      build_tables(vel, pot, disp, quad, mode == "unity" ? EpsMode::unity : EpsMode::maxwellian);
  GapResult gap = spectral_gap(t);
  double lmax = l_max_estimate(t);

  // coercivity ratio of e.A(v)e against <v>^{-1}|P_perp e|^2 + <v>^{-3}|P_par e|^2
  double c1 = std::numeric_limits<double>::infinity(), c2 = 0;
  Rng rng(g.seed >= 0 ? static_cast<std::uint64_t>(g.seed) : 12);
  int d = vel.d_v;
  i64 nv = vel.num_nodes();
  i64 stride = std::max<i64>(1, nv / 200);
  int samples = 0;
  for (i64 vn = 0; vn < nv; vn += stride) {
    VecV v = vel.coords(vn);
    double r2 = dot(v, v);
    if (r2 > 36.0) continue;
    MatV A = t.A_at(vn);
    double br = std::sqrt(1.0 + r2);
    for (int trial = 0; trial < 4; ++trial) {
      VecV e(d);
      if (trial == 0 && r2 > 1e-12) {
        e = (1.0 / std::sqrt(r2)) * v;
      } else {
        for (int i = 0; i < d; ++i) e[i] = rng.normal();
        double ne = norm(e);
        if (ne < 1e-12) continue;
        e = (1.0 / ne) * e;
      }
      double num = dot(e, A * e);
      double par = r2 > 1e-12 ? dot(e, v) * dot(e, v) / r2 : 0.0;
      double den = (1.0 - par) / br + par / (br * br * br);
      double ratio = num / den;
      c1 = std::min(c1, ratio);
      c2 = std::max(c2, ratio);
      ++samples;
    }
  }
  json out = {{"gap", gap.value},
              {"method", gap.method},
              {"iterations", gap.iterations},
              {"l_max_estimate", lmax},
              {"coercivity", {{"c1", c1}, {"c2", c2}, {"ratio", c2 / c1}, {"samples", samples}}},
              {"mode", mode},
              {"n_v", vel.n_v},
              {"d_v", vel.d_v}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& resume,
                 const std::string& out_dir, const GlobalOpts& g) {
  apply_threads(g);
  RunConfig cfg = load_with_overrides(config_path, g);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!resume.empty()) {
    cfg.initial.kind = "snapshot";
    cfg.initial.file = resume;
  }
  cfg.validate();
  if (g.log_level == "debug") std::cout << canonical_config(cfg);
  std::ostream* log = &std::cout;
  RunSummary sum = run_simulation(cfg, log);
  const SeriesRow& last = sum.rows.back();
  json out = {{"steps", sum.steps},
              {"t_end", last.t},
              {"l2_final", last.l2},
              {"entropy_final", last.entropy},
              {"dt_stability_estimate", sum.dt_bound},
              {"series", sum.series_path}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_fit_decay(const std::string& series_path, const std::string& model, double theta,
                  const std::string& window, const GlobalOpts& g) {
  apply_threads(g);
  std::ifstream in(series_path, std::ios::binary);
  if (!in) throw IoError("fit-decay: cannot open " + series_path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("fit-decay: empty series " + series_path);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  int t_col = -1, l2_col = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "t") t_col = static_cast<int>(i);
    if (cols[i] == "l2") l2_col = static_cast<int>(i);
  }
  if (t_col < 0 || l2_col < 0)
    throw IoError("fit-decay: series lacks t/l2 columns: " + series_path);
  std::vector<double> t, y;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    int i = 0;
    double tv = 0, yv = 0;
    while (std::getline(ls, cell, ',')) {
      if (i == t_col) tv = std::stod(cell);
      if (i == l2_col) yv = std::stod(cell);
      ++i;
    }
    t.push_back(tv);
    y.push_back(yv * yv);  // fit the squared norm
  }
  double t0 = 0, t1 = t.empty() ? 0 : t.back();
  if (!window.empty()) {
    auto comma = window.find(',');
    if (comma == std::string::npos) throw ConfigError("fit-decay: --window expects t0,t1");
    t0 = std::stod(window.substr(0, comma));
    t1 = std::stod(window.substr(comma + 1));
  }
  FitResult fit = model == "poly" ? decay_fit_poly(t, y, t0, t1)
                                  : decay_fit_stretched(t, y, theta, t0, t1);
  json out = {{"model", fit.model}, {"rate", fit.rate},      {"offset", fit.offset},
              {"r2", fit.r2},       {"samples", fit.n_samples}, {"window", {t0, t1}}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& series_path,
               const GlobalOpts& g) {
  apply_threads(g);
  RunConfig cfg = load_with_overrides(config_path, g);
  json checks = json::array();
  bool all = true;
  auto record = [&](const std::string& name, bool pass, double value, double bar) {
    checks.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"bar", bar}});
    all = all && pass;
  };

  VelocityGrid vel = cfg.grid.velocity();
  InteractionPotential pot = cfg.potential.make();

  {  // Gaussian moment identities on the configured grid
    double worst = 0;
    for (const auto& m : moment_table(vel))
      worst = std::max(worst, std::abs(m.discrete - m.analytic) / std::max(std::abs(m.analytic), 1.0));
    record("moment-identities", worst <= 1e-6, worst, 1e-6);
  }
  {  // dielectric against the closed forms at u = 0 and u = 1
    auto table = build_dispersion_table(pot, vel, nullptr, TableLattice{});
    VecV k(vel.d_v);
    k[0] = 1.0;
    std::complex<double> e0 = table->eps(k, 0.0);
    double vh = pot.vhat(1.0);
    double r0 = std::abs(e0 - std::complex<double>(1.0 + 2.0 * vh, 0.0));
    std::complex<double> e1 = table->eps(k, 1.0);
    double im_ref = -2.0 * std::sqrt(M_PI) * vh * 1.0 * std::exp(-1.0);
    double r1 = std::abs(e1.imag() - im_ref) / std::abs(im_ref);
    record("dispersion-static", r0 <= 1e-8 * std::abs(e0), r0, 1e-8);
    record("dispersion-imag", r1 <= 1e-8, r1, 1e-8);
    PenroseScan scan = penrose_scan(*table, ScanRange{0.05, pot.k_max, 40}, ScanRange{-6.0, 6.0, 81});
    record("penrose-positive", scan.min_abs > 0, scan.min_abs, 0.0);

    CollisionTables t = build_tables(vel, pot, table, cfg.kernel, EpsMode::maxwellian);
    Rng rng(cfg.seed);
    double worst_null = 0;
    for (int s = 0; s < 25; ++s) {
      VecV v(vel.d_v), w(vel.d_v);
      for (int i = 0; i < vel.d_v; ++i) {
        v[i] = 2.0 * rng.normal();
        w[i] = rng.normal();
      }
      if (norm(w) < 0.2) w[0] += 1.0;
      MatV B = collision_matrix(v, w, table.get(), pot, cfg.kernel);
      worst_null = std::max(worst_null, norm(B * w) / std::max(frob(B), 1e-300));
    }
    record("kernel-null-direction", worst_null <= 1e-12, worst_null, 1e-12);

    i64 N = t.N();
    std::vector<double> g1(static_cast<size_t>(N)), g2(static_cast<size_t>(N)),
        L1(static_cast<size_t>(N)), L2v(static_cast<size_t>(N));
    for (i64 i = 0; i < N; ++i) {
      g1[static_cast<size_t>(i)] = rng.normal() * t.smu[static_cast<size_t>(i)];
      g2[static_cast<size_t>(i)] = rng.normal() * t.smu[static_cast<size_t>(i)];
    }
    apply_L(t, g1.data(), L1.data());
    apply_L(t, g2.data(), L2v.data());
    auto ip = [&](const std::vector<double>& a, const std::vector<double>& b) {
      return pairwise_sum(N, [&](i64 i) {
        return vel.node_weight[static_cast<size_t>(i)] * a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
      });
    };
    double s12 = ip(g1, L2v), s21 = ip(g2, L1);
    double scale = std::sqrt(ip(g1, g1) * ip(g2, g2));
    record("linearized-symmetry", std::abs(s12 - s21) <= 1e-12 * std::max(1.0, scale),
           std::abs(s12 - s21), 1e-12);
    double dis = dirichlet_form(t, g1.data());
    record("linearized-dissipative", dis >= -1e-12 * ip(g1, g1), dis, 0.0);

    auto chi = kernel_basis(vel);
    double worst_ann = 0;
    std::vector<double> Lc(static_cast<size_t>(N));
    for (const auto& c : chi) {
      apply_L(t, c.data(), Lc.data());
      worst_ann = std::max(worst_ann, std::sqrt(pairwise_sum(N, [&](i64 i) {
        return vel.node_weight[static_cast<size_t>(i)] * Lc[static_cast<size_t>(i)] * Lc[static_cast<size_t>(i)];
      })));
    }
    record("kernel-annihilation", worst_ann <= 1e-4, worst_ann, 1e-4);
  }
  {  // poisson inversion on a pure mode
    TorusGrid torus{1, 16};
    std::vector<double> src(16), expect(16);
    for (int i = 0; i < 16; ++i) {
      src[static_cast<size_t>(i)] = std::sin(torus.coord1(i));
      expect[static_cast<size_t>(i)] = src[static_cast<size_t>(i)];
    }
    auto phi = poisson_solve(torus, src);
    double worst = 0, mean = 0;
    for (int i = 0; i < 16; ++i) {
      worst = std::max(worst, std::abs(phi[static_cast<size_t>(i)] - expect[static_cast<size_t>(i)]));
      mean += phi[static_cast<size_t>(i)];
    }
    record("poisson-mode", worst <= 1e-12, worst, 1e-12);
    record("poisson-zero-mean", std::abs(mean) <= 1e-12, std::abs(mean), 1e-12);
  }
  {  // macro-identity residuals on a random snapshot
    TorusGrid torus{1, 16};
    VelocityGrid mvel(vel.d_v, vel.d_v == 2 ? 32 : 24, vel.d_v == 2 ? 7.0 : 6.0);
    PhaseSpaceField f(torus, mvel);
    Rng rng(cfg.seed + 7);
    auto smu = sqrt_maxwellian(mvel);
    for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
      for (i64 vn = 0; vn < mvel.num_nodes(); ++vn)
        f.at(xn, vn) = rng.normal() * smu[static_cast<size_t>(vn)];
    for (char p : {'a', 'b', 'c'}) {
      MacroIdentityResult r = macro_identity_check(f, p);
      record(std::string("macro-identity-") + p, r.rel <= 1e-8, r.rel, 1e-8);
    }
  }
  if (!series_path.empty()) {  // series drift
    std::ifstream in(series_path, std::ios::binary);
    if (!in) throw IoError("verify: cannot open " + series_path);
    std::string header;
    std::getline(in, header);
    bool ok = header == series_header(cfg.grid.d_v);
    record("series-header", ok, ok ? 0.0 : 1.0, 0.0);
  }

  json out = {{"all_pass", all}, {"checks", checks}};
  std::cout << out.dump(2) << std::endl;
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lenard-Balescu kinetic toolbox on the periodic box"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--log", g.log_level, "log level: info or debug")
      ->check(CLI::IsMember({"info", "debug"}));

  std::string config_path, out_dir = ".", resume, series_path, model = "poly", window;
  std::string pot_arg, grid_arg, background = "maxwellian", mode = "maxwellian";
  std::string v_str, w_str, out_path;
  bool table_A = false;
  int dv = 3, ksteps = 60, usteps = 121;
  double vmax = 8.0, kmin = 0.05, kmax = 0.0, umin = -6.0, umax = 6.0;
  double theta = 2.0;

  CLI::App* disp = app.add_subcommand("dispersion", "tabulate the dielectric and scan for zeros");
  disp->add_option("--potential", pot_arg, "potential JSON (inline or file)")->required();
  disp->add_option("--background", background, "maxwellian, or path to a state snapshot");
  disp->add_option("--dv", dv, "velocity dimension for the maxwellian background");
  disp->add_option("--v-max", vmax, "velocity box half-width for the maxwellian background");
  disp->add_option("--k-min", kmin);
  disp->add_option("--k-max", kmax, "0 = potential k_max");
  disp->add_option("--k-steps", ksteps);
  disp->add_option("--u-min", umin);
  disp->add_option("--u-max", umax);
  disp->add_option("--u-steps", usteps);
  disp->add_option("--out", out_path)->default_val("dispersion.csv");

  CLI::App* kern = app.add_subcommand("kernel", "evaluate one collision matrix or dump the A table");
  kern->add_option("--potential", pot_arg, "potential JSON (inline or file)")->required();
  kern->add_option("--mode", mode)->check(CLI::IsMember({"unity", "maxwellian"}));
  kern->add_option("--v", v_str, "velocity, comma-separated components");
  kern->add_option("--w", w_str, "relative velocity, comma-separated components");
  kern->add_flag("--table-A", table_A, "dump the background matrix field instead");
  kern->add_option("--grid", grid_arg, "grid JSON (inline or file), with --table-A");
  kern->add_option("--out", out_path, "snapshot output path, with --table-A");
  kern->add_option("--v-max", vmax, "marginal half-width for maxwellian mode");

  CLI::App* spec = app.add_subcommand("spectrum", "spectral gap and coercivity constants");
  spec->add_option("--potential", pot_arg, "potential JSON (inline or file)")->required();
  spec->add_option("--grid", grid_arg, "grid JSON (inline or file)")->required();
  spec->add_option("--mode", mode)->check(CLI::IsMember({"unity", "maxwellian"}));

  CLI::App* sim = app.add_subcommand("simulate", "time-integrate the kinetic equation");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--resume", resume);
  sim->add_option("--out-dir", out_dir)->required();

  CLI::App* ver = app.add_subcommand("verify", "run the invariant suite");
  ver->add_option("--config", config_path)->required();
  ver->add_option("--series", series_path);

  CLI::App* fit = app.add_subcommand("fit-decay", "fit a decay law to a series");
  fit->add_option("--series", series_path)->required();
  fit->add_option("--model", model)->check(CLI::IsMember({"poly", "stretched"}));
  fit->add_option("--theta", theta);
  fit->add_option("--window", window);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (disp->parsed())
      return cmd_dispersion(pot_arg, background, dv, vmax, kmin, kmax, ksteps, umin, umax, usteps,
                            out_path, g);
    if (kern->parsed())
      return cmd_kernel(pot_arg, mode, v_str, w_str, table_A, grid_arg, out_path, vmax, g);
    if (spec->parsed()) return cmd_spectrum(pot_arg, grid_arg, mode, g);
    if (sim->parsed()) return cmd_simulate(config_path, resume, out_dir, g);
    if (ver->parsed()) return cmd_verify(config_path, series_path, g);
    if (fit->parsed()) return cmd_fit_decay(series_path, model, theta, window, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
  return 1;
}

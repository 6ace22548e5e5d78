#include "lbkin/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lbkin {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const char* where, std::initializer_list<const char*> keys) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) {
      std::ostringstream os;
      os << "config: unknown key \"" << it.key() << "\" in " << where;
      throw ConfigError(os.str());
    }
  }
}

template <typename T>
void fetch(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    std::ostringstream os;
    os << "config: key \"" << key << "\" has the wrong type";
    throw ConfigError(os.str());
  }
}

}  // namespace

InteractionPotential PotentialConfig::make() const {
  if (kind == "debye") return InteractionPotential::debye(amplitude, screening, k_max);
  if (kind == "gaussian") return InteractionPotential::gaussian(amplitude, screening, k_max);
  throw ConfigError("config: potential.kind must be \"debye\" or \"gaussian\"");
}

void RunConfig::validate() const {
  grid.torus().validate();
  grid.velocity().validate();
  InteractionPotential pot = potential.make();
  pot.validate();
  kernel.validate(pot.k_max);
  solver.validate();
  nonlin.validate();
  if (initial.kind != "zero" && initial.kind != "random-micro" && initial.kind != "snapshot")
    throw ConfigError("config: initial.kind must be zero, random-micro, or snapshot");
  if (initial.kind == "snapshot" && initial.file.empty())
    throw ConfigError("config: initial.kind snapshot requires initial.file");
  if (diagnostics.n_used < 0 || diagnostics.n_used > 2)
    throw ConfigError("config: diagnostics.n_used must be 0, 1, or 2");
  if (solver.mode == SolverConfig::Mode::homogeneous && grid.n_x != 1)
    throw ConfigError("config: homogeneous mode requires grid.n_x = 1");
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << "config: JSON parse error at byte " << e.byte << ": " << e.what();
    throw ConfigError(os.str());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j, "top level",
                 {"grid", "potential", "kernel", "solver", "nonlin", "initial", "diagnostics",
                  "out_dir", "seed"});
  RunConfig c;

  if (j.contains("grid")) {
    const json& g = j["grid"];
    reject_unknown(g, "grid", {"d_x", "n_x", "d_v", "n_v", "v_max"});
    fetch(g, "d_x", c.grid.d_x);
    fetch(g, "n_x", c.grid.n_x);
    fetch(g, "d_v", c.grid.d_v);
    fetch(g, "n_v", c.grid.n_v);
    fetch(g, "v_max", c.grid.v_max);
  }
  if (j.contains("potential")) {
    const json& g = j["potential"];
    reject_unknown(g, "potential", {"kind", "amplitude", "screening", "k_max"});
    fetch(g, "kind", c.potential.kind);
    fetch(g, "amplitude", c.potential.amplitude);
    fetch(g, "screening", c.potential.screening);
    fetch(g, "k_max", c.potential.k_max);
  }
  if (j.contains("kernel")) {
    const json& g = j["kernel"];
    reject_unknown(g, "kernel", {"n_r", "n_dir", "r_max", "diag_exclusion", "cache_n_u"});
    fetch(g, "n_r", c.kernel.n_r);
    fetch(g, "n_dir", c.kernel.n_dir);
    fetch(g, "r_max", c.kernel.r_max);
    fetch(g, "diag_exclusion", c.kernel.diag_exclusion);
    fetch(g, "cache_n_u", c.kernel.cache_n_u);
  }
  if (j.contains("solver")) {
    const json& g = j["solver"];
    reject_unknown(g, "solver",
                   {"dt", "t_end", "scheme", "collision_integrator", "mode", "output_every",
                    "conservation_projection"});
    fetch(g, "dt", c.solver.dt);
    fetch(g, "t_end", c.solver.t_end);
    std::string s = "strang", integ = "rk4", mode = "linear";
    fetch(g, "scheme", s);
    fetch(g, "collision_integrator", integ);
    fetch(g, "mode", mode);
    if (s == "strang")
      c.solver.scheme = SolverConfig::Scheme::strang;
    else if (s == "lie")
      c.solver.scheme = SolverConfig::Scheme::lie;
    else
      throw ConfigError("config: solver.scheme must be strang or lie");
    if (integ == "rk4")
      c.solver.integrator = SolverConfig::Integrator::rk4;
    else if (integ == "rk2")
      c.solver.integrator = SolverConfig::Integrator::rk2;
    else
      throw ConfigError("config: solver.collision_integrator must be rk4 or rk2");
    if (mode == "linear")
      c.solver.mode = SolverConfig::Mode::linear;
    else if (mode == "nonlinear")
      c.solver.mode = SolverConfig::Mode::nonlinear;
    else if (mode == "homogeneous")
      c.solver.mode = SolverConfig::Mode::homogeneous;
    else
      throw ConfigError("config: solver.mode must be linear, nonlinear, or homogeneous");
    fetch(g, "output_every", c.solver.output_every);
    fetch(g, "conservation_projection", c.solver.conservation_projection);
  }
  if (j.contains("nonlin")) {
    const json& g = j["nonlin"];
    reject_unknown(g, "nonlin", {"eps_mode", "table_refresh", "smallness_guard"});
    std::string m = "frozen";
    fetch(g, "eps_mode", m);
    if (m == "frozen")
      c.nonlin.eps_mode = NonlinConfig::Mode::frozen;
    else if (m == "field")
      c.nonlin.eps_mode = NonlinConfig::Mode::field;
    else
      throw ConfigError("config: nonlin.eps_mode must be frozen or field");
    fetch(g, "table_refresh", c.nonlin.table_refresh);
    fetch(g, "smallness_guard", c.nonlin.smallness_guard);
  }
  if (j.contains("initial")) {
    const json& g = j["initial"];
    reject_unknown(g, "initial", {"kind", "seed", "amplitude", "file"});
    fetch(g, "kind", c.initial.kind);
    fetch(g, "seed", c.initial.seed);
    fetch(g, "amplitude", c.initial.amplitude);
    fetch(g, "file", c.initial.file);
  }
  if (j.contains("diagnostics")) {
    const json& g = j["diagnostics"];
    reject_unknown(g, "diagnostics", {"n_used"});
    fetch(g, "n_used", c.diagnostics.n_used);
  }
  fetch(j, "out_dir", c.out_dir);
  fetch(j, "seed", c.seed);

  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string canonical_config(const RunConfig& c) {
  json j;
  j["grid"] = {{"d_x", c.grid.d_x},
               {"n_x", c.grid.n_x},
               {"d_v", c.grid.d_v},
               {"n_v", c.grid.n_v},
               {"v_max", c.grid.v_max}};
  j["potential"] = {{"kind", c.potential.kind},
                    {"amplitude", c.potential.amplitude},
                    {"screening", c.potential.screening},
                    {"k_max", c.potential.k_max}};
  j["kernel"] = {{"n_r", c.kernel.n_r},
                 {"n_dir", c.kernel.n_dir},
                 {"r_max", c.kernel.r_max},
                 {"diag_exclusion", c.kernel.diag_exclusion},
                 {"cache_n_u", c.kernel.cache_n_u}};
  j["solver"] = {
      {"dt", c.solver.dt},
      {"t_end", c.solver.t_end},
      {"scheme", c.solver.scheme == SolverConfig::Scheme::strang ? "strang" : "lie"},
      {"collision_integrator",
       c.solver.integrator == SolverConfig::Integrator::rk4 ? "rk4" : "rk2"},
      {"mode", c.solver.mode == SolverConfig::Mode::linear
                   ? "linear"
                   : (c.solver.mode == SolverConfig::Mode::nonlinear ? "nonlinear" : "homogeneous")},
      {"output_every", c.solver.output_every},
      {"conservation_projection", c.solver.conservation_projection}};
  j["nonlin"] = {
      {"eps_mode", c.nonlin.eps_mode == NonlinConfig::Mode::frozen ? "frozen" : "field"},
      {"table_refresh", c.nonlin.table_refresh},
      {"smallness_guard", c.nonlin.smallness_guard}};
  j["initial"] = {{"kind", c.initial.kind},
                  {"seed", c.initial.seed},
                  {"amplitude", c.initial.amplitude},
                  {"file", c.initial.file}};
  j["diagnostics"] = {{"n_used", c.diagnostics.n_used}};
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

// ---- snapshots -----------------------------------------------------------

namespace {
void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw IoError("snapshot: truncated header in " + path);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}
}  // namespace

void write_snapshot(const PhaseSpaceField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("snapshot: cannot open " + path + " for writing");
  os.write("LBKF", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(f.torus.d_x));
  put_u32(os, static_cast<std::uint32_t>(f.vel.d_v));
  put_u32(os, static_cast<std::uint32_t>(f.torus.n_x));
  put_u32(os, static_cast<std::uint32_t>(f.vel.n_v));
  double vm = f.vel.v_max;
  os.write(reinterpret_cast<const char*>(&vm), 8);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * 8));
  if (!os) throw IoError("snapshot: write failed for " + path);
}

PhaseSpaceField read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("snapshot: cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "LBKF", 4) != 0)
    throw IoError("snapshot: bad magic in " + path);
  std::uint32_t ver = get_u32(is, path);
  if (ver != 1) {
    std::ostringstream os;
    os << "snapshot: unsupported version " << ver << " in " << path;
    throw IoError(os.str());
  }
  int d_x = static_cast<int>(get_u32(is, path));
  int d_v = static_cast<int>(get_u32(is, path));
  int n_x = static_cast<int>(get_u32(is, path));
  int n_v = static_cast<int>(get_u32(is, path));
  double vm = 0;
  if (!is.read(reinterpret_cast<char*>(&vm), 8)) throw IoError("snapshot: truncated header in " + path);
  TorusGrid torus{d_x, n_x};
  torus.validate();
  VelocityGrid vel(d_v, n_v, vm);
  PhaseSpaceField f(torus, vel);
  if (!is.read(reinterpret_cast<char*>(f.values.data()),
               static_cast<std::streamsize>(f.values.size() * 8)))
    throw IoError("snapshot: truncated data in " + path);
  char extra;
  if (is.read(&extra, 1)) throw IoError("snapshot: trailing bytes in " + path);
  return f;
}

void write_velocity_csv(const VelocityGrid& vel, const double* values, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("velocity csv: cannot open " + path);
  for (int i = 1; i <= vel.d_v; ++i) os << 'v' << i << ',';
  os << "value\n";
  char buf[64];
  for (i64 vn = 0; vn < vel.num_nodes(); ++vn) {
    VecV v = vel.coords(vn);
    for (int i = 0; i < vel.d_v; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,", v[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", values[vn]);
    os << buf;
  }
}

// ---- series --------------------------------------------------------------

std::string series_header(int d_v) {
  std::string h = "t,mass";
  for (int i = 1; i <= d_v; ++i) h += ",mom_" + std::to_string(i);
  h += ",energy,l2,entropy,e_N,d_N,min_abs_eps,projection_correction";
  return h;
}

void append_series_row(std::ostream& os, const SeriesRow& row, int d_v) {
  char buf[64];
  auto put = [&](double v, bool lead_comma = true) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (lead_comma) os << ',';
    os << buf;
  };
  put(row.t, false);
  put(row.inv.mass);
  for (int i = 0; i < d_v; ++i) put(row.inv.momentum[i]);
  put(row.inv.energy);
  put(row.l2);
  put(row.entropy);
  put(row.e_n);
  put(row.d_n);
  put(row.min_abs_eps);
  put(row.projection_correction);
  os << '\n';
}

// ---- initial data ----------------------------------------------------------

PhaseSpaceField random_micro_field(const TorusGrid& torus, const VelocityGrid& vel,
                                   std::uint64_t seed, double amplitude) {
  PhaseSpaceField f(torus, vel);
  Rng rng(seed);
  i64 nx = torus.num_nodes(), nv = vel.num_nodes();
  auto smu = sqrt_maxwellian(vel);
  std::vector<double> eta(static_cast<size_t>(nv)), sm(static_cast<size_t>(nv));
  int n = vel.n_v, d = vel.d_v;
  for (i64 xn = 0; xn < nx; ++xn) {
    for (i64 vn = 0; vn < nv; ++vn) eta[static_cast<size_t>(vn)] = rng.normal();
    // two passes of a 1-4-1-ish smoother per axis to tame grid-scale noise
    for (int pass = 0; pass < 2; ++pass)
      for (int a = 0; a < d; ++a) {
        for_each_v_line(
            vel, a,
            [n](const double* in, double* out, i64 stride) {
              for (int i = 0; i < n; ++i) {
                double lm = in[(i > 0 ? i - 1 : 0) * stride];
                double rp = in[(i < n - 1 ? i + 1 : n - 1) * stride];
                out[i * stride] = 0.25 * lm + 0.5 * in[i * stride] + 0.25 * rp;
              }
            },
            eta.data(), sm.data());
        eta.swap(sm);
      }
    double* g = f.xblock(xn);
    for (i64 vn = 0; vn < nv; ++vn)
      g[vn] = amplitude * eta[static_cast<size_t>(vn)] * smu[static_cast<size_t>(vn)];
    double coef[5];
    std::vector<double> micro(static_cast<size_t>(nv));
    project_P_v(vel, g, coef, micro.data());
    for (i64 vn = 0; vn < nv; ++vn) g[vn] = micro[static_cast<size_t>(vn)];
  }
  return f;
}

// ---- simulation driver -------------------------------------------------------

namespace {

// x-averaged full distribution mu + sqrt(mu) f, for the field-mode dielectric
std::vector<double> averaged_background(const PhaseSpaceField& f, const CollisionTables& t_mu) {
  i64 nx = f.torus.num_nodes(), nv = f.vel.num_nodes();
  std::vector<double> F(static_cast<size_t>(nv));
  for (i64 vn = 0; vn < nv; ++vn) {
    double m = 0;
    for (i64 xn = 0; xn < nx; ++xn) m += f.at(xn, vn);
    m /= static_cast<double>(nx);
    F[static_cast<size_t>(vn)] =
        t_mu.mu[static_cast<size_t>(vn)] + t_mu.smu[static_cast<size_t>(vn)] * m;
  }
  return F;
}

}  // namespace

RunSummary run_simulation(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  TorusGrid torus = cfg.grid.torus();
  VelocityGrid vel = cfg.grid.velocity();
  InteractionPotential pot = cfg.potential.make();
  pot.validate();

  std::filesystem::create_directories(cfg.out_dir);

  auto disp_mu = build_dispersion_table(pot, vel, nullptr, TableLattice{});
  CollisionTables t_mu = build_tables(vel, pot, disp_mu, cfg.kernel, EpsMode::maxwellian);

  PhaseSpaceField f(torus, vel);
  if (cfg.initial.kind == "random-micro") {
    f = random_micro_field(torus, vel, cfg.initial.seed, cfg.initial.amplitude);
  } else if (cfg.initial.kind == "snapshot") {
    f = read_snapshot(cfg.initial.file);
    if (f.torus.d_x != torus.d_x || f.torus.n_x != torus.n_x || f.vel.d_v != vel.d_v ||
        f.vel.n_v != vel.n_v || f.vel.v_max != vel.v_max)
      throw ConfigError("config: snapshot dimensions do not match the grid config");
  }

  SolverConfig sc = cfg.solver;
  bool nonlinear = sc.mode == SolverConfig::Mode::nonlinear;
  bool transported = torus.n_x > 1 && sc.mode != SolverConfig::Mode::homogeneous;
  // homogeneous runs integrate the same collision dynamics, nonlinear included
  SolverConfig step_cfg = sc;
  if (sc.mode == SolverConfig::Mode::homogeneous) {
    step_cfg.mode = SolverConfig::Mode::nonlinear;
    nonlinear = true;
  }

  bool field_mode = nonlinear && cfg.nonlin.eps_mode == NonlinConfig::Mode::field;
  std::shared_ptr<CollisionTables> t_field;
  auto refresh_field = [&]() {
    check_guard(f, cfg.nonlin);
    auto F = averaged_background(f, t_mu);
    auto disp_f = build_dispersion_table(pot, vel, &F, TableLattice{});
    t_field = std::make_shared<CollisionTables>(
        build_tables(vel, pot, disp_f, cfg.kernel, EpsMode::field));
  };
  if (field_mode) refresh_field();

  RunSummary sum(torus, vel);
  sum.dt_bound = dt_stability_bound(t_mu, sc);
  i64 n_steps = static_cast<i64>(std::llround(sc.t_end / sc.dt));
  if (n_steps < 1) n_steps = 1;
  if (log) {
    *log << "steps " << n_steps << ", dt " << sc.dt << ", explicit stability estimate "
         << sum.dt_bound << (sc.dt > sum.dt_bound ? " (dt exceeds the estimate)" : "") << "\n";
  }

  std::string series_path = cfg.out_dir + "/series.csv";
  std::ofstream series(series_path, std::ios::binary);
  if (!series) throw IoError("run: cannot open " + series_path + " for writing");
  series << series_header(vel.d_v) << "\n";
  sum.series_path = series_path;

  Moments target = moments(f);
  double proj_size = 0;

  auto emit = [&](i64 step) {
    SeriesRow row;
    row.t = static_cast<double>(step) * sc.dt;
    row.inv = moments(f);
    row.l2 = std::sqrt(f.torus.node_weight() *
                       pairwise_sum(torus.num_nodes() * vel.num_nodes(), [&](i64 idx) {
                         double x = f.values[static_cast<size_t>(idx)];
                         return vel.node_weight[static_cast<size_t>(idx % vel.num_nodes())] * x * x;
                       }));
    PhaseSpaceField F(torus, vel);
    for (i64 xn = 0; xn < torus.num_nodes(); ++xn)
      for (i64 vn = 0; vn < vel.num_nodes(); ++vn)
        F.at(xn, vn) = t_mu.mu[static_cast<size_t>(vn)] +
                       t_mu.smu[static_cast<size_t>(vn)] * f.at(xn, vn);
    i64 floored = 0;
    row.entropy = entropy(F, &floored);
    sum.entropy_floored += floored;
    NormReport nr = norms(f, cfg.diagnostics.n_used, t_mu);
    row.e_n = nr.e_N;
    row.d_n = nr.d_N;
    row.min_abs_eps = field_mode && t_field ? t_field->min_abs_eps() : t_mu.min_abs_eps();
    row.projection_correction = proj_size;
    append_series_row(series, row, vel.d_v);
    series.flush();
    sum.rows.push_back(row);
  };

  emit(0);
  for (i64 step = 1; step <= n_steps; ++step) {
    if (field_mode && ((step - 1) % cfg.nonlin.table_refresh == 0) && step > 1) refresh_field();
    if (sc.scheme == SolverConfig::Scheme::strang && transported) {
      transport_step(f, 0.5 * sc.dt);
      collision_step(f, sc.dt, t_mu, t_field.get(), step_cfg, step);
      transport_step(f, 0.5 * sc.dt);
    } else {
      if (transported) transport_step(f, sc.dt);
      collision_step(f, sc.dt, t_mu, t_field.get(), step_cfg, step);
    }
    proj_size = sc.conservation_projection ? conservation_projection(f, target) : 0.0;
    if (step % sc.output_every == 0 || step == n_steps) emit(step);
    if (step % (static_cast<i64>(sc.output_every) * 10) == 0 || step == n_steps) {
      std::ostringstream name;
      name << cfg.out_dir << "/state_" << step << ".lbkf";
      write_snapshot(f, name.str());
    }
  }
  if (log && sum.entropy_floored > 0)
    *log << "entropy: " << sum.entropy_floored << " node evaluations floored at 1e-300\n";

  sum.steps = n_steps;
  sum.final_field = f;
  return sum;
}

}  // namespace lbkin

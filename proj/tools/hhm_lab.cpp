// hhm-lab: experiment driver. One subcommand per run; every run writes its
// data files and then manifest.json into --out.

#include <hhm/hhm.hpp>
#include <hhm/io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <random>

using namespace hhm;
using io::jnum;
using io::json;

namespace {

constexpr int kExitOk = 0, kExitError = 1, kExitCertificate = 2;

json checks_json(const std::vector<Check>& cs) {
  json a = json::array();
  for (const Check& c : cs) a.push_back({{"name", c.name}, {"value", jnum(c.value)}, {"pass", c.pass}});
  return a;
}

json to_json(const BarrierCertificate& c) {
  json p = json::object();
  for (const auto& [k, v] : c.params) p[k] = jnum(v);
  return {{"check_id", c.id},
          {"bounds", p},
          {"constants", {{"claimed", jnum(c.claimed_constant)}}},
          {"grid", c.grid},
          {"h", jnum(c.h)},
          {"residual_min", jnum(c.residual_min)},
          {"tolerance", jnum(c.tolerance)},
          {"order", jnum(c.order)},
          {"slack", jnum(c.residual_min + c.tolerance)},
          {"checks", checks_json(c.checks)},
          {"pass", c.pass}};
}

json to_json(const MaxPrincipleCertificate& c, const std::string& case_id) {
  const MaxPrincipleBounds& b = c.bounds;
  return {{"check_id", c.check_id},
          {"case", case_id},
          {"bounds",
           {{"n", b.n}, {"R", jnum(b.R)}, {"T", jnum(b.T)}, {"lambda0", jnum(b.lambda0)}, {"Lambda0", jnum(b.Lambda0)},
            {"B", jnum(b.B)}, {"c0", jnum(b.c0)}, {"k", jnum(b.k)}, {"p", jnum(b.p)}, {"rho", jnum(b.rho)}}},
          {"constants", {{"q", jnum(c.q)}, {"B0", jnum(c.B0)}, {"Ctilde", jnum(c.Ctilde)}, {"c1", jnum(c.c1)}, {"C", jnum(c.C)}}},
          {"lhs", jnum(c.lhs)},
          {"rhs", jnum(c.rhs)},
          {"slack", jnum(c.slack)},
          {"eplus_nodes", c.eplus_nodes},
          {"pass", c.pass}};
}

json to_json(const EnergyCertificate& c, const std::string& id) {
  return {{"check_id", id},
          {"mode", c.mode == EnergyMode::elliptic ? "elliptic" : "parabolic"},
          {"constants", {{"Lambda", jnum(c.Lambda)}, {"C1", jnum(c.C1)}, {"eps", jnum(c.eps)}, {"C", jnum(c.C)}}},
          {"min_residual", jnum(c.min_residual)},
          {"tolerance", jnum(c.tolerance)},
          {"slack", jnum(c.min_residual + c.tolerance)},
          {"min_curvature", jnum(c.min_curvature)},
          {"pass", c.pass}};
}

json simple_check(const std::string& id, double value, double threshold, bool pass) {
  return {{"check_id", id}, {"value", jnum(value)}, {"threshold", jnum(threshold)}, {"pass", pass}};
}

io::Csv snapshot_csv(const MapField& u) {
  std::vector<std::string> h{"x"};
  for (long c = 0; c < u.vals.rows(); ++c) h.push_back("u" + std::to_string(c));
  io::Csv csv(h);
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::vector<double> row{(*u.grid)[i]};
    for (long c = 0; c < u.vals.rows(); ++c) row.push_back(u.vals(c, long(i)));
    csv.row(row);
  }
  return csv;
}

MapPreset make_preset(const ExperimentConfig& cfg) {
  const std::string e = cfg.experiment();
  if (e != "two-ends" && e != "conformal-Cm")
    throw ConfigError("config: this command needs a map preset (two-ends or conformal-Cm), got " + e);
  MapPreset P = e == "two-ends" ? twoends_poincare_preset(cfg.twoends) : conformal_g0_preset(cfg.conformal);
  P.schedule.tol = P.schedule_alt.tol = cfg.schedule_defaults.tol;
  return P;
}

// record the certificates of a json array and write it
void emit_certificates(io::RunWriter& out, const json& certs, const std::string& name = "certificates.json") {
  for (const auto& c : certs) {
    std::string id = c["check_id"].get<std::string>();
    if (c.contains("case")) id += ":" + c["case"].get<std::string>();
    out.certificate(id, c["pass"].get<bool>());
  }
  out.write_json(name, "certificates", certs);
}

// ------------------------------------------------------------ commands

void cmd_verify_barriers(const ExperimentConfig& cfg, io::RunWriter& out) {
  const BarrierSelection& b = cfg.barriers;
  json certs = json::array();
  io::Csv table({"check_id", "claimed_constant", "h", "residual_min", "tolerance", "order", "pass"});
  if (b.select.empty()) std::cerr << "verify-barriers: empty barrier selection, nothing to check\n";
  for (const std::string& s : b.select) {
    BarrierCertificate c;
    if (s == "power") c = barrier_power(b.power_n, b.power_alpha);
    else if (s == "log") c = barrier_log(b.log_n, b.log_alpha);
    else if (s == "poincare") c = barrier_poincare(b.poincare_mu_p);
    else if (s == "twoends") c = barrier_twoends(b.twoends_mu_p, b.twoends_delta);
    else c = weak_supersolution_twoends(b.weak_mu_p, b.twoends_delta, b.weak_eps, ChartMetric::two_ends(2, b.twoends_delta));
    certs.push_back(to_json(c));
    table.row({c.id}, {c.claimed_constant, c.h, c.residual_min, c.tolerance, c.order, c.pass ? 1.0 : 0.0});
  }
  emit_certificates(out, certs);
  out.write_csv("barriers.csv", "barrier-table", table);
}

void cmd_flow(const ExperimentConfig& cfg, io::RunWriter& out) {
  const std::string e = cfg.experiment();
  const double analytic_mu = e == "conformal-decay" ? cfg.decay.mu : std::numeric_limits<double>::quiet_NaN();
  const MapProblem Q = [&] {
    if (e == "conformal-decay") return conformal_decay_problem(cfg.decay);
    const MapPreset P = make_preset(cfg);
    return preset_level_problem(P, preset_comparison(P).limit, P.flow_level);
  }();
  const FlowTrajectory tr = integrate(Q, cfg.flow);
  io::Csv traj({"t", "max_velocity", "sup_rho_over_V", "slab_energy", "dt"});
  for (const TrajectoryRow& r : tr.rows) traj.row({r.t, r.max_velocity, r.sup_rho_over_V, r.slab_energy, r.dt});
  out.write_csv("trajectory.csv", "trajectory", traj);
  out.write_csv("snapshot_initial.csv", "snapshot", snapshot_csv(Q.h));
  out.write_csv("snapshot_final.csv", "snapshot", snapshot_csv(tr.final_state.u));

  json certs = json::array();
  certs.push_back(simple_check("velocity-nonincreasing", tr.max_velocity_ratio, 1 + 1e-8, tr.max_velocity_ratio <= 1 + 1e-8));
  if (Q.V) certs.push_back(simple_check("rho-below-V", tr.max_rho_over_V, 1 + 1e-3, tr.max_rho_over_V <= 1 + 1e-3));
  if (!tr.stationary && !tr.slabs.empty())
    certs.push_back(simple_check("slab-energy-bounded", double(tr.slabs.size()), 0, slabs_bounded(tr.slabs)));
  if (e == "conformal-decay") {
    const double d = std::abs(tr.fit.exponent - analytic_mu);
    certs.push_back(simple_check("decay-exponent", d, 0.3, tr.fit.enough && d <= 0.3));
  }
  if (cfg.flow.stationary_tol > 0) {
    const StationarityReport st = stationarity(Q, tr, cfg.flow.stationary_tol);
    certs.push_back(simple_check("stationary-matches-elliptic", st.elliptic_diff, 10 * cfg.flow.stationary_tol,
                                 st.converged && st.elliptic_diff < 10 * cfg.flow.stationary_tol));
  }
  emit_certificates(out, certs);
  out.stat("max_sigma_h", tr.initial_velocity);
  out.stat("steps", double(tr.steps));
  out.stat("slabs", double(tr.slabs.size()));
  out.stat("fit_exponent", tr.fit.exponent);
  out.stat("fit_constant", tr.fit.constant);
  out.stat("analytic_exponent", analytic_mu);
  out.stat("noise_floor", tr.noise_floor);
}

void cmd_exhaust(const ExperimentConfig& cfg, io::RunWriter& out) {
  const MapPreset P = make_preset(cfg);
  const ExhaustionResult V = preset_comparison(P);
  io::Csv vlog({"level", "radius", "barrier_C", "interlevel_diff"});
  for (const auto& L : V.log) vlog.row({double(L.level), L.radius, L.barrier_C, L.interlevel_diff});
  out.write_csv("comparison_levels.csv", "comparison-levels", vlog);

  const HarmonicExhaustion a = exhaustion_harmonic(P.metric, P.target, P.h, V.limit, P.barrier, P.schedule, cfg.harmonic);
  const HarmonicExhaustion b = exhaustion_harmonic(P.metric, P.target, P.h, V.limit, P.barrier, P.schedule_alt, cfg.harmonic);
  io::Csv levels({"level", "radius", "sup_rho_over_V", "energy_L1", "interlevel_sup_diff", "barrier_C"});
  double sup_ratio = 0;
  for (const auto& L : a.log) {
    levels.row({double(L.level), L.radius, L.sup_rho_over_V, L.energy_L1, L.interlevel_sup_diff, L.barrier_C});
    sup_ratio = std::max(sup_ratio, L.sup_rho_over_V);
  }
  out.write_csv("exhaust_levels.csv", "exhaust-levels", levels);
  out.write_csv("snapshot_limit.csv", "snapshot", snapshot_csv(a.limit));

  const ScalarField r = rho(P.target, a.limit, P.h);
  io::Csv prof({"x", "rho", "V", "barrier"});
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double x = (*r.grid)[i];
    prof.row({x, r[i], V.limit[i], P.barrier(x)});
  }
  out.write_csv("profile.csv", "profile", prof);

  const double diff = reference_sup_diff(a.limit, b.limit, P.schedule.reference);
  json certs = json::array();
  certs.push_back(simple_check("exhaustion-converged", a.log.empty() ? 0.0 : a.log.back().interlevel_sup_diff,
                               P.schedule.tol, a.converged));
  certs.push_back(simple_check("rho-below-V", sup_ratio, 1, sup_ratio <= 1));
  certs.push_back(simple_check("schedules-agree", diff, P.schedule.tol, b.converged && diff < P.schedule.tol));
  emit_certificates(out, certs);
  out.stat("levels", double(a.log.size()));
  out.stat("comparison_C", V.C);
}

void cmd_certify(const ExperimentConfig& cfg, io::RunWriter& out) {
  const std::string path = cfg.resolve(cfg.certify.battery).string();
  const auto first = load_battery(path, "firstmax"), par = load_battery(path, "parmax");
  json certs = json::array();
  io::Csv slack({"check_id", "case", "lhs", "rhs", "slack", "needed_c1", "pass"});
  auto add = [&](const MaxPrincipleCertificate& c, const std::string& id) {
    certs.push_back(to_json(c, id));
    slack.row({c.check_id, id}, {c.lhs, c.rhs, c.slack, c.needed_c1, c.pass ? 1.0 : 0.0});
  };
  for (const auto& bc : first) {
    const BatteryProblem P = battery_problem(bc, false);
    add(check_firstmax(P.grid, P.u, P.f, P.co, P.bounds), bc.id);
  }
  for (const auto& bc : par) {
    const BatteryProblem P = battery_problem(bc, true);
    add(check_parmax(P.grid, P.u, P.f, P.co, P.bounds), bc.id);
  }
  out.stat("c1_frozen", kFrozenC1);
  out.stat("c1_recalibrated", calibrate_c1(first));

  // upper contact set of a seeded noisy paraboloid, both routes
  const int n = cfg.certify.contact_grid;
  const SpaceTimeGrid g({n, n}, n, -1, 1, 0, 1);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  std::vector<double> u = g.sample([](const Vec& x, double t) { return 0.25 + t - x.squaredNorm(); });
  for (double& v : u) v += U(rng);
  const ContactSetResult lp = upper_contact_set(g, u, ContactMethod::lp);
  const ContactSetResult bf = upper_contact_set(g, u, ContactMethod::brute_force);
  io::Csv contact({"x0", "x1", "t", "u", "in_E", "in_E_brute", "in_Eplus"});
  std::size_t mismatch = 0;
  for (std::size_t X = 0; X < g.size(); ++X) {
    const Vec x = g.x(X);
    contact.row({x(0), x(1), g.t(X), u[X], double(lp.E[X]), double(bf.E[X]), double(lp.Eplus[X])});
    mismatch += lp.E[X] != bf.E[X];
  }
  out.write_csv("contact.csv", "contact", contact);
  certs.push_back(simple_check("contact-lp-equals-brute", double(mismatch), 0, mismatch == 0));

  if (cfg.certify.energy && cfg.experiment() != "conformal-decay") {
    const MapPreset P = make_preset(cfg);
    const ExhaustionResult V = preset_comparison(P);
    const MapProblem Q = preset_level_problem(P, V.limit, P.flow_level);
    const HarmonicResult hr = hermitian_harmonic_solve(Q, cfg.harmonic);
    const EnergyCertificate ec = check_energy_inequality(Q.metric, Q.target, hr.u);
    certs.push_back(to_json(ec, "energy-elliptic"));
    io::Csv en({"x", "residual", "curvature"});
    for (std::size_t i = 0; i < hr.u.size(); ++i) en.row({(*hr.u.grid)[i], ec.residual[i], ec.curvature[i]});
    out.write_csv("energy.csv", "energy", en);
    // parabolic mode over the first flow steps from h
    FlowState s = flow_init(Q, cfg.flow.flow);
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    EnergyCertificate last;
    for (int k = 0; k < 20; ++k) {
      const FlowState nx = flow_step(Q, s, cfg.flow.flow);
      last = check_energy_inequality(Q.metric, Q.target, s, nx);
      ok = ok && last.pass;
      worst = std::min(worst, last.min_residual + last.tolerance);
      s = nx;
    }
    json pj = to_json(last, "energy-parabolic");
    pj["slack"] = jnum(worst);
    pj["pass"] = ok;
    certs.push_back(pj);
  }
  emit_certificates(out, certs);
  out.write_csv("slack.csv", "slack", slack);
}

void cmd_probe_resolvent(const ExperimentConfig& cfg, io::RunWriter& out) {
  const ResolventSettings& r = cfg.resolvent;
  const GridPtr g = make_grid(Grid1D::radial_graded(0, 2, std::exp2(r.R_max_log2), r.h, 8, 2 * r.m));
  const double mu = r.datum_mu;
  const ScalarField phi = ScalarField::sample(g, [mu](double x) { return std::pow(1 + std::log1p(x * x), -mu); });
  std::vector<double> angles;
  for (double a : r.angles) angles.push_back(a * M_PI / 180);
  const ResolventTable t = resolvent_probe(ChartMetric::conformal(r.m), angles, r.radii, phi);
  io::Csv csv({"angle_deg", "r", "sup_abs", "sup_imag", "sup_times_r"});
  json certs = json::array();
  for (std::size_t k = 0; k < r.angles.size(); ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (std::size_t j = 0; j < r.radii.size(); ++j) {
      const ResolventRow& row = t.rows[k * r.radii.size() + j];
      csv.row({r.angles[k], row.r, row.sup_abs, row.sup_imag, row.sup_times_r});
      lo = std::min(lo, row.sup_times_r);
      hi = std::max(hi, row.sup_times_r);
    }
    json c = simple_check("resolvent-bounded", hi / lo, 10, std::isfinite(hi) && hi / lo < 10);
    c["case"] = io::num(r.angles[k]);
    c["slope"] = jnum(t.slope[k]);
    certs.push_back(c);
  }
  out.write_csv("resolvent.csv", "resolvent", csv);
  emit_certificates(out, certs);
}

void cmd_special_functions(const ExperimentConfig& cfg, io::RunWriter& out) {
  const SpecialSettings& s = cfg.special;
  const KummerSuite S = kummer_identity_suite(arange(s.a_min, s.a_max, s.a_step), s.b, arange(s.z_min, s.z_max, s.z_step),
                                              s.limit_z);
  io::Csv rows({"a", "b", "z", "value", "diffequ", "kummer", "diff"});
  for (const auto& r : S.rows) rows.row({r.a, r.b, r.z, r.value, r.diffequ, r.transform, r.diff});
  out.write_csv("kummer_identities.csv", "kummer-identities", rows);
  io::Csv lim({"a", "b", "z", "scaled_gap"});
  for (const auto& r : S.limit) lim.row({r.a, r.b, r.z, r.scaled_gap});
  out.write_csv("kummer_limit.csv", "kummer-limit", lim);
  json certs = json::array();
  certs.push_back(simple_check("kummer-diffequ", S.worst_diffequ, KummerSuite::tol_diffequ, S.worst_diffequ < KummerSuite::tol_diffequ));
  certs.push_back(simple_check("kummer-transform", S.worst_transform, KummerSuite::tol_transform,
                               S.worst_transform < KummerSuite::tol_transform));
  certs.push_back(simple_check("kummer-diff", S.worst_diff, KummerSuite::tol_diff, S.worst_diff < KummerSuite::tol_diff));
  certs.push_back(simple_check("kummer-limit", double(S.limit.size()), 0, S.limit_converges));
  emit_certificates(out, certs, "kummer_suite.json");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"hhm-lab: Hermitian harmonic map experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<unsigned> seed;
  std::optional<int> refine;
  using Cmd = void (*)(const ExperimentConfig&, io::RunWriter&);
  const std::vector<std::tuple<std::string, std::string, Cmd>> cmds{
      {"verify-barriers", "sampled barrier certificates", cmd_verify_barriers},
      {"flow", "heat flow trajectory on the configured preset", cmd_flow},
      {"exhaust", "exhaustion solve of the configured preset", cmd_exhaust},
      {"certify", "contact sets, maximum principles, energy inequality", cmd_certify},
      {"probe-resolvent", "resolvent sweep along rays", cmd_probe_resolvent},
      {"special-functions", "Kummer identity suite", cmd_special_functions},
  };
  std::string chosen;
  Cmd run = nullptr;
  for (const auto& [name, help, fn] : cmds) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override [experiment] seed");
    sub->add_option("--grid-refine", refine, "override [experiment] grid_refine")->check(CLI::Range(0, 4));
    sub->callback([&chosen, &run, name = name, fn = fn] {
      chosen = name;
      run = fn;
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }
  try {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream overrides;
    if (seed) overrides << "\nseed-override=" << *seed;
    if (refine) overrides << "\ngrid-refine-override=" << *refine;
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (refine) {
      cfg.grid_refine = *refine;
      cfg.twoends.refine = cfg.conformal.refine = cfg.decay.refine = *refine;
    }
    // every precondition is checked before the output directory is touched
    if (chosen == "flow" || chosen == "exhaust" || (chosen == "certify" && cfg.certify.energy)) {
      const std::string e = cfg.experiment();
      if (chosen == "exhaust" && e == "conformal-decay")
        throw ConfigError("config: exhaust needs a map preset (two-ends or conformal-Cm)");
    }
    if (chosen == "certify" && !std::filesystem::exists(cfg.resolve(cfg.certify.battery)))
      throw ConfigError("config: [certify] battery: file not found: " + cfg.resolve(cfg.certify.battery).string());
    io::RunWriter out(out_dir, chosen, cfg.text + overrides.str());
    run(cfg, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.finish(wall, {{"seed", cfg.seed}, {"grid_refine", cfg.grid_refine}, {"config_path", config_path}});
    std::cout << chosen << ": " << (out.all_pass() ? "all certificates pass" : "certificate failure") << " ("
              << out_dir << ")\n";
    return out.all_pass() ? kExitOk : kExitCertificate;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << chosen << ": error: " << e.what() << "\n";
    return kExitError;
  }
}

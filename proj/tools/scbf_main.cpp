// scbf: pathwise simulation and random-attractor experiments for the 2D
// stochastic convective Brinkman-Forchheimer equations on channel domains.
//
// Subcommands: check-invariants | simulate | pullback | upsemi | measure
// Exit codes:  0 pass, 2 assertion failure, 3 config error, 4 numerical abort.

#include "scbf/attractor.hpp"
#include "scbf/config.hpp"
#include "scbf/field_io.hpp"
#include "scbf/measure.hpp"
#include "scbf/rds.hpp"
#include "scbf/rng.hpp"
#include "scbf/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scbf;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_assert = 2;
constexpr int exit_config = 3;
constexpr int exit_numeric = 4;

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open " + p.string());
    os << s;
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command) {
    json j;
    j["command"] = command;
    j["version"] = version_string;
    j["config"] = json::parse(config_json(cfg));
    write_text(dir / "manifest.json", j.dump(2));
}

fs::path prepare_outdir(const RunConfig& cfg) {
    fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// check-invariants: operator-identity suites with measured defects
// ---------------------------------------------------------------------------

struct CheckRow {
    std::string name;
    double defect;
    double tolerance;
    bool pass;
};

int cmd_check_invariants(const RunConfig& cfg) {
    const DomainSpec dom = make_domain(cfg.m, cfg.Ly, cfg.h);
    OperatorWorkspace ws(dom, cfg.poisson_tol, cfg.max_iters);
    std::vector<CheckRow> rows;
    auto add = [&](const std::string& name, double defect, double tol) {
        rows.push_back({name, defect, tol, defect <= tol});
    };

    const int n = cfg.check_fields;
    double d_skew = 0.0, d_antisym = 0.0, d_stokes = 0.0, d_mono = 0.0;
    double d_lady = 0.0, d_poincare = 0.0, d_proj_idem = 0.0, d_proj_div = 0.0, d_proj_orth = 0.0;
    constexpr double pi = 3.14159265358979323846;
    const double lam1_analytic =
        pi * pi * (1.0 / (4.0 * dom.half_width * dom.half_width) + 1.0 / (dom.height * dom.height));
    for (int k = 0; k < n; ++k) {
        const VelocityField u = random_solenoidal(dom, 100 + k);
        const VelocityField v = random_solenoidal(dom, 200 + k);
        const VelocityField w = random_solenoidal(dom, 300 + k);
        // skew symmetry (optionally broken by the negative-control flag)
        const double bvv = cfg.nonskew_advection ? trilinear_raw(u, v, v) : trilinear_b(u, v, v);
        d_skew = std::max(d_skew, std::abs(bvv) / (norm_H(u) * norm_H(v) * norm_V(v)));
        d_antisym = std::max(d_antisym, std::abs(trilinear_b(u, v, w) + trilinear_b(u, w, v)));
        // Stokes quadratic form
        const double nv = norm_V(v);
        d_stokes = std::max(d_stokes,
                            std::abs(inner_face(ws.stokes_apply(v), v) - nv * nv) / (nv * nv));
        // damping monotonicity across exponents
        for (double rr : {1.0, 2.0, 3.0, 3.5}) {
            const VelocityField dc = axpy(damping_raw(u, rr), -1.0, damping_raw(v, rr));
            const double mono = inner_face(dc, axpy(u, -1.0, v));
            d_mono = std::min(d_mono, mono);
        }
        // Ladyzhenskaya with the classical constant
        const double l4 = norm_Lp(v, 4.0);
        d_lady = std::max(d_lady,
                          l4 / (std::pow(2.0, 0.25) * std::sqrt(norm_H(v) * norm_V(v))));
        // Poincare with the analytic rectangle constant
        d_poincare = std::max(d_poincare, lam1_analytic * norm_H(v) * norm_H(v) / (nv * nv));
        // projection identities on a raw (non-solenoidal) field
        VelocityField raw = u;
        for (std::size_t q = 0; q < raw.ux.size(); ++q)
            raw.ux[q] += 0.3 * rng::normal(9000 + k, 1, q);
        for (std::size_t q = 0; q < raw.uy.size(); ++q)
            raw.uy[q] += 0.3 * rng::normal(9000 + k, 2, q);
        raw.zero_boundary();
        const VelocityField pw = ws.project(raw);
        const VelocityField ppw = ws.project(pw);
        d_proj_idem = std::max(d_proj_idem, norm_face(axpy(ppw, -1.0, pw)) / norm_face(pw));
        const ScalarField dv = stencil::divergence(pw);
        double dmax = 0.0;
        for (double x : dv.values) dmax = std::max(dmax, std::abs(x));
        d_proj_div = std::max(d_proj_div, dmax);
        const ScalarField phi = ws.solve_poisson_neumann(stencil::divergence(u));
        const VelocityField g = stencil::gradient(phi);
        d_proj_orth =
            std::max(d_proj_orth, std::abs(inner_face(pw, g)) /
                                      std::max(1e-300, norm_face(pw) * norm_face(g)));
    }
    add("trilinear_skew |b(u,v,v)|", d_skew, 1e-12);
    add("trilinear_antisymmetry", d_antisym, 1e-12);
    add("stokes_quadratic_form", d_stokes, 1e-8);
    add("damping_monotonicity_min", -d_mono, 1e-12);
    add("ladyzhenskaya_ratio", d_lady, 1.05);
    add("poincare_ratio", d_poincare, 1.0);
    add("projection_idempotence", d_proj_idem, 10.0 * cfg.poisson_tol);
    add("projection_divergence", d_proj_div, cfg.poisson_tol);
    add("projection_orthogonality", d_proj_orth, 1e-8);

    const VelocityField probe = random_solenoidal(dom, 42);
    const double comm = ws.commutator_diagnostic(probe);

    json out;
    out["identities"] = json::array();
    bool all_pass = true;
    for (const auto& r : rows) {
        out["identities"].push_back({{"name", r.name},
                                     {"defect", r.defect},
                                     {"tolerance", r.tolerance},
                                     {"pass", r.pass}});
        all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": defect " << r.defect
                  << " (tol " << r.tolerance << ")\n";
    }
    out["diagnostics"] = {{"projection_laplacian_commutator", comm}};
    std::cout << "diagnostic projection/laplacian commutator: " << comm << "\n";

    const fs::path dir = prepare_outdir(cfg);
    write_text(dir / "check_invariants.json", out.dump(2));
    write_manifest(dir, cfg, "check-invariants");
    return all_pass ? exit_ok : exit_assert;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
    const DomainSpec dom = make_domain(cfg.m, cfg.Ly, cfg.h);
    const NoiseSpec noise = build_noise_spec(cfg, dom);
    const VelocityField f = build_profile(cfg.forcing, dom);
    Model model(dom, cfg.physics(), noise, f, cfg.poisson_tol);

    const std::uint64_t seed = cfg.seeds.front();
    OUPath path;
    if (noise.kind != NoiseKind::none)
        path = sample_ou_path(seed, model.noise(), cfg.t0, cfg.t1, cfg.dt);

    const VelocityField u0 = random_solenoidal(dom, seed, 12, 1.0);
    const NoiseState ns0 = model.noise_state(path, cfg.t0);
    const VelocityField v0 = axpy(u0, -1.0, ns0.z);

    RecordOptions opts;
    opts.stride = cfg.stride;
    opts.ledger = cfg.ledger;
    opts.vledger = cfg.vledger;
    opts.tail_k = cfg.tail_k;
    opts.snapshot_times = cfg.snapshot_times;

    const TrajectoryRecord rec = model.integrate(v0, path, cfg.t0, cfg.t1, cfg.dt, opts);

    const fs::path dir = prepare_outdir(cfg);
    write_trajectory_csv((dir / "trajectory.csv").string(), rec);
    if (noise.kind != NoiseKind::none) {
        write_ou_csv((dir / "ou_path.csv").string(), path);
        write_text(dir / "ou_manifest.json", ou_manifest_json(path, model.noise()));
    }
    for (const auto& [ts, u] : rec.snapshots) {
        std::ostringstream name;
        name << "snapshot_t" << ts << ".scbf";
        write_snapshot((dir / name.str()).string(), u);
    }
    write_manifest(dir, cfg, "simulate");
    std::cout << "simulate: " << rec.size() << " records, final |u|_H = " << rec.u_H.back()
              << ", cfl warnings " << rec.cfl_warnings << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// pullback
// ---------------------------------------------------------------------------

int cmd_pullback(const RunConfig& cfg) {
    const DomainSpec dom = make_domain(cfg.m, cfg.Ly, cfg.h);
    const NoiseSpec noise = build_noise_spec(cfg, dom);
    const VelocityField f = build_profile(cfg.forcing, dom);

    const fs::path dir = prepare_outdir(cfg);
    json reports = json::array();
    bool attraction_ok = true;
    for (std::uint64_t seed : cfg.seeds) {
        Model model(dom, cfg.physics(), noise, f, cfg.poisson_tol);
        PullbackConfig pc;
        pc.pullback_times = cfg.pullback_times;
        pc.ball_radius = cfg.ball_radius;
        pc.ball_count = cfg.ball_count;
        pc.seed = seed;
        pc.dt = cfg.dt;

        json jt = json::array(), jd = json::array(), jtail = json::array();
        double first_diam = -1.0, last_diam = 0.0;
        for (double t : cfg.pullback_times) {
            const PullbackResult res = pullback_evolve(model, pc, t);
            jt.push_back(t);
            jd.push_back(res.diameter);
            if (first_diam < 0.0) first_diam = res.diameter;
            last_diam = res.diameter;
            double tm = 0.0;
            if (cfg.tail_k > 0.0)
                for (const auto& s : res.states)
                    tm = std::max(tm, tail_mass(s, cfg.tail_k).smooth);
            jtail.push_back(tm);
            if (t == cfg.pullback_times.back()) {
                int idx = 0;
                for (const auto& s : res.states) {
                    std::ostringstream name;
                    name << "cloud_seed" << seed << "_member" << idx++ << ".scbf";
                    write_snapshot((dir / name.str()).string(), s);
                }
            }
        }
        double L_hat = 0.0;
        if (noise.kind == NoiseKind::scalar_ou && noise.n_modes() == 1 && cfg.r > 1.0) {
            AbsorbingEstimate est =
                absorbing_radius(model, seed, cfg.absorb_horizon, cfg.absorb_M, cfg.dt);
            L_hat = est.L_hat;
        }
        if (!(last_diam <= first_diam)) attraction_ok = false;
        reports.push_back({{"seed", seed},
                           {"t_list", jt},
                           {"diameters", jd},
                           {"L_hat", L_hat},
                           {"tail_masses", jtail}});
        std::cout << "pullback seed " << seed << ": diameter " << first_diam << " -> "
                  << last_diam << "\n";
    }
    write_text(dir / "pullback_report.json", json{{"runs", reports}}.dump(2));
    write_manifest(dir, cfg, "pullback");
    return attraction_ok ? exit_ok : exit_assert;
}

// ---------------------------------------------------------------------------
// upsemi
// ---------------------------------------------------------------------------

int cmd_upsemi(const RunConfig& cfg) {
    const DomainSpec base = make_domain(cfg.m_ref, cfg.Ly, cfg.h);
    const NoiseSpec noise = build_noise_spec(cfg, base);
    const VelocityField f = build_profile(cfg.forcing, base);

    PullbackConfig pc;
    pc.pullback_times = cfg.pullback_times;
    pc.ball_radius = cfg.ball_radius;
    pc.ball_count = cfg.ball_count;
    pc.dt = cfg.dt;

    const UpperSemiResult res =
        upper_semi_experiment(cfg.m_list, cfg.m_ref, cfg.Ly, cfg.h, cfg.physics(), noise, f,
                              cfg.seeds, pc, cfg.pullback_tol, cfg.upsemi_ratio_threshold);

    const fs::path dir = prepare_outdir(cfg);
    write_upper_semi_csv((dir / "upsemi.csv").string(), res);
    write_text(dir / "upsemi_summary.json", upper_semi_summary_json(res));
    write_manifest(dir, cfg, "upsemi");
    for (std::size_t i = 0; i < res.m_list.size(); ++i)
        std::cout << "m = " << res.m_list[i] << ": median d_m = " << res.median_d[i] << "\n";
    std::cout << "verdict: shrinks=" << res.shrinks << " nonincreasing=" << res.nonincreasing
              << " ratio_ok=" << res.ratio_ok << "\n";
    return (res.shrinks && res.nonincreasing) ? exit_ok : exit_assert;
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

int cmd_measure(const RunConfig& cfg) {
    const DomainSpec dom = make_domain(cfg.m, cfg.Ly, cfg.h);
    const NoiseSpec noise = build_noise_spec(cfg, dom);
    const VelocityField f = build_profile(cfg.forcing, dom);
    Model model(dom, cfg.physics(), noise, f, cfg.poisson_tol);

    const ObservableSet obs =
        make_default_observables(model.workspace(), cfg.observable_modes, cfg.r);
    const EmpiricalMeasure em =
        empirical_measure(model, cfg.seeds, cfg.burn_in, cfg.horizon, cfg.dt, obs);

    const double lam1 = model.workspace().smallest_stokes_eigenpairs(1).values[0];
    const UniquenessCondition uc = uniqueness_condition(model, lam1);

    const VelocityField u10 = random_solenoidal(dom, 11, 12, 1.0);
    const VelocityField u20 = random_solenoidal(dom, 12, 12, 1.0);
    const CouplingReport cr = coupling_decay(model, cfg.seeds.front(), u10, u20, cfg.coupling_T,
                                             cfg.dt, lam1, cfg.contraction_slack_c);
    const ExpMomentReport xm = exp_moment_check(model, cfg.seeds, cfg.exp_moment_eps,
                                                cfg.exp_moment_T, cfg.dt, VelocityField(dom));

    const fs::path dir = prepare_outdir(cfg);
    write_measure_csv((dir / "measure.csv").string(), em);
    json j = json::parse(measure_summary_json(em));
    j["lambda1"] = lam1;
    j["uniqueness_condition"] = {{"lhs", uc.lhs},
                                 {"rhs", uc.rhs},
                                 {"holds", uc.condition_holds},
                                 {"side_condition", uc.side_condition_holds}};
    j["coupling"] = {{"violations", cr.violations},
                     {"fitted_rate", cr.fitted_rate},
                     {"rate_defined", cr.rate_defined},
                     {"final_diff_sq", cr.diff_sq.back()},
                     {"initial_diff_sq", cr.diff_sq.front()}};
    j["exp_moment"] = {{"eps", xm.eps},
                       {"lhs", xm.lhs},
                       {"bound", xm.bound},
                       {"trace", xm.trace},
                       {"pass", xm.pass}};
    write_text(dir / "measure_summary.json", j.dump(2));
    write_manifest(dir, cfg, "measure");

    std::cout << "lambda1 = " << lam1 << ", uniqueness condition " << uc.lhs << " <= " << uc.rhs
              << " : " << (uc.condition_holds ? "holds" : "violated") << "\n";
    std::cout << "coupling violations: " << cr.violations
              << ", exp-moment pass: " << xm.pass << "\n";
    const bool ok = cr.violations == 0 && xm.pass;
    return ok ? exit_ok : exit_assert;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pathwise SCBF channel-flow laboratory"};
    app.set_version_flag("--version", version_string);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads_override = 0;
    std::string out_override;
    bool print_defaults = false;

    app.add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed_override, "override the first seed");
    app.add_option("--threads", threads_override, "worker pool size override");
    app.add_option("--out", out_override, "output directory override");
    app.add_flag("--print-defaults", print_defaults, "print the full default config and exit");

    app.require_subcommand(0, 1);
    auto* c_check = app.add_subcommand("check-invariants", "operator identity suites");
    auto* c_sim = app.add_subcommand("simulate", "integrate one trajectory");
    auto* c_pull = app.add_subcommand("pullback", "pullback attraction experiment");
    auto* c_upsemi = app.add_subcommand("upsemi", "domain-truncation attractor comparison");
    auto* c_measure = app.add_subcommand("measure", "invariant-measure statistics");

    CLI11_PARSE(app, argc, argv);

    if (print_defaults) {
        std::cout << config_json(default_config()) << "\n";
        return exit_ok;
    }

    RunConfig cfg;
    try {
        cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (seed_opt->count() > 0) {
            seed_set = true;
            if (cfg.seeds.empty()) cfg.seeds.push_back(seed_override);
            else cfg.seeds[0] = seed_override;
        }
        (void)seed_set;
        if (threads_override > 0) cfg.threads = threads_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    try {
        if (c_check->parsed()) return cmd_check_invariants(cfg);
        if (c_sim->parsed()) return cmd_simulate(cfg);
        if (c_pull->parsed()) return cmd_pullback(cfg);
        if (c_upsemi->parsed()) return cmd_upsemi(cfg);
        if (c_measure->parsed()) return cmd_measure(cfg);
        std::cerr << app.help();
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return exit_numeric;
    }
}

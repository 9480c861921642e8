#include "scbf/config.hpp"
#include "scbf/field_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace scbf {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

ProfileSpec read_profile(const json& j, const std::string& where) {
    check_keys(j, {"kind", "width", "amplitude", "path"}, where);
    ProfileSpec p;
    read(j, "kind", p.kind);
    read(j, "width", p.width);
    read(j, "amplitude", p.amplitude);
    read(j, "path", p.path);
    if (p.kind != "zero" && p.kind != "gaussian_stream" && p.kind != "snapshot")
        throw std::invalid_argument("config: unknown profile kind '" + p.kind + "' in " + where);
    return p;
}

json profile_json(const ProfileSpec& p) {
    return json{{"kind", p.kind}, {"width", p.width}, {"amplitude", p.amplitude},
                {"path", p.path}};
}

} // namespace

PhysicsParams RunConfig::physics() const {
    PhysicsParams p;
    p.mu = mu;
    p.alpha = alpha;
    p.beta = beta;
    p.r = r;
    p.ell = ell;
    p.eta = eta;
    p.advection = advection;
    p.cfl_mode = (cfl_mode == "reject") ? CflMode::reject : CflMode::warn;
    p.cfl_factor = cfl_factor;
    return p;
}

void RunConfig::validate() const {
    physics().validate();
    if (m < 1) throw std::invalid_argument("config: m must be >= 1");
    if (!(Ly > 0.0) || !(h > 0.0)) throw std::invalid_argument("config: Ly, h must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be > 0");
    if (cfl_mode != "warn" && cfl_mode != "reject")
        throw std::invalid_argument("config: cfl_mode must be warn or reject");
    if (noise_kind != "none" && noise_kind != "scalar-ou" &&
        noise_kind != "stokes-ou-truncated")
        throw std::invalid_argument("config: unknown noise kind '" + noise_kind + "'");
    if (noise_kind != "none" && modes.empty() && noise_kind == "scalar-ou")
        throw std::invalid_argument("config: scalar-ou noise needs at least one mode");
    if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
    for (const auto& mc : modes)
        if (!(mc.eta > 0.0)) throw std::invalid_argument("config: mode eta must be > 0");
    if (!(poisson_tol > 0.0)) throw std::invalid_argument("config: poisson_tol must be > 0");
}

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("config: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    check_keys(j,
               {"domain", "physics", "noise", "time", "records", "ensemble", "seeds",
                "output_dir", "threads", "solver", "calibration", "measure", "check"},
               "top level");
    RunConfig c;
    if (j.contains("domain")) {
        const json& d = j["domain"];
        check_keys(d, {"m", "m_list", "m_ref", "Ly", "h"}, "domain");
        read(d, "m", c.m);
        read(d, "m_list", c.m_list);
        read(d, "m_ref", c.m_ref);
        read(d, "Ly", c.Ly);
        read(d, "h", c.h);
    }
    if (j.contains("physics")) {
        const json& p = j["physics"];
        check_keys(p,
                   {"mu", "alpha", "beta", "r", "ell", "eta", "advection", "cfl_mode",
                    "cfl_factor", "forcing"},
                   "physics");
        read(p, "mu", c.mu);
        read(p, "alpha", c.alpha);
        read(p, "beta", c.beta);
        read(p, "r", c.r);
        read(p, "ell", c.ell);
        read(p, "eta", c.eta);
        read(p, "advection", c.advection);
        read(p, "cfl_mode", c.cfl_mode);
        read(p, "cfl_factor", c.cfl_factor);
        if (p.contains("forcing")) c.forcing = read_profile(p["forcing"], "physics.forcing");
    }
    if (j.contains("noise")) {
        const json& n = j["noise"];
        check_keys(n, {"kind", "modes", "stokes_modes"}, "noise");
        read(n, "kind", c.noise_kind);
        read(n, "stokes_modes", c.stokes_modes);
        if (n.contains("modes")) {
            c.modes.clear();
            for (const auto& jm : n["modes"]) {
                check_keys(jm, {"profile", "sigma", "eta"}, "noise.modes[]");
                ModeConfig mc;
                if (jm.contains("profile"))
                    mc.profile = read_profile(jm["profile"], "noise.modes[].profile");
                read(jm, "sigma", mc.sigma);
                read(jm, "eta", mc.eta);
                c.modes.push_back(mc);
            }
        }
    }
    if (j.contains("time")) {
        const json& t = j["time"];
        check_keys(t, {"dt", "t0", "t1", "pullback_times", "burn_in", "horizon"}, "time");
        read(t, "dt", c.dt);
        read(t, "t0", c.t0);
        read(t, "t1", c.t1);
        read(t, "pullback_times", c.pullback_times);
        read(t, "burn_in", c.burn_in);
        read(t, "horizon", c.horizon);
    }
    if (j.contains("records")) {
        const json& r = j["records"];
        check_keys(r, {"stride", "ledger", "vledger", "tail_k", "snapshot_times"}, "records");
        read(r, "stride", c.stride);
        read(r, "ledger", c.ledger);
        read(r, "vledger", c.vledger);
        read(r, "tail_k", c.tail_k);
        read(r, "snapshot_times", c.snapshot_times);
    }
    if (j.contains("ensemble")) {
        const json& e = j["ensemble"];
        check_keys(e, {"ball_radius", "ball_count"}, "ensemble");
        read(e, "ball_radius", c.ball_radius);
        read(e, "ball_count", c.ball_count);
    }
    read(j, "seeds", c.seeds);
    read(j, "output_dir", c.output_dir);
    read(j, "threads", c.threads);
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, {"poisson_tol", "max_iters"}, "solver");
        read(s, "poisson_tol", c.poisson_tol);
        read(s, "max_iters", c.max_iters);
    }
    if (j.contains("calibration")) {
        const json& k = j["calibration"];
        check_keys(k,
                   {"absorb_M", "absorb_horizon", "vledger_C", "contraction_slack_c",
                    "pullback_tol", "upsemi_ratio_threshold", "upsemi_slack",
                    "temperedness_threshold"},
                   "calibration");
        read(k, "absorb_M", c.absorb_M);
        read(k, "absorb_horizon", c.absorb_horizon);
        read(k, "vledger_C", c.vledger_C);
        read(k, "contraction_slack_c", c.contraction_slack_c);
        read(k, "pullback_tol", c.pullback_tol);
        read(k, "upsemi_ratio_threshold", c.upsemi_ratio_threshold);
        read(k, "upsemi_slack", c.upsemi_slack);
        read(k, "temperedness_threshold", c.temperedness_threshold);
    }
    if (j.contains("measure")) {
        const json& m = j["measure"];
        check_keys(m, {"observable_modes", "coupling_T", "exp_moment_eps", "exp_moment_T"},
                   "measure");
        read(m, "observable_modes", c.observable_modes);
        read(m, "coupling_T", c.coupling_T);
        read(m, "exp_moment_eps", c.exp_moment_eps);
        read(m, "exp_moment_T", c.exp_moment_T);
    }
    if (j.contains("check")) {
        const json& k = j["check"];
        check_keys(k, {"fields", "nonskew_advection"}, "check");
        read(k, "fields", c.check_fields);
        read(k, "nonskew_advection", c.nonskew_advection);
    }
    c.validate();
    return c;
}

std::string config_json(const RunConfig& c) {
    json j;
    j["domain"] = {{"m", c.m}, {"m_list", c.m_list}, {"m_ref", c.m_ref}, {"Ly", c.Ly},
                   {"h", c.h}};
    j["physics"] = {{"mu", c.mu},       {"alpha", c.alpha},
                    {"beta", c.beta},   {"r", c.r},
                    {"ell", c.ell},     {"eta", c.eta},
                    {"advection", c.advection}, {"cfl_mode", c.cfl_mode},
                    {"cfl_factor", c.cfl_factor}, {"forcing", profile_json(c.forcing)}};
    json jm = json::array();
    for (const auto& mc : c.modes)
        jm.push_back({{"profile", profile_json(mc.profile)}, {"sigma", mc.sigma},
                      {"eta", mc.eta}});
    j["noise"] = {{"kind", c.noise_kind}, {"modes", jm}, {"stokes_modes", c.stokes_modes}};
    j["time"] = {{"dt", c.dt},       {"t0", c.t0},
                 {"t1", c.t1},       {"pullback_times", c.pullback_times},
                 {"burn_in", c.burn_in}, {"horizon", c.horizon}};
    j["records"] = {{"stride", c.stride},
                    {"ledger", c.ledger},
                    {"vledger", c.vledger},
                    {"tail_k", c.tail_k},
                    {"snapshot_times", c.snapshot_times}};
    j["ensemble"] = {{"ball_radius", c.ball_radius}, {"ball_count", c.ball_count}};
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    j["solver"] = {{"poisson_tol", c.poisson_tol}, {"max_iters", c.max_iters}};
    j["calibration"] = {{"absorb_M", c.absorb_M},
                        {"absorb_horizon", c.absorb_horizon},
                        {"vledger_C", c.vledger_C},
                        {"contraction_slack_c", c.contraction_slack_c},
                        {"pullback_tol", c.pullback_tol},
                        {"upsemi_ratio_threshold", c.upsemi_ratio_threshold},
                        {"upsemi_slack", c.upsemi_slack},
                        {"temperedness_threshold", c.temperedness_threshold}};
    j["measure"] = {{"observable_modes", c.observable_modes},
                    {"coupling_T", c.coupling_T},
                    {"exp_moment_eps", c.exp_moment_eps},
                    {"exp_moment_T", c.exp_moment_T}};
    j["check"] = {{"fields", c.check_fields}, {"nonskew_advection", c.nonskew_advection}};
    return j.dump(2);
}

VelocityField build_profile(const ProfileSpec& p, const DomainSpec& d) {
    if (p.kind == "zero") return VelocityField(d);
    if (p.kind == "gaussian_stream") {
        VelocityField g = gaussian_stream_profile(d, p.width);
        if (p.amplitude != 1.0)
            for (auto* arr : {&g.ux, &g.uy})
                for (double& a : *arr) a *= p.amplitude;
        return g;
    }
    if (p.kind == "snapshot") {
        VelocityField g = read_snapshot(p.path);
        if (!g.domain.same_grid(d)) g = restrict_to(g, d);
        if (p.amplitude != 1.0)
            for (auto* arr : {&g.ux, &g.uy})
                for (double& a : *arr) a *= p.amplitude;
        return g;
    }
    throw std::invalid_argument("build_profile: unknown kind '" + p.kind + "'");
}

NoiseSpec build_noise_spec(const RunConfig& cfg, const DomainSpec& base) {
    NoiseSpec spec;
    if (cfg.noise_kind == "none") {
        spec.kind = NoiseKind::none;
        return spec;
    }
    if (cfg.noise_kind == "stokes-ou-truncated") {
        OperatorWorkspace ws(base, cfg.poisson_tol, cfg.max_iters);
        const double sigma = cfg.modes.empty() ? 0.1 : cfg.modes[0].sigma;
        const double eta_shift = cfg.eta > 0.0 ? cfg.eta : 1.0;
        return make_stokes_noise(ws, cfg.stokes_modes, sigma, eta_shift, cfg.mu);
    }
    spec.kind = NoiseKind::scalar_ou;
    for (const auto& mc : cfg.modes) {
        NoiseMode m;
        m.profile = build_profile(mc.profile, base);
        m.sigma = mc.sigma;
        m.eta = mc.eta;
        spec.modes.push_back(std::move(m));
    }
    return spec;
}

} // namespace scbf

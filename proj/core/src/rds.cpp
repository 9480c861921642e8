#include "scbf/rds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scbf {

void PullbackConfig::validate() const {
    if (pullback_times.empty())
        throw std::invalid_argument("PullbackConfig: no pullback times given");
    for (std::size_t i = 1; i < pullback_times.size(); ++i)
        if (!(pullback_times[i] > pullback_times[i - 1]))
            throw std::invalid_argument("PullbackConfig: pullback times must increase");
    const bool ball = ball_radius > 0.0 && ball_count > 0;
    if (!ball && ic_ensemble.empty())
        throw std::invalid_argument("PullbackConfig: empty ensemble");
    if (!(dt > 0.0)) throw std::invalid_argument("PullbackConfig: dt must be > 0");
}

std::vector<VelocityField> PullbackConfig::make_ensemble(const DomainSpec& d) const {
    if (!(ball_radius > 0.0 && ball_count > 0)) {
        for (const auto& v : ic_ensemble)
            if (!v.domain.same_grid(d))
                throw std::invalid_argument("PullbackConfig: member on wrong grid");
        return ic_ensemble;
    }
    std::vector<VelocityField> out;
    for (int i = 0; i < ball_count; ++i)
        out.push_back(random_solenoidal(d, seed * 1000003ull + static_cast<std::uint64_t>(i), 12,
                                        ball_radius));
    return out;
}

VelocityField cocycle(const Model& model, double t, const OUPath& omega, const VelocityField& x,
                      double dt) {
    if (t < 0.0) throw std::invalid_argument("cocycle: t must be >= 0");
    OUPath path = omega;
    if (model.noise().kind != NoiseKind::none) path = ensure_window(omega, 0.0, std::max(t, dt));
    const NoiseState ns0 = model.noise_state(path, 0.0);
    VelocityField v = axpy(x, -1.0, ns0.z);
    const long long n = std::llround(t / dt);
    for (long long k = 0; k < n; ++k)
        v = model.step(v, path, static_cast<double>(k) * dt, dt);
    return model.reconstruct_u(v, path, static_cast<double>(n) * dt);
}

VelocityField cocycle(const Model& model, double t, std::uint64_t seed, const VelocityField& x,
                      double dt) {
    OUPath path;
    if (model.noise().kind != NoiseKind::none)
        path = sample_ou_path(seed, model.noise(), 0.0, std::max(t, dt), dt);
    return cocycle(model, t, path, x, dt);
}

PullbackResult pullback_evolve(const Model& model, const PullbackConfig& cfg, double t) {
    cfg.validate();
    if (std::find_if(cfg.pullback_times.begin(), cfg.pullback_times.end(), [&](double s) {
            return std::abs(s - t) <= 1e-12 * std::max(1.0, t);
        }) == cfg.pullback_times.end())
        throw std::invalid_argument("pullback_evolve: t is not in the configured list");
    PullbackResult res;
    res.pullback_time = t;
    OUPath path;
    const bool noisy = model.noise().kind != NoiseKind::none;
    if (noisy) path = sample_ou_path(cfg.seed, model.noise(), -t, 0.0, cfg.dt);
    const std::vector<VelocityField> ics = cfg.make_ensemble(model.domain());
    for (const auto& x : ics) {
        const NoiseState ns = model.noise_state(path, -t);
        VelocityField v = axpy(x, -1.0, ns.z);
        const long long n = std::llround(t / cfg.dt);
        for (long long k = 0; k < n; ++k)
            v = model.step(v, path, -t + static_cast<double>(k) * cfg.dt, cfg.dt);
        res.states.push_back(model.reconstruct_u(v, path, 0.0));
    }
    for (std::size_t a = 0; a < res.states.size(); ++a)
        for (std::size_t b = a + 1; b < res.states.size(); ++b)
            res.diameter =
                std::max(res.diameter, norm_H(axpy(res.states[a], -1.0, res.states[b])));
    return res;
}

AbsorbingEstimate absorbing_radius(Model& model, std::uint64_t seed, double horizon, double M,
                                   double dt) {
    if (model.noise().kind == NoiseKind::none)
        throw std::invalid_argument("absorbing_radius: a noise specification is required");
    const OUPath path = sample_ou_path(seed, model.noise(), -horizon, 0.0, dt);
    return absorbing_radius(model, path, M);
}

AbsorbingEstimate absorbing_radius(Model& model, const OUPath& path, double M) {
    const PhysicsParams& p = model.params();
    if (p.r <= 1.0)
        throw std::invalid_argument(
            "absorbing_radius: r must be > 1 (the tail exponent 2(r+1)/(r-1) is singular at 1)");
    if (model.noise().kind == NoiseKind::none)
        throw std::invalid_argument("absorbing_radius: a noise specification is required");
    if (model.noise().n_modes() != 1)
        throw std::invalid_argument("absorbing_radius: single-mode scalar noise only");
    if (path.t_start > -path.dt || path.t_end < 0.0)
        throw std::invalid_argument("absorbing_radius: path must cover [-T, 0]");
    const NoiseMode& mode = model.noise().modes[0];
    const double sigma = mode.sigma;
    const VelocityField& g = mode.profile;
    const double g_H = norm_face(g);
    const double g_DA = norm_face(model.workspace().stokes_apply(g));
    const double ex = 2.0 * (p.r + 1.0) / (p.r - 1.0);
    const double g_ex = norm_Lp(g, ex);
    const double g_r1 = norm_Lp(g, p.r + 1.0);
    const double f_H = norm_face(model.forcing());

    const double horizon = -path.t_start;
    const double dt = path.dt;
    AbsorbingEstimate est;
    est.seed = path.seed;
    est.horizon = horizon;
    const std::size_t n = path.index_of(0.0) + 1;  // integrate over [-T, 0] only
    est.times.resize(n);
    est.integrand.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = -horizon + static_cast<double>(i) * dt;
        const double y = sigma * path.samples[0][i];  // amplitude folded into y g
        est.times[i] = t;
        est.integrand[i] = f_H * f_H + (g_H * g_H + g_DA * g_DA) * y * y +
                           std::pow(std::abs(y), ex) * std::pow(g_ex, ex) +
                           std::pow(std::abs(y), p.r + 1.0) * std::pow(g_r1, p.r + 1.0);
    }
    // exact exponential weights per interval with trapezoidal values:
    // int e^{alpha t} phi dt ~= sum phi_mid (e^{alpha t1} - e^{alpha t0})/alpha,
    // exact for constant phi (the geometric-integral contract).
    double acc = 0.0;
    const double a = p.alpha;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double mid = 0.5 * (est.integrand[i] + est.integrand[i + 1]);
        const double w = (a > 0.0)
                             ? (std::exp(a * est.times[i + 1]) - std::exp(a * est.times[i])) / a
                             : dt;
        acc += mid * w;
    }
    est.L_hat = M * acc;
    const double y0 = sigma * path.value(0, 0.0);
    est.L_star_sq = est.L_hat + g_H * g_H * y0 * y0;
    return est;
}

double tail_cutoff_rho(double s) {
    if (s <= 1.0) return 0.0;
    if (s >= 2.0) return 1.0;
    const double t = s - 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

TailMass tail_mass(const VelocityField& v, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("tail_mass: k must be > 0");
    if (k >= v.domain.half_width)
        throw std::invalid_argument("tail_mass: k must be smaller than the domain half-width");
    std::vector<double> cx, cy;
    to_centers(v, cx, cy);
    const int nx = v.domain.nx, ny = v.domain.ny;
    const double h2 = v.domain.cell_area();
    TailMass tm;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j) * nx + i;
            const double x = v.domain.center_x(i);
            const double m2 = cx[c] * cx[c] + cy[c] * cy[c];
            tm.smooth += tail_cutoff_rho(2.0 * x * x / (k * k)) * m2;
            if (std::abs(x) >= k) tm.hard += m2;
        }
    tm.smooth *= h2;
    tm.hard *= h2;
    return tm;
}

} // namespace scbf

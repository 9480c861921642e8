#include "scbf/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbf {

std::vector<double> ObservableSet::evaluate(const VelocityField& u) const {
    std::vector<double> vals;
    const double nH = norm_H(u);
    vals.push_back(nH * nH);
    const double nV = norm_V(u);
    vals.push_back(nV * nV);
    vals.push_back(std::pow(norm_Lp(u, r + 1.0), r + 1.0));
    for (const auto& p : probes) vals.push_back(inner_face(u, p));
    return vals;
}

ObservableSet make_default_observables(OperatorWorkspace& ws, int k_modes, double r) {
    ObservableSet obs;
    obs.r = r;
    obs.names = {"u_H_sq", "u_V_sq", "u_Lr1_pow"};
    if (k_modes > 0) {
        const StokesEigenResult eig = ws.smallest_stokes_eigenpairs(k_modes);
        for (int k = 0; k < k_modes; ++k) {
            obs.probes.push_back(eig.fields[k]);
            obs.names.push_back("mode_coeff_" + std::to_string(k + 1));
        }
    }
    return obs;
}

EmpiricalMeasure empirical_measure(Model& model, const std::vector<std::uint64_t>& seeds,
                                   double burn_in, double horizon, double dt,
                                   const ObservableSet& obs, int hist_bins) {
    if (!(burn_in < horizon))
        throw std::invalid_argument("empirical_measure: burn_in must be < horizon");
    EmpiricalMeasure em;
    em.burn_in = burn_in;
    em.horizon = horizon;
    em.dt = dt;
    em.seeds = seeds;

    const std::size_t n_obs = obs.names.size();
    std::vector<std::vector<double>> seed_means(n_obs);
    std::vector<std::vector<double>> all_samples(n_obs);

    for (std::uint64_t seed : seeds) {
        OUPath path;
        if (model.noise().kind != NoiseKind::none)
            path = sample_ou_path(seed, model.noise(), 0.0, horizon, dt);
        const NoiseState ns0 = model.noise_state(path, 0.0);
        VelocityField v = axpy(VelocityField(model.domain()), -1.0, ns0.z);  // u0 = 0
        const long long nsteps = std::llround(horizon / dt);
        std::vector<double> acc(n_obs, 0.0);
        long long count = 0;
        for (long long n = 0; n < nsteps; ++n) {
            const double t = static_cast<double>(n) * dt;
            v = model.step(v, path, t, dt);
            if (t + dt >= burn_in) {
                const VelocityField u = model.reconstruct_u(v, path, t + dt);
                const std::vector<double> vals = obs.evaluate(u);
                for (std::size_t k = 0; k < n_obs; ++k) {
                    acc[k] += vals[k];
                    all_samples[k].push_back(vals[k]);
                }
                ++count;
            }
        }
        for (std::size_t k = 0; k < n_obs; ++k)
            seed_means[k].push_back(acc[k] / static_cast<double>(count));
    }

    for (std::size_t k = 0; k < n_obs; ++k) {
        ObservableStats st;
        st.name = obs.names[k];
        st.per_seed_mean = seed_means[k];
        double m = 0.0;
        for (double x : seed_means[k]) m += x;
        m /= static_cast<double>(seed_means[k].size());
        st.mean = m;
        double var = 0.0;
        for (double x : seed_means[k]) var += (x - m) * (x - m);
        const std::size_t ns = seed_means[k].size();
        st.std_error = ns > 1 ? std::sqrt(var / (static_cast<double>(ns) * (ns - 1))) : 0.0;
        // fixed binning over the observed range, edges recorded in the output
        const auto [lo_it, hi_it] = std::minmax_element(all_samples[k].begin(),
                                                        all_samples[k].end());
        double lo = *lo_it, hi = *hi_it;
        if (hi <= lo) hi = lo + 1.0;
        st.hist_edges.resize(hist_bins + 1);
        st.hist_counts.assign(hist_bins, 0);
        for (int b = 0; b <= hist_bins; ++b)
            st.hist_edges[b] = lo + (hi - lo) * b / static_cast<double>(hist_bins);
        for (double x : all_samples[k]) {
            int b = static_cast<int>((x - lo) / (hi - lo) * hist_bins);
            b = std::clamp(b, 0, hist_bins - 1);
            ++st.hist_counts[b];
        }
        em.observables.push_back(std::move(st));
    }
    return em;
}

CouplingReport coupling_decay(Model& model, std::uint64_t seed, const VelocityField& u10,
                              const VelocityField& u20, double T, double dt, double lam1,
                              double slack_c) {
    CouplingReport rep;
    rep.slack_c = slack_c;
    OUPath path;
    if (model.noise().kind != NoiseKind::none)
        path = sample_ou_path(seed, model.noise(), 0.0, T, dt);
    const NoiseState ns0 = model.noise_state(path, 0.0);
    VelocityField v1 = axpy(u10, -1.0, ns0.z);
    VelocityField v2 = axpy(u20, -1.0, ns0.z);
    const PhysicsParams& p = model.params();
    const double rate = p.mu * lam1 + 2.0 * p.alpha;

    const double x0 = inner_face(axpy(v1, -1.0, v2), axpy(v1, -1.0, v2));
    rep.t.push_back(0.0);
    rep.diff_sq.push_back(x0);
    rep.budget.push_back(x0 > 0.0 ? std::log(x0) : -std::numeric_limits<double>::infinity());
    if (x0 == 0.0) {
        // identical starts stay identical; the series is exactly zero
        const long long nsteps = std::llround(T / dt);
        for (long long n = 1; n <= nsteps; ++n) {
            rep.t.push_back(static_cast<double>(n) * dt);
            rep.diff_sq.push_back(0.0);
            rep.budget.push_back(-std::numeric_limits<double>::infinity());
        }
        rep.rate_defined = false;
        return rep;
    }

    double grad_integral = 0.0;
    const long long nsteps = std::llround(T / dt);
    const VelocityField u1_0 = model.reconstruct_u(v1, path, 0.0);
    double prev_u1V2 = norm_V(u1_0) * norm_V(u1_0);
    double running_scale = norm_face(u1_0) + norm_face(axpy(u1_0, -1.0, axpy(v1, -1.0, v2)));
    std::vector<bool> above_floor(1, true);
    for (long long n = 0; n < nsteps; ++n) {
        const double t = static_cast<double>(n) * dt;
        v1 = model.step(v1, path, t, dt);
        v2 = model.step(v2, path, t, dt);
        const double tn = t + dt;
        const VelocityField u1 = model.reconstruct_u(v1, path, tn);
        const double u1V2 = norm_V(u1) * norm_V(u1);
        grad_integral += 0.5 * dt * (prev_u1V2 + u1V2);
        prev_u1V2 = u1V2;
        const VelocityField diff = axpy(v1, -1.0, v2);
        const double x = inner_face(diff, diff);
        const double budget =
            std::log(x0) - rate * tn + (2.0 / p.mu) * grad_integral + slack_c * dt * tn;
        rep.t.push_back(tn);
        rep.diff_sq.push_back(x);
        rep.budget.push_back(budget);
        // the pathwise bound can only be asserted above the rounding floor;
        // accumulated rounding noise scales with the largest state seen so far
        running_scale = std::max(running_scale, norm_face(u1));
        const double floor_n = 1e-12 * (running_scale + 1e-300);
        const bool usable = x > floor_n * floor_n;
        above_floor.push_back(usable);
        if (usable && std::log(x) > budget) ++rep.violations;
    }
    // least-squares slope of log X^2 over t (above the floor only)
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
        if (rep.diff_sq[i] <= 0.0 || !above_floor[i]) continue;
        const double lx = std::log(rep.diff_sq[i]);
        sx += rep.t[i];
        sy += lx;
        sxx += rep.t[i] * rep.t[i];
        sxy += rep.t[i] * lx;
        ++m;
    }
    if (m >= 2) {
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        if (denom > 0.0) {
            rep.fitted_rate = (static_cast<double>(m) * sxy - sx * sy) / denom;
            rep.rate_defined = true;
        }
    }
    return rep;
}

ExpMomentReport exp_moment_check(Model& model, const std::vector<std::uint64_t>& seeds, double eps,
                                 double T, double dt, const VelocityField& u0) {
    ExpMomentReport rep;
    rep.eps = eps;
    const PhysicsParams& p = model.params();
    // face norms throughout: the metric in which the discrete energy
    // identity is exact
    double trace = 0.0;
    for (const auto& m : model.noise().modes) {
        const double gH = norm_face(m.profile);
        trace += m.sigma * m.sigma * gH * gH;
    }
    rep.trace = trace;
    const double u0H = norm_face(u0);
    const double fH = norm_face(model.forcing());
    const double fterm = p.alpha > 0.0 ? (T / p.alpha) * fH * fH : 0.0;
    const double bound_exponent = eps * (u0H * u0H + fterm + T * trace);
    if (bound_exponent > 500.0)
        throw std::invalid_argument("exp_moment_check: eps too large (bound overflows); "
                                    "reduce eps");
    rep.bound = std::exp(bound_exponent);
    if (eps == 0.0) {
        rep.lhs = 1.0;
        rep.pass = true;
        return rep;
    }

    std::vector<double> vals;
    for (std::uint64_t seed : seeds) {
        OUPath path;
        if (model.noise().kind != NoiseKind::none)
            path = sample_ou_path(seed, model.noise(), 0.0, T, dt);
        const NoiseState ns0 = model.noise_state(path, 0.0);
        VelocityField v = axpy(u0, -1.0, ns0.z);
        double grad_integral = 0.0;
        const long long nsteps = std::llround(T / dt);
        double prev_uV2 = norm_V(u0) * norm_V(u0);
        for (long long n = 0; n < nsteps; ++n) {
            const double t = static_cast<double>(n) * dt;
            v = model.step(v, path, t, dt);
            const VelocityField u = model.reconstruct_u(v, path, t + dt);
            const double uV2 = norm_V(u) * norm_V(u);
            grad_integral += 0.5 * dt * (prev_uV2 + uV2);
            prev_uV2 = uV2;
        }
        const VelocityField uT = model.reconstruct_u(v, path, T);
        const double uH = norm_face(uT);
        const double expo = eps * (uH * uH + p.mu * grad_integral);
        if (expo > 500.0)
            throw std::invalid_argument("exp_moment_check: sample overflows exp; reduce eps");
        vals.push_back(std::exp(expo));
    }
    double m = 0.0;
    for (double x : vals) m += x;
    m /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double x : vals) var += (x - m) * (x - m);
    rep.lhs = m;
    rep.lhs_se = vals.size() > 1
                     ? std::sqrt(var / (static_cast<double>(vals.size()) * (vals.size() - 1)))
                     : 0.0;
    const double ci = rep.lhs_se > 0.0 ? 3.0 * rep.lhs_se / rep.lhs : 0.0;
    rep.pass = rep.lhs <= rep.bound * (1.0 + ci);
    return rep;
}

UniquenessCondition uniqueness_condition(const Model& model, double lam1) {
    UniquenessCondition c;
    const PhysicsParams& p = model.params();
    double trace = 0.0, max_mode = 0.0;
    for (const auto& m : model.noise().modes) {
        const double gH = norm_face(m.profile);
        trace += m.sigma * m.sigma * gH * gH;
        max_mode = std::max(max_mode, m.sigma * m.sigma * gH * gH);
    }
    const double fH = norm_face(model.forcing());
    c.lhs = (p.alpha > 0.0 ? 2.0 / (p.mu * p.mu * p.alpha) * fH * fH : 0.0) +
            2.0 / (p.mu * p.mu) * trace;
    c.rhs = p.mu * lam1 + 2.0 * p.alpha;
    c.condition_holds = c.lhs <= c.rhs;
    // operator-norm condition with the computable dominating quantity
    c.side_condition_holds =
        max_mode == 0.0 || (2.0 / (p.mu * p.mu) <= p.alpha / (2.0 * max_mode));
    return c;
}

void write_measure_csv(const std::string& path, const EmpiricalMeasure& em) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_measure_csv: cannot open " + path);
    os.precision(17);
    os << "observable,seed,time_average\n";
    for (const auto& st : em.observables)
        for (std::size_t i = 0; i < st.per_seed_mean.size(); ++i)
            os << st.name << "," << em.seeds[i] << "," << st.per_seed_mean[i] << "\n";
}

std::string measure_summary_json(const EmpiricalMeasure& em) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"burn_in\":" << em.burn_in << ",\"horizon\":" << em.horizon << ",\"dt\":" << em.dt
       << ",\"observables\":[";
    for (std::size_t k = 0; k < em.observables.size(); ++k) {
        const auto& st = em.observables[k];
        if (k) os << ",";
        os << "{\"name\":\"" << st.name << "\",\"mean\":" << st.mean
           << ",\"std_error\":" << st.std_error << ",\"hist_edges\":[";
        for (std::size_t b = 0; b < st.hist_edges.size(); ++b)
            os << (b ? "," : "") << st.hist_edges[b];
        os << "],\"hist_counts\":[";
        for (std::size_t b = 0; b < st.hist_counts.size(); ++b)
            os << (b ? "," : "") << st.hist_counts[b];
        os << "]}";
    }
    os << "]}";
    return os.str();
}

} // namespace scbf

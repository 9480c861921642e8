#include "scbf/solver.hpp"
#include "scbf/rds.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbf {

void PhysicsParams::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("PhysicsParams: mu must be > 0");
    if (alpha < 0.0) throw std::invalid_argument("PhysicsParams: alpha must be >= 0");
    if (beta < 0.0) throw std::invalid_argument("PhysicsParams: beta must be >= 0");
    if (r < 1.0) throw std::invalid_argument("PhysicsParams: r must be >= 1");
    if (cfl_factor <= 0.0) throw std::invalid_argument("PhysicsParams: cfl_factor must be > 0");
}

Model::Model(const DomainSpec& d, const PhysicsParams& p, const NoiseSpec& base_noise,
             VelocityField f, double poisson_tol)
    : dom_(d), params_(p), ws_(d, poisson_tol) {
    params_.validate();
    base_noise.validate();
    noise_.kind = base_noise.kind;
    for (const auto& m : base_noise.modes) {
        NoiseMode local = m;
        if (!m.profile.domain.same_grid(d)) local.profile = restrict_to(m.profile, d);
        local.profile = ws_.project(local.profile);
        noise_.modes.push_back(std::move(local));
    }
    if (noise_.kind == NoiseKind::scalar_ou)
        for (const auto& m : noise_.modes)
            lap_g_.push_back(ws_.project(stencil::laplacian(m.profile)));
    if (f.empty()) {
        f_ = VelocityField(d);
    } else {
        if (!f.domain.same_grid(d)) f = restrict_to(f, d);
        f_ = ws_.project(f);  // contract: forcing divergence-free after one pass
    }
}

NoiseState Model::noise_state(const OUPath& path, double t) const {
    NoiseState ns;
    ns.z = VelocityField(dom_);
    ns.drift = VelocityField(dom_);
    if (noise_.kind == NoiseKind::none) return ns;
    if (path.n_modes() != noise_.n_modes())
        throw std::invalid_argument("noise_state: path and spec mode counts differ");
    for (std::size_t k = 0; k < noise_.n_modes(); ++k) {
        const double yk = path.value(k, t);
        ns.y.push_back(yk);
        const double c = noise_.modes[k].sigma * yk;
        ns.z = axpy(ns.z, c, noise_.modes[k].profile);
        if (noise_.kind == NoiseKind::scalar_ou) {
            // (ell_k - alpha) sigma_k y_k g_k + mu sigma_k y_k P(lap g_k)
            ns.drift = axpy(ns.drift, c * (noise_.modes[k].eta - params_.alpha),
                            noise_.modes[k].profile);
            ns.drift = axpy(ns.drift, c * params_.mu, lap_g_[k]);
        }
    }
    if (noise_.kind == NoiseKind::stokes_ou)
        ns.drift = axpy(ns.drift, params_.eta - params_.alpha, ns.z);
    return ns;
}

VelocityField Model::explicit_terms(const VelocityField& w, const NoiseState& ns, double dt,
                                    int* cfl_warn) const {
    const double maxw = max_speed(w);
    if (params_.advection && maxw > 0.0) {
        const double dt_max = dom_.spacing / (params_.cfl_factor * maxw);
        if (dt > dt_max) {
            if (params_.cfl_mode == CflMode::reject) {
                std::ostringstream os;
                os << "step: advection CFL guard violated (dt = " << dt << " > " << dt_max << ")";
                throw std::runtime_error(os.str());
            }
            if (cfl_warn) ++(*cfl_warn);
        }
    }
    VelocityField e(dom_);
    if (params_.advection) e = axpy(e, -1.0, skew_advection(w, w));
    if (params_.beta > 0.0) {
        // explicit damping, sub-stepped when dt beta max|w|^{r-1} > 1/2
        const double guard = dt * params_.beta *
                             (params_.r > 1.0 ? std::pow(maxw, params_.r - 1.0) : 1.0);
        const int nsub = std::max(1, static_cast<int>(std::ceil(2.0 * guard)));
        if (nsub == 1) {
            e = axpy(e, -params_.beta, damping_raw(w, params_.r));
        } else {
            VelocityField wp = w;
            const double sub = dt / nsub;
            for (int k = 0; k < nsub; ++k)
                wp = axpy(wp, -sub * params_.beta, damping_raw(wp, params_.r));
            e = axpy(e, 1.0 / dt, axpy(wp, -1.0, w));
        }
    }
    e = axpy(e, 1.0, f_);
    e = axpy(e, 1.0, ns.drift);
    return e;
}

VelocityField Model::rhs_v(const VelocityField& v, const NoiseState& ns) const {
    const VelocityField w = axpy(v, 1.0, ns.z);
    VelocityField out = stencil::laplacian(v);
    for (double& a : out.ux) a *= params_.mu;
    for (double& a : out.uy) a *= params_.mu;
    if (params_.advection) out = axpy(out, -1.0, skew_advection(w, w));
    out = axpy(out, -params_.alpha, v);
    if (params_.beta > 0.0) out = axpy(out, -params_.beta, damping_raw(w, params_.r));
    out = axpy(out, 1.0, f_);
    out = axpy(out, 1.0, ns.drift);
    return ws_.project(out);
}

VelocityField Model::step(const VelocityField& v, const OUPath& path, double t, double dt,
                          TrajectoryRecord* rec) const {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    const NoiseState ns = noise_state(path, t);
    const VelocityField w = axpy(v, 1.0, ns.z);
    int warn = 0;
    const VelocityField e = explicit_terms(w, ns, dt, &warn);
    if (rec) rec->cfl_warnings += warn;
    const double denom = 1.0 + params_.alpha * dt;
    VelocityField rhs = axpy(v, dt, e);
    for (double& a : rhs.ux) a /= denom;
    for (double& a : rhs.uy) a /= denom;
    const VelocityField vstar = ws_.implicit_diffusion_solve(rhs, dt * params_.mu / denom);
    return ws_.project(vstar);
}

TrajectoryRecord Model::integrate(const VelocityField& v0, const OUPath& path_in, double t0,
                                  double t1, double dt,
                                  const RecordOptions& opts) const {
    if (!(t1 > t0)) throw std::invalid_argument("integrate: empty time interval");
    const long long nsteps = std::llround((t1 - t0) / dt);
    if (std::abs(nsteps * dt - (t1 - t0)) > 1e-9 * std::max(1.0, t1 - t0))
        throw std::invalid_argument("integrate: (t1 - t0) must be a multiple of dt");
    const OUPath path =
        noise_.kind == NoiseKind::none ? path_in : ensure_window(path_in, t0, t1);
    TrajectoryRecord rec;
    VelocityField v = v0;

    auto want_snapshot = [&](double t) {
        for (double ts : opts.snapshot_times)
            if (std::abs(ts - t) <= 0.5 * dt) return true;
        return false;
    };
    auto record_state = [&](double t, const VelocityField& vv, double eres) {
        const NoiseState ns = noise_state(path, t);
        const VelocityField u = axpy(vv, 1.0, ns.z);
        rec.t.push_back(t);
        rec.v_H.push_back(norm_H(vv));
        rec.v_V.push_back(norm_V(vv));
        rec.v_Hf.push_back(norm_face(vv));
        rec.u_H.push_back(norm_H(u));
        rec.u_Hf.push_back(norm_face(u));
        rec.w_Lr1.push_back(norm_Lp(u, params_.r + 1.0));
        rec.energy_res.push_back(eres);
        if (opts.tail_k > 0.0) rec.tail.push_back(tail_mass(u, opts.tail_k).smooth);
        if (opts.vledger) {
            rec.Av_f.push_back(norm_face(ws_.stokes_apply(vv)));
            rec.z_Hf.push_back(norm_face(ns.z));
            rec.z_V.push_back(norm_V(ns.z));
            rec.Az_f.push_back(norm_face(ws_.stokes_apply(ns.z)));
            rec.v_H_center_sq.push_back(norm_H(vv) * norm_H(vv));
        }
        rec.y0.push_back(ns.y.empty() ? 0.0 : ns.y[0]);
        if (want_snapshot(t)) rec.snapshots.emplace_back(t, u);
    };

    record_state(t0, v, 0.0);
    for (long long n = 0; n < nsteps; ++n) {
        const double t = t0 + static_cast<double>(n) * dt;
        const NoiseState ns = noise_state(path, t);
        const VelocityField w = axpy(v, 1.0, ns.z);
        const VelocityField e = explicit_terms(w, ns, dt, &rec.cfl_warnings);
        const double denom = 1.0 + params_.alpha * dt;
        VelocityField rhs = axpy(v, dt, e);
        for (double& a : rhs.ux) a /= denom;
        for (double& a : rhs.uy) a /= denom;
        const VelocityField vstar = ws_.implicit_diffusion_solve(rhs, dt * params_.mu / denom);
        VelocityField vn1 = ws_.project(vstar);

        double eres = 0.0;
        if (opts.ledger) {
            // discrete energy equality at the scheme's consistent time level:
            // quadratic terms at the implicit stage, explicit terms as the
            // step used them. The residual is then the numerical dissipation
            // of the step (plus rounding), O(dt^2) per step.
            const double a2 = inner_face(vn1, vn1);
            const double b2 = inner_face(v, v);
            const double nvV = norm_V(vstar);
            eres = a2 - b2 +
                   2.0 * dt *
                       (params_.mu * nvV * nvV + params_.alpha * inner_face(vstar, vstar) -
                        inner_face(e, vstar));
        }

        const double check = inner_face(vn1, vn1);
        if (!std::isfinite(check)) {
            std::ostringstream os;
            os << "integrate: non-finite state at step " << (n + 1) << " (t = " << (t + dt) << ")";
            throw std::runtime_error(os.str());
        }
        v = std::move(vn1);
        const bool last = (n + 1 == nsteps);
        if ((n + 1) % opts.stride == 0 || last) record_state(t + dt, v, eres);
    }
    return rec;
}

VelocityField Model::reconstruct_u(const VelocityField& v, const OUPath& path, double t) const {
    const NoiseState ns = noise_state(path, t);
    return axpy(v, 1.0, ns.z);
}

NoiseSpec make_stokes_noise(OperatorWorkspace& ws, int k_modes, double sigma, double eta_shift,
                            double mu) {
    if (!(eta_shift > 0.0))
        throw std::invalid_argument("make_stokes_noise: eta shift must be > 0");
    const StokesEigenResult eig = ws.smallest_stokes_eigenpairs(k_modes);
    NoiseSpec spec;
    spec.kind = NoiseKind::stokes_ou;
    for (int k = 0; k < k_modes; ++k) {
        NoiseMode m;
        m.profile = eig.fields[k];
        m.sigma = sigma;
        m.eta = mu * eig.values[k] + eta_shift;
        spec.modes.push_back(std::move(m));
    }
    return spec;
}

const std::vector<double>& energy_ledger(const TrajectoryRecord& rec) {
    return rec.energy_res;
}

double energy_ledger_total(const TrajectoryRecord& rec) {
    double s = 0.0;
    for (double r : rec.energy_res) s += std::abs(r);
    return s;
}

VLedgerReport v_ledger(const TrajectoryRecord& rec, double dt, double C, double r, double f_Hf) {
    if (r > 3.0)
        throw std::invalid_argument("v_ledger: disabled for r > 3 (no gradient-level estimate)");
    if (rec.Av_f.empty())
        throw std::invalid_argument("v_ledger: record was made without vledger inputs");
    VLedgerReport rep;
    const bool critical = (r == 3.0);
    for (std::size_t n = 0; n + 1 < rec.size(); ++n) {
        const double vV0 = rec.v_V[n], vV1 = rec.v_V[n + 1];
        const double lhs = (vV1 * vV1 - vV0 * vV0) / dt + rec.Av_f[n + 1] * rec.Av_f[n + 1];
        const double vH2 = rec.v_Hf[n] * rec.v_Hf[n];
        const double zV = rec.z_V[n], zH = rec.z_Hf[n], az = rec.Az_f[n];
        double Q = vH2 * vV0 * vV0 + zH * az;
        if (critical) Q += vH2 * vV0 * vV0;
        double Qt = vH2 * std::pow(zV, 4.0) + az * std::pow(zV, 3.0) +
                    std::pow(zV, critical ? 6.0 : 2.0 * r) + zV * zV + f_Hf * f_Hf;
        if (!critical) Qt += vH2;
        const double rhs = Q * vV0 * vV0 + Qt;
        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        if (rhs > 0.0) rep.fitted_C = std::max(rep.fitted_C, lhs / rhs);
        if (lhs > C * rhs) ++rep.violations;
    }
    return rep;
}

ScalarField pressure_recover(OperatorWorkspace& ws, const VelocityField& w,
                             const PhysicsParams& params) {
    const DomainSpec& d = w.domain;
    const int nx = d.nx, ny = d.ny;
    const double h = d.spacing;
    // conservative momentum flux divergence at faces
    VelocityField G(d);
    auto wx = [&](int i, int j) -> double {
        if (j < 0) return -w.x(i, 0);
        if (j >= ny) return -w.x(i, ny - 1);
        return w.x(i, j);
    };
    auto wy = [&](int i, int j) -> double {
        if (i < 0) return -w.y(0, j);
        if (i >= nx) return -w.y(nx - 1, j);
        return w.y(i, j);
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double ucl = 0.5 * (w.x(i - 1, j) + w.x(i, j));
            const double ucr = 0.5 * (w.x(i, j) + w.x(i + 1, j));
            const double d_uu = (ucr * ucr - ucl * ucl) / h;
            const double u_t = 0.5 * (wx(i, j) + wx(i, j + 1));
            const double v_t = 0.5 * (wy(i - 1, j + 1) + wy(i, j + 1));
            const double u_b = 0.5 * (wx(i, j - 1) + wx(i, j));
            const double v_b = 0.5 * (wy(i - 1, j) + wy(i, j));
            const double d_uv = (u_t * v_t - u_b * v_b) / h;
            G.x(i, j) = d_uu + d_uv;
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double vcb = 0.5 * (w.y(i, j - 1) + w.y(i, j));
            const double vct = 0.5 * (w.y(i, j) + w.y(i, j + 1));
            const double d_vv = (vct * vct - vcb * vcb) / h;
            const double u_r = 0.5 * (wx(i + 1, j - 1) + wx(i + 1, j));
            const double v_r = 0.5 * (wy(i, j) + wy(i + 1, j));
            const double u_l = 0.5 * (wx(i, j - 1) + wx(i, j));
            const double v_l = 0.5 * (wy(i - 1, j) + wy(i, j));
            const double d_uv = (u_r * v_r - u_l * v_l) / h;
            G.y(i, j) = d_vv + d_uv;
        }
    if (params.beta > 0.0) G = axpy(G, params.beta, damping_raw(w, params.r));
    ScalarField rhs = stencil::divergence(G);
    for (double& a : rhs.values) a = -a;
    return ws.solve_poisson_neumann(rhs);
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    os.precision(17);
    os << "t,v_H,v_V,v_Hface,u_H,u_Hface,w_Lr1,energy_residual,y0";
    const bool tail = !rec.tail.empty();
    if (tail) os << ",tail_mass";
    os << "\n";
    for (std::size_t n = 0; n < rec.size(); ++n) {
        os << rec.t[n] << "," << rec.v_H[n] << "," << rec.v_V[n] << "," << rec.v_Hf[n] << ","
           << rec.u_H[n] << "," << rec.u_Hf[n] << "," << rec.w_Lr1[n] << "," << rec.energy_res[n]
           << "," << rec.y0[n];
        if (tail) os << "," << rec.tail[n];
        os << "\n";
    }
}

} // namespace scbf

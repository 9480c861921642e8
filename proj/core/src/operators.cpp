#include "scbf/operators.hpp"
#include "scbf/rng.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace scbf {

// ---------------------------------------------------------------------------
// Stencils
// ---------------------------------------------------------------------------

namespace stencil {

ScalarField divergence(const VelocityField& v) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    const double h = v.domain.spacing;
    ScalarField d(v.domain);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            d.at(i, j) = (v.x(i + 1, j) - v.x(i, j) + v.y(i, j + 1) - v.y(i, j)) / h;
    return d;
}

VelocityField gradient(const ScalarField& phi) {
    const int nx = phi.domain.nx, ny = phi.domain.ny;
    const double h = phi.domain.spacing;
    VelocityField g(phi.domain);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            g.x(i, j) = (phi.at(i, j) - phi.at(i - 1, j)) / h;
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            g.y(i, j) = (phi.at(i, j) - phi.at(i, j - 1)) / h;
    return g;
}

VelocityField laplacian(const VelocityField& v) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    const double h2 = v.domain.cell_area();
    VelocityField out(v.domain);
    // ux: Dirichlet pinned columns i = 0, nx; reflected ghosts across y walls
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double c = v.x(i, j);
            const double xm = v.x(i - 1, j), xp = v.x(i + 1, j);
            const double ym = (j > 0) ? v.x(i, j - 1) : -c;
            const double yp = (j + 1 < ny) ? v.x(i, j + 1) : -c;
            out.x(i, j) = (xm + xp + ym + yp - 4.0 * c) / h2;
        }
    // uy: Dirichlet pinned rows j = 0, ny; reflected ghosts across x walls
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = v.y(i, j);
            const double ym = v.y(i, j - 1), yp = v.y(i, j + 1);
            const double xm = (i > 0) ? v.y(i - 1, j) : -c;
            const double xp = (i + 1 < nx) ? v.y(i + 1, j) : -c;
            out.y(i, j) = (xm + xp + ym + yp - 4.0 * c) / h2;
        }
    return out;
}

} // namespace stencil

// ---------------------------------------------------------------------------
// Center-space advection machinery
// ---------------------------------------------------------------------------

namespace {

struct CenterView {
    int nx, ny;
    std::vector<double> ax, ay;  // interpolated components at centers
};

CenterView interp_centers(const VelocityField& v) {
    CenterView c;
    c.nx = v.domain.nx;
    c.ny = v.domain.ny;
    to_centers(v, c.ax, c.ay);
    return c;
}

/// Center gradients of both staggered components. dxvx is exact (compact);
/// the cross derivatives use 4-point averages with no-slip ghost reflection.
struct CenterGrad {
    std::vector<double> dxvx, dyvx, dxvy, dyvy;
};

CenterGrad center_gradients(const VelocityField& v) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    const double h = v.domain.spacing;
    CenterGrad g;
    g.dxvx.resize(v.domain.n_cells());
    g.dyvx.resize(v.domain.n_cells());
    g.dxvy.resize(v.domain.n_cells());
    g.dyvy.resize(v.domain.n_cells());
    auto vx = [&](int i, int j) -> double {
        // ghost reflection across y walls
        if (j < 0) return -v.x(i, 0);
        if (j >= ny) return -v.x(i, ny - 1);
        return v.x(i, j);
    };
    auto vy = [&](int i, int j) -> double {
        // ghost reflection across x walls
        if (i < 0) return -v.y(0, j);
        if (i >= nx) return -v.y(nx - 1, j);
        return v.y(i, j);
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j) * nx + i;
            g.dxvx[c] = (v.x(i + 1, j) - v.x(i, j)) / h;
            g.dyvx[c] =
                (vx(i, j + 1) + vx(i + 1, j + 1) - vx(i, j - 1) - vx(i + 1, j - 1)) / (4.0 * h);
            g.dyvy[c] = (v.y(i, j + 1) - v.y(i, j)) / h;
            g.dxvy[c] =
                (vy(i + 1, j) + vy(i + 1, j + 1) - vy(i - 1, j) - vy(i - 1, j + 1)) / (4.0 * h);
        }
    return g;
}

/// t(a, v, w) = h^2 sum_c (a_c . grad v)_c . w_c
double advect_form(const CenterView& a, const CenterGrad& gv, const CenterView& w, double h2) {
    double s = 0.0;
    const std::size_t n = a.ax.size();
    for (std::size_t c = 0; c < n; ++c) {
        const double gx = a.ax[c] * gv.dxvx[c] + a.ay[c] * gv.dyvx[c];
        const double gy = a.ax[c] * gv.dxvy[c] + a.ay[c] * gv.dyvy[c];
        s += gx * w.ax[c] + gy * w.ay[c];
    }
    return h2 * s;
}

/// Adjoint of the center interpolation: faces <- centers, half to each
/// neighbor cell. Boundary faces stay zero.
void interp_adjoint(const DomainSpec& d, const std::vector<double>& cx,
                    const std::vector<double>& cy, VelocityField& out, double w) {
    const int nx = d.nx, ny = d.ny;
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const std::size_t cl = static_cast<std::size_t>(j) * nx + (i - 1);
            const std::size_t cr = static_cast<std::size_t>(j) * nx + i;
            out.x(i, j) += w * 0.5 * (cx[cl] + cx[cr]);
        }
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t cb = static_cast<std::size_t>(j - 1) * nx + i;
            const std::size_t ct = static_cast<std::size_t>(j) * nx + i;
            out.y(i, j) += w * 0.5 * (cy[cb] + cy[ct]);
        }
}

/// Adjoint of w -> t(a, w, v): scatter the center coefficient fields through
/// the transposed gradient stencils (ghost taps fold back with a sign flip).
void advect_adjoint(const DomainSpec& d, const CenterView& a, const CenterView& vc,
                    VelocityField& out, double w) {
    const int nx = d.nx, ny = d.ny;
    const double h = d.spacing;
    auto cell = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
    // coefficients of Dx(wx) and Dy(wx): cxx = ax * Ivx, cyx = ay * Ivx
    // x-faces, compact Dx part: face i gets (cxx(i-1) - cxx(i))/h
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const double cl = a.ax[cell(i - 1, j)] * vc.ax[cell(i - 1, j)];
            const double cr = a.ax[cell(i, j)] * vc.ax[cell(i, j)];
            out.x(i, j) += w * (cl - cr) / h;
        }
    // x-faces, wide Dy part
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double coef = w * a.ay[cell(i, j)] * vc.ax[cell(i, j)] / (4.0 * h);
            for (int tap = 0; tap < 4; ++tap) {
                const int di = (tap == 0 || tap == 2) ? 0 : 1;
                int jj = (tap < 2) ? j + 1 : j - 1;
                double sgn = (tap < 2) ? 1.0 : -1.0;
                if (jj < 0) { jj = 0; sgn = -sgn; }
                if (jj >= ny) { jj = ny - 1; sgn = -sgn; }
                const int fi = i + di;
                if (fi >= 1 && fi <= nx - 1) out.x(fi, jj) += sgn * coef;
            }
        }
    // y-faces, compact Dy part: face j gets (cyy(j-1) - cyy(j))/h
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double cb = a.ay[cell(i, j - 1)] * vc.ay[cell(i, j - 1)];
            const double ct = a.ay[cell(i, j)] * vc.ay[cell(i, j)];
            out.y(i, j) += w * (cb - ct) / h;
        }
    // y-faces, wide Dx part
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double coef = w * a.ax[cell(i, j)] * vc.ay[cell(i, j)] / (4.0 * h);
            for (int tap = 0; tap < 4; ++tap) {
                const int dj = (tap == 0 || tap == 2) ? 0 : 1;
                int ii = (tap < 2) ? i + 1 : i - 1;
                double sgn = (tap < 2) ? 1.0 : -1.0;
                if (ii < 0) { ii = 0; sgn = -sgn; }
                if (ii >= nx) { ii = nx - 1; sgn = -sgn; }
                const int fj = j + dj;
                if (fj >= 1 && fj <= ny - 1) out.y(ii, fj) += sgn * coef;
            }
        }
}

void check_same_grid(const VelocityField& a, const VelocityField& b, const char* who) {
    if (!a.domain.same_grid(b.domain))
        throw std::invalid_argument(std::string(who) + ": fields live on different grids");
}

} // namespace

double trilinear_raw(const VelocityField& u, const VelocityField& v, const VelocityField& w) {
    check_same_grid(u, v, "trilinear");
    check_same_grid(u, w, "trilinear");
    const CenterView a = interp_centers(u);
    const CenterGrad gv = center_gradients(v);
    const CenterView wc = interp_centers(w);
    return advect_form(a, gv, wc, u.domain.cell_area());
}

double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w) {
    check_same_grid(u, v, "trilinear");
    check_same_grid(u, w, "trilinear");
    const double h2 = u.domain.cell_area();
    const CenterView a = interp_centers(u);
    const CenterView vc = interp_centers(v);
    const CenterView wc = interp_centers(w);
    const CenterGrad gv = center_gradients(v);
    const CenterGrad gw = center_gradients(w);
    const double t_vw = advect_form(a, gv, wc, h2);
    const double t_wv = advect_form(a, gw, vc, h2);
    return 0.5 * (t_vw - t_wv);
}

VelocityField skew_advection(const VelocityField& a, const VelocityField& v) {
    check_same_grid(a, v, "skew_advection");
    const CenterView ac = interp_centers(a);
    const CenterView vc = interp_centers(v);
    const CenterGrad gv = center_gradients(v);
    const std::size_t n = ac.ax.size();
    std::vector<double> g1x(n), g1y(n);
    for (std::size_t c = 0; c < n; ++c) {
        g1x[c] = ac.ax[c] * gv.dxvx[c] + ac.ay[c] * gv.dyvx[c];
        g1y[c] = ac.ax[c] * gv.dxvy[c] + ac.ay[c] * gv.dyvy[c];
    }
    VelocityField out(a.domain);
    interp_adjoint(a.domain, g1x, g1y, out, 0.5);
    advect_adjoint(a.domain, ac, vc, out, -0.5);
    out.zero_boundary();
    return out;
}

VelocityField damping_raw(const VelocityField& w, double r) {
    if (r < 1.0) throw std::invalid_argument("damping: r must be >= 1");
    const CenterView c = interp_centers(w);
    const std::size_t n = c.ax.size();
    std::vector<double> sx(n), sy(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double mag = std::sqrt(c.ax[k] * c.ax[k] + c.ay[k] * c.ay[k]);
        const double f = (r == 1.0) ? 1.0 : (mag > 0.0 ? std::pow(mag, r - 1.0) : 0.0);
        sx[k] = f * c.ax[k];
        sy[k] = f * c.ay[k];
    }
    VelocityField out(w.domain);
    interp_adjoint(w.domain, sx, sy, out, 1.0);
    out.zero_boundary();
    return out;
}

VelocityField damping_prime_raw(const VelocityField& w, const VelocityField& d, double r) {
    if (r < 1.0) throw std::invalid_argument("damping: r must be >= 1");
    check_same_grid(w, d, "damping_prime");
    if (r == 1.0) return d;
    const CenterView cw = interp_centers(w);
    const CenterView cd = interp_centers(d);
    const std::size_t n = cw.ax.size();
    std::vector<double> sx(n, 0.0), sy(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double ux = cw.ax[k], uy = cw.ay[k];
        const double mag = std::sqrt(ux * ux + uy * uy);
        if (mag == 0.0) continue;  // derivative branch at u = 0 is zero for r > 1
        const double dot = ux * cd.ax[k] + uy * cd.ay[k];
        const double fr1 = std::pow(mag, r - 1.0);
        const double fr3 = std::pow(mag, r - 3.0);
        sx[k] = fr1 * cd.ax[k] + (r - 1.0) * fr3 * ux * dot;
        sy[k] = fr1 * cd.ay[k] + (r - 1.0) * fr3 * uy * dot;
    }
    VelocityField out(w.domain);
    interp_adjoint(w.domain, sx, sy, out, 1.0);
    out.zero_boundary();
    return out;
}

// ---------------------------------------------------------------------------
// Workspace: direct DCT/DST solves
// ---------------------------------------------------------------------------

namespace {
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

struct OperatorWorkspace::Plans {
    fftw_plan poisson_fwd = nullptr, poisson_inv = nullptr;
    fftw_plan hx_fwd = nullptr, hx_inv = nullptr;
    fftw_plan hy_fwd = nullptr, hy_inv = nullptr;
    std::vector<double> cells_a, cells_b;  // nx*ny
    std::vector<double> x_a, x_b;          // (nx-1)*ny
    std::vector<double> y_a, y_b;          // nx*(ny-1)
    std::vector<double> lam_x, lam_y;      // (4/h^2) sin^2(pi k / (2 n)), k = 1..n

    ~Plans() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        for (fftw_plan p : {poisson_fwd, poisson_inv, hx_fwd, hx_inv, hy_fwd, hy_inv})
            if (p) fftw_destroy_plan(p);
    }
};

OperatorWorkspace::OperatorWorkspace(const DomainSpec& d, double poisson_tol, int max_iters)
    : dom_(d), tol_(poisson_tol), max_iters_(max_iters), plans_(new Plans) {
    if (d.nx < 2 || d.ny < 2)
        throw std::invalid_argument("OperatorWorkspace: grid must be at least 2x2 cells");
    if (!(tol_ > 0.0)) throw std::invalid_argument("OperatorWorkspace: poisson_tol must be > 0");
    const int nx = d.nx, ny = d.ny;
    const double h2 = d.cell_area();
    constexpr double pi = 3.14159265358979323846;
    plans_->cells_a.resize(d.n_cells());
    plans_->cells_b.resize(d.n_cells());
    plans_->x_a.resize(static_cast<std::size_t>(nx - 1) * ny);
    plans_->x_b.resize(static_cast<std::size_t>(nx - 1) * ny);
    plans_->y_a.resize(static_cast<std::size_t>(nx) * (ny - 1));
    plans_->y_b.resize(static_cast<std::size_t>(nx) * (ny - 1));
    plans_->lam_x.resize(nx + 1);
    plans_->lam_y.resize(ny + 1);
    for (int p = 0; p <= nx; ++p) {
        const double s = std::sin(0.5 * pi * p / nx);
        plans_->lam_x[p] = 4.0 * s * s / h2;
    }
    for (int q = 0; q <= ny; ++q) {
        const double s = std::sin(0.5 * pi * q / ny);
        plans_->lam_y[q] = 4.0 * s * s / h2;
    }
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plans_->poisson_fwd = fftw_plan_r2r_2d(ny, nx, plans_->cells_a.data(), plans_->cells_b.data(),
                                           FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
    plans_->poisson_inv = fftw_plan_r2r_2d(ny, nx, plans_->cells_b.data(), plans_->cells_a.data(),
                                           FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
    plans_->hx_fwd = fftw_plan_r2r_2d(ny, nx - 1, plans_->x_a.data(), plans_->x_b.data(),
                                      FFTW_RODFT10, FFTW_RODFT00, FFTW_ESTIMATE);
    plans_->hx_inv = fftw_plan_r2r_2d(ny, nx - 1, plans_->x_b.data(), plans_->x_a.data(),
                                      FFTW_RODFT01, FFTW_RODFT00, FFTW_ESTIMATE);
    plans_->hy_fwd = fftw_plan_r2r_2d(ny - 1, nx, plans_->y_a.data(), plans_->y_b.data(),
                                      FFTW_RODFT00, FFTW_RODFT10, FFTW_ESTIMATE);
    plans_->hy_inv = fftw_plan_r2r_2d(ny - 1, nx, plans_->y_b.data(), plans_->y_a.data(),
                                      FFTW_RODFT00, FFTW_RODFT01, FFTW_ESTIMATE);
}

OperatorWorkspace::~OperatorWorkspace() = default;

ScalarField OperatorWorkspace::solve_poisson_neumann(const ScalarField& rhs) {
    if (!rhs.domain.same_grid(dom_))
        throw std::invalid_argument("solve_poisson_neumann: wrong grid");
    const int nx = dom_.nx, ny = dom_.ny;
    auto& P = *plans_;
    double mean = 0.0;
    for (double v : rhs.values) mean += v;
    mean /= static_cast<double>(rhs.values.size());
    for (std::size_t k = 0; k < rhs.values.size(); ++k) P.cells_a[k] = rhs.values[k] - mean;
    fftw_execute(P.poisson_fwd);
    const double norm = 1.0 / (4.0 * nx * ny);
    for (int q = 0; q < ny; ++q)
        for (int p = 0; p < nx; ++p) {
            const std::size_t k = static_cast<std::size_t>(q) * nx + p;
            const double lam = P.lam_x[p] + P.lam_y[q];
            P.cells_b[k] = (lam > 0.0) ? -P.cells_b[k] * norm / lam : 0.0;
        }
    fftw_execute(P.poisson_inv);
    ScalarField phi(dom_);
    phi.values.assign(P.cells_a.begin(), P.cells_a.end());
    phi.subtract_mean();
    return phi;
}

VelocityField OperatorWorkspace::implicit_diffusion_solve(const VelocityField& rhs, double gamma) {
    if (!rhs.domain.same_grid(dom_))
        throw std::invalid_argument("implicit_diffusion_solve: wrong grid");
    if (gamma < 0.0) throw std::invalid_argument("implicit_diffusion_solve: gamma must be >= 0");
    if (gamma == 0.0) return rhs;
    auto& P = *plans_;
    const int nx = dom_.nx, ny = dom_.ny;
    VelocityField out(dom_);
    const double norm = 1.0 / (4.0 * nx * ny);
    // x component: interior columns 1..nx-1
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            P.x_a[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)] = rhs.x(i, j);
    fftw_execute(P.hx_fwd);
    for (int q = 0; q < ny; ++q)
        for (int p = 0; p < nx - 1; ++p) {
            const std::size_t k = static_cast<std::size_t>(q) * (nx - 1) + p;
            const double lam = P.lam_x[p + 1] + P.lam_y[q + 1];
            P.x_b[k] *= norm / (1.0 + gamma * lam);
        }
    fftw_execute(P.hx_inv);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            out.x(i, j) = P.x_a[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)];
    // y component: interior rows 1..ny-1
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            P.y_a[static_cast<std::size_t>(j - 1) * nx + i] = rhs.y(i, j);
    fftw_execute(P.hy_fwd);
    for (int q = 0; q < ny - 1; ++q)
        for (int p = 0; p < nx; ++p) {
            const std::size_t k = static_cast<std::size_t>(q) * nx + p;
            const double lam = P.lam_x[p + 1] + P.lam_y[q + 1];
            P.y_b[k] *= norm / (1.0 + gamma * lam);
        }
    fftw_execute(P.hy_inv);
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.y(i, j) = P.y_a[static_cast<std::size_t>(j - 1) * nx + i];
    // residual contract: (I + gamma(-lap)) out == rhs on interior faces
    const VelocityField lap = stencil::laplacian(out);
    double rmax = 0.0, smax = 0.0;
    for (std::size_t k = 0; k < out.ux.size(); ++k) {
        rmax = std::max(rmax, std::abs(out.ux[k] - gamma * lap.ux[k] - rhs.ux[k]));
        smax = std::max(smax, std::abs(rhs.ux[k]));
    }
    for (std::size_t k = 0; k < out.uy.size(); ++k) {
        rmax = std::max(rmax, std::abs(out.uy[k] - gamma * lap.uy[k] - rhs.uy[k]));
        smax = std::max(smax, std::abs(rhs.uy[k]));
    }
    last_residual_ = rmax / std::max(smax, 1e-300);
    if (smax > 0.0 && last_residual_ > tol_) {
        std::ostringstream os;
        os << "implicit_diffusion_solve: residual " << last_residual_ << " exceeds tolerance "
           << tol_;
        throw std::runtime_error(os.str());
    }
    return out;
}

VelocityField OperatorWorkspace::dirichlet_inverse_laplacian(const VelocityField& rhs) {
    if (!rhs.domain.same_grid(dom_))
        throw std::invalid_argument("dirichlet_inverse_laplacian: wrong grid");
    auto& P = *plans_;
    const int nx = dom_.nx, ny = dom_.ny;
    VelocityField out(dom_);
    const double norm = 1.0 / (4.0 * nx * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            P.x_a[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)] = rhs.x(i, j);
    fftw_execute(P.hx_fwd);
    for (int q = 0; q < ny; ++q)
        for (int p = 0; p < nx - 1; ++p) {
            const std::size_t k = static_cast<std::size_t>(q) * (nx - 1) + p;
            P.x_b[k] *= norm / (P.lam_x[p + 1] + P.lam_y[q + 1]);
        }
    fftw_execute(P.hx_inv);
    for (int j = 0; j < ny; ++j)
        for (int i = 1; i < nx; ++i)
            out.x(i, j) = P.x_a[static_cast<std::size_t>(j) * (nx - 1) + (i - 1)];
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            P.y_a[static_cast<std::size_t>(j - 1) * nx + i] = rhs.y(i, j);
    fftw_execute(P.hy_fwd);
    for (int q = 0; q < ny - 1; ++q)
        for (int p = 0; p < nx; ++p) {
            const std::size_t k = static_cast<std::size_t>(q) * nx + p;
            P.y_b[k] *= norm / (P.lam_x[p + 1] + P.lam_y[q + 1]);
        }
    fftw_execute(P.hy_inv);
    for (int j = 1; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.y(i, j) = P.y_a[static_cast<std::size_t>(j - 1) * nx + i];
    return out;
}

VelocityField OperatorWorkspace::project(const VelocityField& w) {
    if (!w.domain.same_grid(dom_)) throw std::invalid_argument("project: wrong grid");
    VelocityField in = w;
    in.zero_boundary();
    const ScalarField div = stencil::divergence(in);
    double din = 0.0;
    for (double v : div.values) din = std::max(din, std::abs(v));
    const ScalarField phi = solve_poisson_neumann(div);
    const VelocityField g = stencil::gradient(phi);
    VelocityField out = axpy(in, -1.0, g);
    out.zero_boundary();
    const ScalarField dout = stencil::divergence(out);
    double dmax = 0.0;
    for (double v : dout.values) dmax = std::max(dmax, std::abs(v));
    const double scale = std::max({din, norm_face(in) / dom_.spacing, 1e-300});
    last_residual_ = dmax / scale;
    if (last_residual_ > tol_) {
        std::ostringstream os;
        os << "project: post-projection divergence " << dmax << " exceeds tolerance (relative "
           << last_residual_ << ")";
        throw std::runtime_error(os.str());
    }
    return out;
}

VelocityField OperatorWorkspace::stokes_apply(const VelocityField& v) {
    VelocityField lap = stencil::laplacian(v);
    for (double& a : lap.ux) a = -a;
    for (double& a : lap.uy) a = -a;
    return project(lap);
}

VelocityField OperatorWorkspace::advection_B(const VelocityField& u, const VelocityField& v) {
    return project(skew_advection(u, v));
}

VelocityField OperatorWorkspace::damping_C(const VelocityField& w, double r) {
    return project(damping_raw(w, r));
}

VelocityField OperatorWorkspace::damping_C_prime(const VelocityField& w, const VelocityField& d,
                                                 double r) {
    return project(damping_prime_raw(w, d, r));
}

namespace {

double dot_f(const VelocityField& a, const VelocityField& b) { return inner_face(a, b); }

void scale_field(VelocityField& v, double s) {
    for (double& a : v.ux) a *= s;
    for (double& a : v.uy) a *= s;
}

/// Modified Gram-Schmidt (two passes) in the face metric.
void orthonormalize(std::vector<VelocityField>& X) {
    for (std::size_t i = 0; i < X.size(); ++i) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t j = 0; j < i; ++j) X[i] = axpy(X[i], -dot_f(X[i], X[j]), X[j]);
        const double n = std::sqrt(dot_f(X[i], X[i]));
        if (!(n > 0.0)) throw std::runtime_error("eigensolver: rank breakdown");
        scale_field(X[i], 1.0 / n);
    }
}

/// Cyclic Jacobi for a small symmetric matrix (row-major n x n); returns
/// ascending eigenvalues and the matching eigenvector columns.
void jacobi_eig(std::vector<double> A, int n, std::vector<double>& evals,
                std::vector<double>& evecs) {
    std::vector<double> V(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) V[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto at = [&](std::vector<double>& M, int i, int j) -> double& {
        return M[static_cast<std::size_t>(i) * n + j];
    };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(A, i, j) * at(A, i, j);
        if (off <= 1e-28) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(A, p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (at(A, q, q) - at(A, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = at(A, i, p), aiq = at(A, i, q);
                    at(A, i, p) = c * aip - s * aiq;
                    at(A, i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = at(A, p, i), aqi = at(A, q, i);
                    at(A, p, i) = c * api - s * aqi;
                    at(A, q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = at(V, i, p), viq = at(V, i, q);
                    at(V, i, p) = c * vip - s * viq;
                    at(V, i, q) = s * vip + c * viq;
                }
            }
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return at(A, a, a) < at(A, b, b); });
    evals.resize(n);
    evecs.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int c = 0; c < n; ++c) {
        evals[c] = at(A, order[c], order[c]);
        for (int i = 0; i < n; ++i)
            evecs[static_cast<std::size_t>(i) * n + c] = at(V, i, order[c]);
    }
}

} // namespace

StokesEigenResult OperatorWorkspace::smallest_stokes_eigenpairs(int k, int iterations) {
    if (k < 1) throw std::invalid_argument("smallest_stokes_eigenpairs: k must be >= 1");
    // Preconditioned CG for A y = b on the divergence-free subspace;
    // M = P (-lap)^{-1} P keeps the iteration count nearly grid-independent.
    auto solve_A = [&](const VelocityField& b) {
        VelocityField x(dom_);
        VelocityField rr = b;
        VelocityField z = project(dirichlet_inverse_laplacian(rr));
        VelocityField p = z;
        double rz = dot_f(rr, z);
        const double b0 = std::sqrt(dot_f(b, b));
        for (int it = 0; it < max_iters_; ++it) {
            const VelocityField Ap = stokes_apply(p);
            const double alpha = rz / dot_f(p, Ap);
            x = axpy(x, alpha, p);
            rr = axpy(rr, -alpha, Ap);
            if (std::sqrt(dot_f(rr, rr)) <= 1e-12 * b0) return x;
            z = project(dirichlet_inverse_laplacian(rr));
            const double rz_new = dot_f(rr, z);
            p = axpy(z, rz_new / rz, p);
            rz = rz_new;
        }
        throw std::runtime_error("smallest_stokes_eigenpairs: inner CG failed to converge");
    };

    // Block inverse iteration with Rayleigh-Ritz extraction: the channel
    // spectrum is clustered in the streamwise direction, so single-vector
    // iteration stagnates; the block separates lam_k from lam_{B+1} instead.
    const int B = k + 8;
    std::vector<VelocityField> X;
    for (int i = 0; i < B; ++i)
        X.push_back(project(random_solenoidal(dom_, 7777u + 13u * static_cast<unsigned>(i))));
    orthonormalize(X);
    std::vector<double> ritz(B, 0.0);
    for (int it = 0; it < iterations; ++it) {
        std::vector<VelocityField> Y;
        Y.reserve(B);
        for (const auto& x : X) Y.push_back(solve_A(x));
        orthonormalize(Y);
        std::vector<VelocityField> AY;
        AY.reserve(B);
        for (const auto& y : Y) AY.push_back(stokes_apply(y));
        std::vector<double> H(static_cast<std::size_t>(B) * B, 0.0);
        for (int i = 0; i < B; ++i)
            for (int j = i; j < B; ++j) {
                const double hij = 0.5 * (dot_f(AY[i], Y[j]) + dot_f(AY[j], Y[i]));
                H[static_cast<std::size_t>(i) * B + j] = hij;
                H[static_cast<std::size_t>(j) * B + i] = hij;
            }
        std::vector<double> evals, evecs;
        jacobi_eig(H, B, evals, evecs);
        std::vector<VelocityField> Xn;
        Xn.reserve(B);
        for (int c = 0; c < B; ++c) {
            VelocityField xc(dom_);
            for (int i = 0; i < B; ++i)
                xc = axpy(xc, evecs[static_cast<std::size_t>(i) * B + c], Y[i]);
            Xn.push_back(std::move(xc));
        }
        X = std::move(Xn);
        ritz = evals;
        // converged when the k lowest Ritz pairs have small residuals
        bool done = true;
        for (int c = 0; c < k && done; ++c) {
            const VelocityField res = axpy(stokes_apply(X[c]), -ritz[c], X[c]);
            if (std::sqrt(dot_f(res, res)) > 1e-8 * ritz[c]) done = false;
        }
        if (done) break;
    }
    StokesEigenResult out;
    for (int c = 0; c < k; ++c) {
        out.values.push_back(ritz[c]);
        out.fields.push_back(X[c]);
    }
    return out;
}

double OperatorWorkspace::commutator_diagnostic(const VelocityField& w) {
    // |P(lap w) - lap(P w)| / |w|
    const VelocityField lap_pw = stencil::laplacian(project(w));
    const VelocityField p_lapw = project(stencil::laplacian(w));
    const VelocityField diff = axpy(p_lapw, -1.0, lap_pw);
    const double nw = norm_face(w);
    return nw > 0.0 ? norm_face(diff) / nw : 0.0;
}

} // namespace scbf

#include "scbf/domain.hpp"
#include "scbf/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scbf {

namespace {

bool near_integer(double x, long long& out) {
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return false;
    out = static_cast<long long>(r);
    return true;
}

} // namespace

DomainSpec make_domain(int m, double Ly, double h) {
    if (m < 1) throw std::invalid_argument("make_domain: m must be >= 1");
    if (!(Ly > 0.0) || !(h > 0.0))
        throw std::invalid_argument("make_domain: Ly and h must be positive");
    long long ny = 0, mh = 0;
    if (!near_integer(Ly / h, ny) || ny < 1) {
        std::ostringstream os;
        os << "make_domain: Ly/h = " << (Ly / h) << " is not an integer (non-commensurate grid)";
        throw std::invalid_argument(os.str());
    }
    if (!near_integer(m / h, mh) || mh < 1) {
        std::ostringstream os;
        os << "make_domain: m/h = " << (m / h)
           << " is not an integer; m must be a multiple of the spacing";
        throw std::invalid_argument(os.str());
    }
    DomainSpec d;
    d.half_width = static_cast<double>(m);
    d.height = Ly;
    d.spacing = h;
    d.nx = static_cast<int>(2 * mh);
    d.ny = static_cast<int>(ny);
    return d;
}

void VelocityField::zero_boundary() {
    const int nx = domain.nx, ny = domain.ny;
    for (int j = 0; j < ny; ++j) {
        x(0, j) = 0.0;
        x(nx, j) = 0.0;
    }
    for (int i = 0; i < nx; ++i) {
        y(i, 0) = 0.0;
        y(i, ny) = 0.0;
    }
}

double ScalarField::mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

void ScalarField::subtract_mean() {
    const double m = mean();
    for (double& v : values) v -= m;
}

namespace {

/// Cell offset of the smaller domain inside the larger one (x direction).
int nesting_offset(const DomainSpec& small, const DomainSpec& big) {
    if (!small.commensurate(big))
        throw std::invalid_argument("expansion/restriction: grids have mismatched h or Ly");
    const double off = (big.half_width - small.half_width) / small.spacing;
    const double r = std::round(off);
    if (off < -1e-9 || std::abs(off - r) > 1e-9)
        throw std::invalid_argument("expansion/restriction: domains are not node-aligned");
    return static_cast<int>(r);
}

} // namespace

VelocityField null_expand(const VelocityField& v, const DomainSpec& target) {
    if (target.half_width < v.domain.half_width)
        throw std::invalid_argument("null_expand: target domain is smaller than the source");
    const int off = nesting_offset(v.domain, target);
    VelocityField out(target);
    const int nx = v.domain.nx, ny = v.domain.ny;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            out.x(i + off, j) = v.x(i, j);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.y(i + off, j) = v.y(i, j);
    return out;
}

VelocityField restrict_to(const VelocityField& v, const DomainSpec& target) {
    if (target.half_width > v.domain.half_width)
        throw std::invalid_argument("restrict_to: target domain is larger than the source");
    const int off = nesting_offset(target, v.domain);
    VelocityField out(target);
    const int nx = target.nx, ny = target.ny;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            out.x(i, j) = v.x(i + off, j);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.y(i, j) = v.y(i + off, j);
    out.zero_boundary();
    return out;
}

void to_centers(const VelocityField& v, std::vector<double>& cx, std::vector<double>& cy) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    cx.assign(v.domain.n_cells(), 0.0);
    cy.assign(v.domain.n_cells(), 0.0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t c = static_cast<std::size_t>(j) * nx + i;
            cx[c] = 0.5 * (v.x(i, j) + v.x(i + 1, j));
            cy[c] = 0.5 * (v.y(i, j) + v.y(i, j + 1));
        }
}

double norm_H(const VelocityField& v) { return norm_Lp(v, 2.0); }

double norm_Lp(const VelocityField& v, double p) {
    if (p < 1.0) throw std::invalid_argument("norm_Lp: p must be >= 1");
    std::vector<double> cx, cy;
    to_centers(v, cx, cy);
    const double h2 = v.domain.cell_area();
    double s = 0.0;
    if (p == 2.0) {
        for (std::size_t c = 0; c < cx.size(); ++c) s += cx[c] * cx[c] + cy[c] * cy[c];
        return std::sqrt(h2 * s);
    }
    for (std::size_t c = 0; c < cx.size(); ++c) {
        const double mag = std::sqrt(cx[c] * cx[c] + cy[c] * cy[c]);
        s += std::pow(mag, p);
    }
    return std::pow(h2 * s, 1.0 / p);
}

double norm_V(const VelocityField& v) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    double s = 0.0;
    // ux: x links (columns 0..nx), y links between rows, wall terms at y walls
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = v.x(i + 1, j) - v.x(i, j);
            s += d * d;
        }
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const double d = v.x(i, j + 1) - v.x(i, j);
            s += d * d;
        }
    for (int i = 0; i <= nx; ++i) {
        s += 2.0 * v.x(i, 0) * v.x(i, 0);
        s += 2.0 * v.x(i, ny - 1) * v.x(i, ny - 1);
    }
    // uy: y links, x links, wall terms at x walls
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double d = v.y(i, j + 1) - v.y(i, j);
            s += d * d;
        }
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            const double d = v.y(i + 1, j) - v.y(i, j);
            s += d * d;
        }
    for (int j = 0; j <= ny; ++j) {
        s += 2.0 * v.y(0, j) * v.y(0, j);
        s += 2.0 * v.y(nx - 1, j) * v.y(nx - 1, j);
    }
    return std::sqrt(s);
}

double inner_face(const VelocityField& a, const VelocityField& b) {
    if (!a.domain.same_grid(b.domain))
        throw std::invalid_argument("inner_face: fields live on different grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.ux.size(); ++k) s += a.ux[k] * b.ux[k];
    for (std::size_t k = 0; k < a.uy.size(); ++k) s += a.uy[k] * b.uy[k];
    return a.domain.cell_area() * s;
}

double norm_face(const VelocityField& v) { return std::sqrt(inner_face(v, v)); }

double max_speed(const VelocityField& v) {
    std::vector<double> cx, cy;
    to_centers(v, cx, cy);
    double m = 0.0;
    for (std::size_t c = 0; c < cx.size(); ++c)
        m = std::max(m, std::sqrt(cx[c] * cx[c] + cy[c] * cy[c]));
    return m;
}

VelocityField from_stream(const DomainSpec& d, const std::vector<double>& psi) {
    if (psi.size() != d.n_nodes())
        throw std::invalid_argument("from_stream: psi has wrong node count");
    const int nx = d.nx, ny = d.ny;
    const double h = d.spacing;
    auto node = [&](int i, int j) { return psi[static_cast<std::size_t>(j) * (nx + 1) + i]; };
    VelocityField v(d);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            v.x(i, j) = (node(i, j + 1) - node(i, j)) / h;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            v.y(i, j) = -(node(i + 1, j) - node(i, j)) / h;
    return v;
}

VelocityField random_solenoidal(const DomainSpec& d, std::uint64_t seed, int modes, double scale) {
    const int nx = d.nx, ny = d.ny;
    const double Lx = 2.0 * d.half_width, Ly = d.height;
    constexpr double pi = 3.14159265358979323846;
    std::vector<double> psi(d.n_nodes(), 0.0);
    for (int k = 0; k < modes; ++k) {
        // frequencies in [1, nx-1] x [1, ny]; amplitude decays with wavenumber
        const int p = 1 + static_cast<int>(rng::uniform(seed, 1000 + k, 0) * std::max(1, nx - 1));
        const int q = 1 + static_cast<int>(rng::uniform(seed, 2000 + k, 0) * ny);
        const double amp = rng::normal(seed, 3000 + k, 0) /
                           (1.0 + p * p * (Ly * Ly) / (Lx * Lx) + q * q);
        const double phase = 0.0;  // sine basis keeps psi zero on the walls
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) {
                const double sx = std::sin(pi * p * i / static_cast<double>(nx) + phase);
                const double sy = std::sin(pi * q * j / static_cast<double>(ny));
                psi[static_cast<std::size_t>(j) * (nx + 1) + i] += amp * sx * sy;
            }
    }
    // pin the wall nodes to exact zeros (sin(pi p) carries rounding noise),
    // so boundary faces vanish bit-exactly
    for (int i = 0; i <= nx; ++i) {
        psi[i] = 0.0;
        psi[static_cast<std::size_t>(ny) * (nx + 1) + i] = 0.0;
    }
    for (int j = 0; j <= ny; ++j) {
        psi[static_cast<std::size_t>(j) * (nx + 1)] = 0.0;
        psi[static_cast<std::size_t>(j) * (nx + 1) + nx] = 0.0;
    }
    VelocityField v = from_stream(d, psi);
    const double n = norm_H(v);
    if (n > 0.0) {
        const double f = scale / n;
        for (double& a : v.ux) a *= f;
        for (double& a : v.uy) a *= f;
    }
    return v;
}

VelocityField axpy(const VelocityField& a, double s, const VelocityField& b) {
    if (!a.domain.same_grid(b.domain))
        throw std::invalid_argument("axpy: fields live on different grids");
    VelocityField out = a;
    for (std::size_t k = 0; k < out.ux.size(); ++k) out.ux[k] += s * b.ux[k];
    for (std::size_t k = 0; k < out.uy.size(); ++k) out.uy[k] += s * b.uy[k];
    return out;
}

} // namespace scbf

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scbf {

/// Truncated channel O_m = (-m, m) x (0, Ly) with a uniform MAC staggered
/// grid of spacing h. nx*h == 2*m and ny*h == Ly exactly; m must itself be a
/// multiple of h so that any two domains with the same (h, Ly) are
/// node-aligned nested grids.
struct DomainSpec {
    double half_width = 0.0;  ///< m
    double height = 0.0;      ///< Ly
    double spacing = 0.0;     ///< h
    int nx = 0;               ///< cells across the channel, 2m/h
    int ny = 0;               ///< cells over the height, Ly/h

    double x_left() const { return -half_width; }
    double cell_area() const { return spacing * spacing; }
    std::size_t n_cells() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t n_xfaces() const { return static_cast<std::size_t>(nx + 1) * ny; }
    std::size_t n_yfaces() const { return static_cast<std::size_t>(nx) * (ny + 1); }
    std::size_t n_nodes() const { return static_cast<std::size_t>(nx + 1) * (ny + 1); }

    /// x-coordinate of vertical-face column i (i in [0, nx]).
    double xface_x(int i) const { return x_left() + i * spacing; }
    /// cell-center coordinates of cell (i, j).
    double center_x(int i) const { return x_left() + (i + 0.5) * spacing; }
    double center_y(int j) const { return (j + 0.5) * spacing; }

    bool same_grid(const DomainSpec& o) const {
        return nx == o.nx && ny == o.ny && spacing == o.spacing &&
               half_width == o.half_width && height == o.height;
    }
    /// Same spacing and height: candidates for nesting.
    bool commensurate(const DomainSpec& o) const {
        return spacing == o.spacing && height == o.height;
    }
};

/// make_domain(m, Ly, h): validates commensurability and returns the spec.
/// Throws std::invalid_argument when Ly/h or m/h is not an integer.
DomainSpec make_domain(int m, double Ly, double h);

/// Discrete velocity on the staggered grid. ux lives on vertical cell faces
/// ((nx+1) x ny, index j*(nx+1)+i), uy on horizontal faces (nx x (ny+1),
/// index j*nx+i). Faces on the boundary of the domain carry exact zeros.
struct VelocityField {
    DomainSpec domain;
    std::vector<double> ux;
    std::vector<double> uy;

    VelocityField() = default;
    explicit VelocityField(const DomainSpec& d)
        : domain(d), ux(d.n_xfaces(), 0.0), uy(d.n_yfaces(), 0.0) {}

    double& x(int i, int j) { return ux[static_cast<std::size_t>(j) * (domain.nx + 1) + i]; }
    double x(int i, int j) const { return ux[static_cast<std::size_t>(j) * (domain.nx + 1) + i]; }
    double& y(int i, int j) { return uy[static_cast<std::size_t>(j) * domain.nx + i]; }
    double y(int i, int j) const { return uy[static_cast<std::size_t>(j) * domain.nx + i]; }

    /// Force the boundary faces (x = +-m columns of ux, y = 0/Ly rows of uy)
    /// to exact zeros.
    void zero_boundary();
    bool empty() const { return ux.empty(); }
};

/// Cell-centered scalar (pressure, Poisson right-hand sides).
struct ScalarField {
    DomainSpec domain;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const DomainSpec& d) : domain(d), values(d.n_cells(), 0.0) {}

    double& at(int i, int j) { return values[static_cast<std::size_t>(j) * domain.nx + i]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(j) * domain.nx + i]; }

    double mean() const;
    void subtract_mean();
};

// ---------------------------------------------------------------------------
// Expansion / restriction between nested domains
// ---------------------------------------------------------------------------

/// Zero-extension of v onto the larger commensurate domain `target`.
/// Preserves every Lp norm exactly (values are copied on the shared subgrid
/// and zero elsewhere).
VelocityField null_expand(const VelocityField& v, const DomainSpec& target);

/// Pointwise restriction onto the smaller commensurate domain `target`; the
/// faces landing on the boundary of `target` are zeroed. The small divergence
/// defect this introduces is repaired by the next projection pass.
VelocityField restrict_to(const VelocityField& v, const DomainSpec& target);

// ---------------------------------------------------------------------------
// Norms and inner products
// ---------------------------------------------------------------------------
//
// Two quadratures coexist:
//  * reporting norms (norm_H, norm_Lp) evaluate |v| at interpolated cell
//    centers, one consistent quadrature for every p;
//  * the algebraic face inner product (inner_face) is the native MAC metric
//    in which divergence/gradient adjointness, projection orthogonality and
//    the energy ledgers are exact.
// norm_V is the Dirichlet form of the discrete vector Laplacian (link
// differences plus the wall terms from the no-slip ghost reflection), so that
// <A v, v> = |v|_V^2 holds without quadrature slack.

/// Interpolate a staggered field to cell centers; out arrays sized nx*ny.
void to_centers(const VelocityField& v, std::vector<double>& cx, std::vector<double>& cy);

double norm_H(const VelocityField& v);
double norm_Lp(const VelocityField& v, double p);
double norm_V(const VelocityField& v);

double inner_face(const VelocityField& a, const VelocityField& b);
double norm_face(const VelocityField& v);

/// max_c |v_c| over interpolated cell centers (CFL guards).
double max_speed(const VelocityField& v);

// ---------------------------------------------------------------------------
// Field construction helpers
// ---------------------------------------------------------------------------

/// Discrete curl of a stream function given at grid nodes ((nx+1) x (ny+1),
/// index j*(nx+1)+i). The result is exactly discretely divergence-free; its
/// boundary faces vanish when psi is constant along each wall.
VelocityField from_stream(const DomainSpec& d, const std::vector<double>& psi_nodes);

/// Random zero-boundary discretely divergence-free field: a stream function
/// with `modes` random low/high Fourier modes, scaled to norm_H(v) = scale.
/// Deterministic in (seed).
VelocityField random_solenoidal(const DomainSpec& d, std::uint64_t seed, int modes = 12,
                                double scale = 1.0);

/// a + s*b (domains must match).
VelocityField axpy(const VelocityField& a, double s, const VelocityField& b);

} // namespace scbf

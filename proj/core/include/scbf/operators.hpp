#pragma once

#include "scbf/domain.hpp"

#include <memory>
#include <vector>

namespace scbf {

/// Discrete differential operators that need no solver state.
namespace stencil {

/// Divergence at cell centers: (Dx ux + Dy uy)/h.
ScalarField divergence(const VelocityField& v);

/// Gradient of a cell scalar onto interior faces; boundary faces get zero
/// (homogeneous Neumann convention of the pressure Poisson problem).
VelocityField gradient(const ScalarField& phi);

/// Component-wise 5-point Laplacian with no-slip ghosts: tangential ghost
/// values reflect (u_ghost = -u_wall_row), normal boundary faces are pinned
/// Dirichlet zeros.
VelocityField laplacian(const VelocityField& v);

} // namespace stencil

/// Trilinear advection form, evaluated at cell centers and explicitly
/// skew-symmetrized:
///   b(u,v,w) = 1/2 [ t(u,v,w) - t(u,w,v) ],
///   t(u,v,w) = h^2 sum_c (u_c . grad v)_c . w_c .
/// b(u,v,v) vanishes identically and b(u,v,w) = -b(u,w,v) holds bit-exactly
/// because both orderings reuse the same two t evaluations.
double trilinear_b(const VelocityField& u, const VelocityField& v, const VelocityField& w);

/// The raw (unsymmetrized) form t(u,v,w); exposed for negative-control tests.
double trilinear_raw(const VelocityField& u, const VelocityField& v, const VelocityField& w);

/// Face field representing w -> b(a, v, w) exactly in the face inner product:
/// inner_face(skew_advection(a,v), w) == trilinear_b(a,v,w) for every
/// zero-boundary w. Built from the adjoints of the center interpolation and
/// center gradient stencils.
VelocityField skew_advection(const VelocityField& a, const VelocityField& v);

/// Pointwise damping |w|^{r-1} w evaluated at cell centers and redistributed
/// to faces through the adjoint of the center interpolation, so that
/// inner_face(damping_raw(w,r), psi) = h^2 sum_c |w_c|^{r-1} w_c . psi_c
/// exactly for zero-boundary psi. Monotonicity then holds to rounding.
VelocityField damping_raw(const VelocityField& w, double r);

/// Directional (Gateaux) derivative of the pointwise damping map, before
/// projection. Branches: r = 1 -> d; w = 0 and 1 < r < 3 -> 0.
VelocityField damping_prime_raw(const VelocityField& w, const VelocityField& d, double r);

struct StokesEigenResult {
    std::vector<double> values;          ///< ascending eigenvalues
    std::vector<VelocityField> fields;   ///< face-orthonormal eigenfields
};

/// Spectral (DCT/DST) solver workspace for one grid. Holds FFTW plans and
/// scratch; create one per thread. All solves are direct and deterministic;
/// poisson_tol is the residual contract checked after each solve.
class OperatorWorkspace {
public:
    explicit OperatorWorkspace(const DomainSpec& d, double poisson_tol = 1e-10,
                               int max_iters = 400);
    ~OperatorWorkspace();
    OperatorWorkspace(const OperatorWorkspace&) = delete;
    OperatorWorkspace& operator=(const OperatorWorkspace&) = delete;

    const DomainSpec& domain() const { return dom_; }
    double poisson_tol() const { return tol_; }
    int max_iters() const { return max_iters_; }

    /// Solve the cell Neumann Poisson problem lap(phi) = rhs - mean(rhs),
    /// returning the mean-zero phi.
    ScalarField solve_poisson_neumann(const ScalarField& rhs);

    /// Component-wise Dirichlet solve of (I + gamma (-lap)) x = rhs.
    /// gamma = 0 returns rhs unchanged. Throws on residual > poisson_tol.
    VelocityField implicit_diffusion_solve(const VelocityField& rhs, double gamma);

    /// Component-wise Dirichlet solve of (-lap) x = rhs (used as a
    /// preconditioner for the constrained eigensolver).
    VelocityField dirichlet_inverse_laplacian(const VelocityField& rhs);

    /// Helmholtz-Hodge projection: w - grad(phi) with lap(phi) = div(w).
    /// The output divergence is checked against poisson_tol per cell.
    VelocityField project(const VelocityField& w);

    /// Stokes operator A v = project(-lap v).
    VelocityField stokes_apply(const VelocityField& v);

    /// project(skew_advection(u, v)); advection_B(u) pairs exactly with the
    /// trilinear form on divergence-free test fields.
    VelocityField advection_B(const VelocityField& u, const VelocityField& v);

    /// project(damping_raw(w, r)).
    VelocityField damping_C(const VelocityField& w, double r);

    /// project(damping_prime_raw(w, d, r)).
    VelocityField damping_C_prime(const VelocityField& w, const VelocityField& d, double r);

    /// Smallest k eigenpairs of A on the discretely divergence-free subspace,
    /// by deflated inverse iteration with a preconditioned CG inner solve.
    StokesEigenResult smallest_stokes_eigenpairs(int k, int iterations = 60);

    /// Norm of the projection/Laplacian commutator on a probe field,
    /// |P(-lap)w - (-lap)Pw| / |w|; reported as a diagnostic only.
    double commutator_diagnostic(const VelocityField& w);

    /// residual of the most recent linear solve (relative)
    double last_residual() const { return last_residual_; }

private:
    struct Plans;
    DomainSpec dom_;
    double tol_;
    int max_iters_;
    double last_residual_ = 0.0;
    std::unique_ptr<Plans> plans_;
};

} // namespace scbf

#pragma once

#include "scbf/solver.hpp"

#include <cstdint>
#include <vector>

namespace scbf {

/// Pullback experiment configuration: evolve an ensemble of initial states
/// from time -t to 0 over the shifted noise path and examine the bundle at 0.
struct PullbackConfig {
    std::vector<double> pullback_times;  ///< increasing
    std::vector<VelocityField> ic_ensemble;
    double ball_radius = 0.0;  ///< >0: sample `ball_count` random states instead
    int ball_count = 0;
    std::uint64_t seed = 1;
    double dt = 1e-2;

    void validate() const;
    /// Resolve the ensemble (explicit states or the ball sampler) on `d`.
    std::vector<VelocityField> make_ensemble(const DomainSpec& d) const;
};

/// The solution cocycle: u(t) = Phi(t, omega) x via transform, integrate,
/// reconstruct. The path is derived from `seed` (base point omega).
VelocityField cocycle(const Model& model, double t, std::uint64_t seed, const VelocityField& x,
                      double dt);

/// Same over an explicit path (so theta-shifted base points can be passed);
/// the path is extended deterministically when it does not cover [0, t].
VelocityField cocycle(const Model& model, double t, const OUPath& omega, const VelocityField& x,
                      double dt);

struct PullbackResult {
    double pullback_time = 0.0;
    std::vector<VelocityField> states;  ///< u_i(0)
    double diameter = 0.0;              ///< pairwise reporting-norm diameter
};

/// Evolve every member from -t to 0 over theta_{-t} omega; returns the cloud
/// at time 0 and its diameter.
PullbackResult pullback_evolve(const Model& model, const PullbackConfig& cfg, double t);

struct AbsorbingEstimate {
    double L_hat = 0.0;      ///< the exponentially weighted integral
    double L_star_sq = 0.0;  ///< L_hat + |g|_H^2 y(0)^2
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> integrand;  ///< sampled integrand on the path grid
    std::vector<double> times;
};

/// Absorbing-radius functional: the calibrated constant M times the
/// exponentially weighted path integral of
///   |f|^2 + (|g|_H^2 + |g|_{D(A)}^2) y^2 + |y|^{2(r+1)/(r-1)} |g|^{..}
///   + |y|^{r+1} |g|_{L^{r+1}}^{r+1}.
/// Rejects r = 1 (the middle exponent is singular there).
AbsorbingEstimate absorbing_radius(Model& model, std::uint64_t seed, double horizon, double M,
                                   double dt);

/// Same over an explicit path covering [-horizon, 0].
AbsorbingEstimate absorbing_radius(Model& model, const OUPath& path, double M);

struct TailMass {
    double smooth = 0.0;  ///< quintic-smoothstep cutoff, onset k/sqrt(2), full at k
    double hard = 0.0;    ///< plain integral over |x| >= k
};

/// Mass of v beyond channel coordinate |x| = k, measured with the smooth
/// cutoff rho(2 x^2 / k^2) (rho = 0 below 1, 1 above 2, |rho'| <= 15/8) and
/// with the hard cut.
TailMass tail_mass(const VelocityField& v, double k);

/// The cutoff profile itself (exposed so its shape can be checked).
double tail_cutoff_rho(double s);

} // namespace scbf

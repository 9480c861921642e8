#pragma once

#include "scbf/domain.hpp"
#include "scbf/operators.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scbf {

enum class NoiseKind {
    none,       ///< noise switched off (z = 0)
    scalar_ou,  ///< finite set of fixed profiles, each driven by a scalar OU
    stokes_ou,  ///< profiles are discrete Stokes eigenfields, mode-wise OU
};

/// One noise mode: spatial profile g (divergence-free, zero boundary, defined
/// on the largest domain in play), amplitude sigma and OU damping eta.
struct NoiseMode {
    VelocityField profile;
    double sigma = 1.0;
    double eta = 1.0;
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    std::vector<NoiseMode> modes;

    std::size_t n_modes() const { return modes.size(); }
    void validate() const;
};

/// Named analytic profile: a Gaussian-envelope stream function
/// psi = exp(-x^2 / (2 s^2)) sin(pi y / Ly), tapered to zero near the x walls
/// so all boundary faces vanish exactly; the discrete curl is exactly
/// divergence-free. Normalized to norm_H = 1.
VelocityField gaussian_stream_profile(const DomainSpec& d, double s);

/// Two-sided stationary OU path sampled on a uniform grid. The construction
/// anchors at absolute time index 0 and walks forward/backward with the exact
/// transition kernel, so any window of the same (seed, spec, dt) reproduces
/// identical samples and the shift flow is an exact re-indexing.
struct OUPath {
    std::uint64_t seed = 0;
    double dt = 0.0;
    double t_start = 0.0, t_end = 0.0;
    bool stationary_init = true;
    std::int64_t shift_steps = 0;            ///< accumulated theta-shift in steps
    std::vector<double> eta;                 ///< per-mode damping
    std::vector<std::vector<double>> samples;///< samples[k][i] = y_k(t_start + i dt)

    std::size_t n_samples() const { return samples.empty() ? 0 : samples[0].size(); }
    std::size_t n_modes() const { return samples.size(); }

    /// Sample index for time t (t must lie on the grid).
    std::size_t index_of(double t) const;
    double value(std::size_t mode, double t) const { return samples[mode][index_of(t)]; }
};

/// Exact OU sampling: y_{n+1} = e^{-eta dt} y_n + xi_n sqrt((1-e^{-2 eta dt})/(2 eta)).
/// Two-sidedness comes from disjoint counter streams of one seed.
OUPath sample_ou_path(std::uint64_t seed, const NoiseSpec& spec, double t_start, double t_end,
                      double dt, bool stationary_init = true);

/// theta_s at the path level: evaluating the result at tau equals evaluating
/// `path` at tau + s. The window follows the data; it is extended by
/// deterministic resampling when needed. s must be a multiple of dt.
OUPath shift(const OUPath& path, double s);

/// Deterministically resample so the window covers [t0, t1]; a no-op when it
/// already does. Existing samples are reproduced bit-identically.
OUPath ensure_window(const OUPath& p, double t0, double t1);

/// z(t, .) = sum_k sigma_k restrict(g_k) y_k(t) on `domain`.
VelocityField evaluate_z(const OUPath& path, const NoiseSpec& spec, double t,
                         const DomainSpec& domain);

/// Temperedness diagnostics over a path covering [-T, 0]:
/// rows on a time grid t >= 0 with e^{-delta t} |y(theta_{-t} omega)| per
/// delta, the sublinear-growth ratio |y(-t)|/t, and per-delta maxima over the
/// tail window [T/2, T].
struct TemperednessReport {
    std::vector<double> deltas;
    std::vector<double> times;                        ///< t >= 0
    std::vector<std::vector<double>> decay;           ///< decay[d][i]
    std::vector<double> growth_ratio;                 ///< |y(-t)|/t (first mode)
    std::vector<double> tail_max;                     ///< per delta
};

TemperednessReport temperedness_report(const OUPath& path, const std::vector<double>& deltas);

/// CSV export "t,y_1,...,y_K" and the matching seed manifest JSON.
void write_ou_csv(const std::string& path, const OUPath& p);
std::string ou_manifest_json(const OUPath& p, const NoiseSpec& spec);

} // namespace scbf

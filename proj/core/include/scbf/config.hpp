#pragma once

#include "scbf/noise.hpp"
#include "scbf/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scbf {

/// Analytic or file-backed field profile (forcing and noise shapes).
struct ProfileSpec {
    std::string kind = "gaussian_stream";  ///< zero | gaussian_stream | snapshot
    double width = 4.0;                    ///< gaussian envelope scale
    double amplitude = 1.0;                ///< multiplies the normalized profile
    std::string path;                      ///< snapshot file when kind == snapshot
};

struct ModeConfig {
    ProfileSpec profile;
    double sigma = 0.1;
    double eta = 1.0;
};

/// Full run configuration. Every constant that an experiment depends on is
/// here, including the calibration constants, and `print-defaults` dumps the
/// whole block so no hidden values exist.
struct RunConfig {
    // domain
    int m = 4;
    std::vector<int> m_list = {4, 8, 16};
    int m_ref = 32;
    double Ly = 1.0;
    double h = 0.25;
    // physics
    double mu = 1.0, alpha = 1.0, beta = 1.0, r = 3.0, ell = 1.0, eta = 0.0;
    bool advection = true;
    std::string cfl_mode = "warn";  ///< warn | reject
    double cfl_factor = 4.0;
    ProfileSpec forcing{.kind = "zero"};
    // noise
    std::string noise_kind = "scalar-ou";  ///< none | scalar-ou | stokes-ou-truncated
    std::vector<ModeConfig> modes = {ModeConfig{}};
    int stokes_modes = 1;
    // time
    double dt = 0.01, t0 = 0.0, t1 = 10.0;
    std::vector<double> pullback_times = {5.0, 10.0, 20.0};
    double burn_in = 10.0, horizon = 50.0;
    // records
    int stride = 1;
    bool ledger = true, vledger = false;
    double tail_k = 0.0;
    std::vector<double> snapshot_times;
    // pullback ensemble
    double ball_radius = 1.0;
    int ball_count = 5;
    // seeds & output
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir = "out";
    int threads = 1;
    // solver
    double poisson_tol = 1e-10;
    int max_iters = 400;
    // calibration constants (frozen; see README)
    double absorb_M = 0.1;
    double absorb_horizon = 40.0;
    double vledger_C = 256.0;
    double contraction_slack_c = 10.0;
    double pullback_tol = 1e-6;
    double upsemi_ratio_threshold = 0.1;
    double upsemi_slack = 0.05;
    double temperedness_threshold = 0.05;
    // measure experiment
    int observable_modes = 2;
    double coupling_T = 50.0;
    double exp_moment_eps = 0.01;
    double exp_moment_T = 5.0;
    // check-invariants
    int check_fields = 50;
    bool nonskew_advection = false;

    PhysicsParams physics() const;
    void validate() const;
};

RunConfig default_config();

/// Parse a JSON config file; unknown keys anywhere are rejected, known keys
/// overlay the defaults.
RunConfig load_config(const std::string& path);

/// The full configuration as pretty JSON (print-defaults, manifests).
std::string config_json(const RunConfig& cfg);

/// Resolve a profile on a domain (normalized analytic shape or snapshot).
VelocityField build_profile(const ProfileSpec& p, const DomainSpec& d);

/// Noise specification with profiles built on `base` (the largest domain in
/// play). For the spectral kind the eigenfields are computed on `base`.
NoiseSpec build_noise_spec(const RunConfig& cfg, const DomainSpec& base);

} // namespace scbf

#pragma once

#include "scbf/domain.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace scbf {

enum class CflMode { reject, warn };

struct PhysicsParams {
    double mu = 1.0;      ///< viscosity, > 0
    double alpha = 0.0;   ///< linear damping coefficient, >= 0
    double beta = 0.0;    ///< nonlinear damping coefficient, >= 0
    double r = 3.0;       ///< absorption exponent, >= 1
    double ell = 1.0;     ///< scalar-noise OU damping (single-mode shorthand)
    double eta = 0.0;     ///< spectral-noise OU shift
    bool advection = true;
    CflMode cfl_mode = CflMode::warn;
    double cfl_factor = 4.0;  ///< advection guard dt <= h / (cfl_factor max|w|)

    void validate() const;
};

/// Evaluation of the noise input at one time level.
struct NoiseState {
    VelocityField z;      ///< sum_k sigma_k y_k g_k on the model grid
    VelocityField drift;  ///< the extra rhs terms carried by the transform
    std::vector<double> y;
};

struct RecordOptions {
    int stride = 1;              ///< record every `stride` steps
    bool ledger = true;          ///< per-step energy-equality residuals
    bool vledger = false;        ///< gradient-level ledger inputs (costs one A apply per step)
    double tail_k = 0.0;         ///< when > 0, record the smooth tail mass beyond |x| = tail_k
    std::vector<double> snapshot_times;
};

struct TrajectoryRecord {
    std::vector<double> t;
    std::vector<double> v_H;       ///< reporting (cell-center) norm of v
    std::vector<double> v_V;
    std::vector<double> v_Hf;      ///< face-metric norm of v
    std::vector<double> u_H;       ///< reporting norm of u = v + z
    std::vector<double> u_Hf;
    std::vector<double> w_Lr1;     ///< |v + z|_{L^{r+1}}
    std::vector<double> energy_res;
    std::vector<double> tail;      ///< optional smooth tail mass
    // gradient-ledger inputs (filled when vledger is on)
    std::vector<double> Av_f, z_Hf, z_V, Az_f, v_H_center_sq;
    std::vector<double> y0;        ///< first noise mode sample
    std::vector<std::pair<double, VelocityField>> snapshots;  ///< (time, u)
    int cfl_warnings = 0;

    std::size_t size() const { return t.size(); }
};

/// One domain's worth of dynamics: parameters, noise restricted to the grid,
/// forcing, and the spectral solver workspace. Create one per thread.
class Model {
public:
    /// `base_noise` profiles may live on any commensurate enclosing domain;
    /// they are restricted here. `f` empty means zero forcing.
    Model(const DomainSpec& d, const PhysicsParams& p, const NoiseSpec& base_noise,
          VelocityField f = VelocityField(), double poisson_tol = 1e-10);

    const DomainSpec& domain() const { return dom_; }
    const PhysicsParams& params() const { return params_; }
    const NoiseSpec& noise() const { return noise_; }
    const VelocityField& forcing() const { return f_; }
    OperatorWorkspace& workspace() { return ws_; }

    NoiseState noise_state(const OUPath& path, double t) const;

    /// Right-hand side of the transformed pathwise system, fully projected.
    VelocityField rhs_v(const VelocityField& v, const NoiseState& ns) const;

    /// One IMEX step: explicit advection/damping/forcing/noise, implicit
    /// diffusion and linear damping, then projection.
    VelocityField step(const VelocityField& v, const OUPath& path, double t, double dt,
                       TrajectoryRecord* rec = nullptr) const;

    /// Iterated stepping over [t0, t1] with per-step records. Throws
    /// std::runtime_error naming the step index if the state leaves the
    /// finite range.
    TrajectoryRecord integrate(const VelocityField& v0, const OUPath& path, double t0, double t1,
                               double dt, const RecordOptions& opts = RecordOptions()) const;

    VelocityField reconstruct_u(const VelocityField& v, const OUPath& path, double t) const;

private:
    DomainSpec dom_;
    PhysicsParams params_;
    NoiseSpec noise_;
    std::vector<VelocityField> lap_g_;  ///< project(lap g_k), scalar kind
    VelocityField f_;
    mutable OperatorWorkspace ws_;

    VelocityField explicit_terms(const VelocityField& w, const NoiseState& ns, double dt,
                                 int* cfl_warn) const;
};

/// Build a spectral noise specification: K smallest Stokes eigenfields with
/// mode dampings eta_k = mu * lambda_k + eta_shift.
NoiseSpec make_stokes_noise(OperatorWorkspace& ws, int k_modes, double sigma, double eta_shift,
                            double mu);

/// The recorded per-step energy-equality residuals (ledger must be enabled).
const std::vector<double>& energy_ledger(const TrajectoryRecord& rec);

/// Total |residual| over the record: the refinement diagnostic.
double energy_ledger_total(const TrajectoryRecord& rec);

struct VLedgerReport {
    std::vector<double> lhs;  ///< (|v_{n+1}|_V^2 - |v_n|_V^2)/dt + |A v_{n+1}|^2
    std::vector<double> rhs;  ///< Q_i |v_n|_V^2 + Q~_i (with C = 1)
    double fitted_C = 0.0;    ///< max lhs/rhs over steps
    int violations = 0;       ///< steps with lhs > C * rhs
};

/// Gradient-level ledger of the a-priori inequality; requires a record made
/// with vledger = true and r <= 3 (disabled above the critical exponent).
VLedgerReport v_ledger(const TrajectoryRecord& rec, double dt, double C, double r, double f_Hf);

/// Diagnostic pressure recovery from w = v + z:
///   -lap p = div div (w (x) w) + beta div(|w|^{r-1} w),
/// homogeneous Neumann, mean-zero pinning.
ScalarField pressure_recover(OperatorWorkspace& ws, const VelocityField& w,
                             const PhysicsParams& params);

/// CSV export with one named column per ledger entry.
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec);

} // namespace scbf

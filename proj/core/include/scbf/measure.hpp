#pragma once

#include "scbf/rds.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scbf {

/// Named pure functionals of a state u; the mode coefficients pair u against
/// stored probe fields (the lowest Stokes eigenfields by default).
struct ObservableSet {
    std::vector<std::string> names;
    std::vector<VelocityField> probes;  ///< probes for the coefficient observables
    double r = 3.0;

    std::vector<double> evaluate(const VelocityField& u) const;
};

ObservableSet make_default_observables(OperatorWorkspace& ws, int k_modes, double r);

struct ObservableStats {
    std::string name;
    std::vector<double> per_seed_mean;  ///< time average after burn-in per seed
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;
};

struct EmpiricalMeasure {
    std::vector<ObservableStats> observables;
    double burn_in = 0.0, horizon = 0.0, dt = 0.0;
    std::vector<std::uint64_t> seeds;
};

/// Time averages of the observables along trajectories started from u0 = 0,
/// one per seed; cross-seed mean, standard error and fixed-bin histograms.
EmpiricalMeasure empirical_measure(Model& model, const std::vector<std::uint64_t>& seeds,
                                   double burn_in, double horizon, double dt,
                                   const ObservableSet& obs, int hist_bins = 32);

struct CouplingReport {
    std::vector<double> t;
    std::vector<double> diff_sq;       ///< |u1 - u2|_{Hf}^2
    std::vector<double> budget;        ///< cumulative right side of the pathwise bound
    int violations = 0;                ///< steps where log diff_sq exceeds the budget
    double fitted_rate = 0.0;          ///< least-squares slope of log diff_sq
    bool rate_defined = false;
    double slack_c = 10.0;
};

/// Two solutions driven by one noise path; per-step check of
///   log|X(t)|^2 <= log|X(0)|^2 - (mu lam1 + 2 alpha) t
///                  + (2/mu) int_0^t |u1|_V^2 + c dt t,
/// with lam1 the measured smallest constrained eigenvalue.
CouplingReport coupling_decay(Model& model, std::uint64_t seed, const VelocityField& u10,
                              const VelocityField& u20, double T, double dt, double lam1,
                              double slack_c = 10.0);

struct ExpMomentReport {
    double eps = 0.0;
    double lhs = 0.0;        ///< Monte-Carlo estimate of E exp(eps(|u|^2 + mu int |u|_V^2))
    double lhs_se = 0.0;
    double bound = 0.0;      ///< exp(eps(|u0|^2 + t/alpha |f|^2 + t Tr))
    double trace = 0.0;      ///< sum_k sigma_k^2 |g_k|_H^2
    bool pass = false;
};

/// Exponential-moment check at time T over the seed list; overflow-guarded
/// (throws std::invalid_argument suggesting a smaller eps).
ExpMomentReport exp_moment_check(Model& model, const std::vector<std::uint64_t>& seeds, double eps,
                                 double T, double dt, const VelocityField& u0);

/// The instantiated uniqueness condition
///   (2/(mu^2 alpha)) |f|^2 + (2/mu^2) Tr <= mu lam1 + 2 alpha,
/// with Tr = sum sigma_k^2 |g_k|_H^2, plus the operator-norm side condition
/// 2/mu^2 <= alpha / (2 max_k sigma_k^2 |g_k|_H^2).
struct UniquenessCondition {
    double lhs = 0.0, rhs = 0.0;
    bool condition_holds = false;
    bool side_condition_holds = false;
};
UniquenessCondition uniqueness_condition(const Model& model, double lam1);

void write_measure_csv(const std::string& path, const EmpiricalMeasure& em);
std::string measure_summary_json(const EmpiricalMeasure& em);

} // namespace scbf

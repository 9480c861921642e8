#pragma once

#include "scbf/rds.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scbf {

/// Finite cloud of states approximating the pullback attractor at time 0.
/// Membership is the evolved ensemble, not a claimed invariant set; the
/// provenance block records exactly how it was produced.
struct AttractorCloud {
    DomainSpec domain;
    std::vector<VelocityField> states;
    std::uint64_t seed = 0;
    double pullback_time = 0.0;  ///< largest pullback time actually used
    int ensemble_size = 0;
    double diameter = 0.0;       ///< pairwise reporting-norm diameter at time 0
    bool converged = false;      ///< diameter < tol was reached within the list
};

/// Run pullback_evolve at increasing times until the bundle diameter falls
/// under `tol` (absolute) or the time list is exhausted; never claims a
/// convergence it did not measure.
AttractorCloud estimate_attractor(const Model& model, const PullbackConfig& cfg, double tol);

/// One-sided Hausdorff semidistance max_{a in A} min_{b in B}
/// |null_expand(a) - b|_{H(O_M)}; B must live on the enclosing domain.
double hausdorff_semidist(const AttractorCloud& A, const AttractorCloud& B);

struct UpperSemiRow {
    std::uint64_t seed = 0;
    int m = 0;
    double d_m = 0.0;
    bool converged = false;
    double diameter = 0.0;
};

struct UpperSemiResult {
    std::vector<UpperSemiRow> rows;
    std::vector<int> m_list;
    int m_ref = 0;
    std::vector<double> median_d;    ///< per m in m_list
    bool shrinks = false;            ///< median d at max(m) < median d at min(m)
    bool nonincreasing = false;      ///< medians nonincreasing within the slack
    double slack = 0.05;
    double ratio_threshold = 0.1;    ///< require d_max <= threshold * d_min
    bool ratio_ok = false;
};

/// Domain-truncation experiment: one shared scalar noise path per seed drives
/// every domain; profiles and forcing are restrictions of the reference-domain
/// fields. d_m is measured against the O_{M_ref} cloud as the surrogate for
/// the full-domain attractor (every computation truncates; the report says
/// so via m_ref).
UpperSemiResult upper_semi_experiment(const std::vector<int>& m_list, int m_ref, double Ly,
                                      double h, const PhysicsParams& params,
                                      const NoiseSpec& base_noise, const VelocityField& f_base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const PullbackConfig& cfg_template, double tol,
                                      double ratio_threshold = 0.1);

/// CSV rows (seed, m, d_m, converged_m, diameter_m) and a JSON summary with
/// medians and verdicts.
void write_upper_semi_csv(const std::string& path, const UpperSemiResult& r);
std::string upper_semi_summary_json(const UpperSemiResult& r);

} // namespace scbf

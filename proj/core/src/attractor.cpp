#include "scbf/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbf {

AttractorCloud estimate_attractor(const Model& model, const PullbackConfig& cfg, double tol) {
    cfg.validate();
    AttractorCloud cloud;
    cloud.domain = model.domain();
    cloud.seed = cfg.seed;
    for (double t : cfg.pullback_times) {
        const PullbackResult res = pullback_evolve(model, cfg, t);
        cloud.states = res.states;
        cloud.pullback_time = t;
        cloud.ensemble_size = static_cast<int>(res.states.size());
        cloud.diameter = res.diameter;
        if (res.diameter < tol) {
            cloud.converged = true;
            break;
        }
    }
    return cloud;
}

double hausdorff_semidist(const AttractorCloud& A, const AttractorCloud& B) {
    if (A.states.empty() || B.states.empty())
        throw std::invalid_argument("hausdorff_semidist: empty cloud");
    if (B.domain.half_width < A.domain.half_width)
        throw std::invalid_argument("hausdorff_semidist: B must live on the enclosing domain");
    double d = 0.0;
    for (const auto& a : A.states) {
        const VelocityField ea =
            A.domain.same_grid(B.domain) ? a : null_expand(a, B.domain);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : B.states) best = std::min(best, norm_H(axpy(ea, -1.0, b)));
        d = std::max(d, best);
    }
    return d;
}

UpperSemiResult upper_semi_experiment(const std::vector<int>& m_list, int m_ref, double Ly,
                                      double h, const PhysicsParams& params,
                                      const NoiseSpec& base_noise, const VelocityField& f_base,
                                      const std::vector<std::uint64_t>& seeds,
                                      const PullbackConfig& cfg_template, double tol,
                                      double ratio_threshold) {
    for (int m : m_list)
        if (m > m_ref)
            throw std::invalid_argument("upper_semi_experiment: all m must be <= M_ref");
    if (seeds.empty()) throw std::invalid_argument("upper_semi_experiment: no seeds");

    UpperSemiResult out;
    out.m_list = m_list;
    out.m_ref = m_ref;
    out.ratio_threshold = ratio_threshold;

    std::vector<int> domains = m_list;
    domains.push_back(m_ref);

    std::vector<std::vector<double>> d_per_m(m_list.size());
    for (std::uint64_t seed : seeds) {
        // reference cloud first, then each truncation against it
        std::vector<AttractorCloud> clouds;
        for (int m : domains) {
            const DomainSpec d = make_domain(m, Ly, h);
            Model model(d, params, base_noise, f_base);
            PullbackConfig cfg = cfg_template;
            cfg.seed = seed;
            clouds.push_back(estimate_attractor(model, cfg, tol));
        }
        const AttractorCloud& ref = clouds.back();
        for (std::size_t i = 0; i < m_list.size(); ++i) {
            UpperSemiRow row;
            row.seed = seed;
            row.m = m_list[i];
            row.d_m = hausdorff_semidist(clouds[i], ref);
            row.converged = clouds[i].converged;
            row.diameter = clouds[i].diameter;
            out.rows.push_back(row);
            d_per_m[i].push_back(row.d_m);
        }
    }

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    for (auto& col : d_per_m) out.median_d.push_back(median(col));

    out.shrinks = out.median_d.back() < out.median_d.front();
    out.nonincreasing = true;
    for (std::size_t i = 1; i < out.median_d.size(); ++i)
        if (out.median_d[i] > out.median_d[i - 1] * (1.0 + out.slack)) out.nonincreasing = false;
    out.ratio_ok = out.median_d.back() <= ratio_threshold * out.median_d.front();
    return out;
}

void write_upper_semi_csv(const std::string& path, const UpperSemiResult& r) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_upper_semi_csv: cannot open " + path);
    os.precision(17);
    os << "seed,m,d_m,converged_m,diameter_m\n";
    for (const auto& row : r.rows)
        os << row.seed << "," << row.m << "," << row.d_m << "," << (row.converged ? 1 : 0) << ","
           << row.diameter << "\n";
}

std::string upper_semi_summary_json(const UpperSemiResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"m_ref\":" << r.m_ref << ",\"m_list\":[";
    for (std::size_t i = 0; i < r.m_list.size(); ++i) os << (i ? "," : "") << r.m_list[i];
    os << "],\"median_d\":[";
    for (std::size_t i = 0; i < r.median_d.size(); ++i) os << (i ? "," : "") << r.median_d[i];
    os << "],\"shrinks\":" << (r.shrinks ? "true" : "false")
       << ",\"nonincreasing_within_slack\":" << (r.nonincreasing ? "true" : "false")
       << ",\"slack\":" << r.slack << ",\"ratio_threshold\":" << r.ratio_threshold
       << ",\"ratio_ok\":" << (r.ratio_ok ? "true" : "false")
       << ",\"note\":\"reference cloud on m_ref is a truncation surrogate for the full-domain attractor\"}";
    return os.str();
}

} // namespace scbf

#include "scbf/noise.hpp"
#include "scbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scbf {

namespace {

constexpr double pi = 3.14159265358979323846;

// counter streams per mode: anchor draw, forward increments, backward increments
constexpr std::uint64_t stream_anchor = 0x10;
constexpr std::uint64_t stream_forward = 0x20;
constexpr std::uint64_t stream_backward = 0x30;

std::uint64_t mode_stream(std::uint64_t base, std::size_t mode) {
    return base + 0x100ull * static_cast<std::uint64_t>(mode + 1);
}

long long near_step(double x, double dt, const char* who) {
    const double q = x / dt;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
        throw std::invalid_argument(std::string(who) + ": time is not a multiple of dt");
    return static_cast<long long>(r);
}

/// Samples y at absolute indices [k0, k1]. y(0) is the anchor (stationary
/// draw or 0); indices > 0 walk the exact transition forward, indices < 0
/// walk backward with an independent increment stream (the stationary OU is
/// reversible, so the backward recursion has the same law).
std::vector<double> sample_window(std::uint64_t seed, std::size_t mode, long long k0, long long k1,
                                  double eta, double dt, bool stationary_init) {
    const double a = std::exp(-eta * dt);
    const double s = std::sqrt((1.0 - a * a) / (2.0 * eta));
    std::vector<double> out(static_cast<std::size_t>(k1 - k0 + 1), 0.0);
    const double y0 = stationary_init ? std::sqrt(0.5 / eta) *
                                            rng::normal(seed, mode_stream(stream_anchor, mode), 0)
                                      : 0.0;
    if (k1 >= 0) {
        double y = y0;
        for (long long n = 0; n <= k1; ++n) {
            if (n >= k0) out[static_cast<std::size_t>(n - k0)] = y;
            if (n < k1)
                y = a * y + s * rng::normal(seed, mode_stream(stream_forward, mode),
                                            static_cast<std::uint64_t>(n));
        }
    }
    if (k0 < 0) {
        double y = y0;
        for (long long n = 0; n < -k0; ++n) {
            y = a * y + s * rng::normal(seed, mode_stream(stream_backward, mode),
                                        static_cast<std::uint64_t>(n));
            const long long idx = -(n + 1);
            if (idx <= k1) out[static_cast<std::size_t>(idx - k0)] = y;
        }
    }
    if (k0 <= 0 && 0 <= k1) out[static_cast<std::size_t>(-k0)] = y0;
    return out;
}

} // namespace

void NoiseSpec::validate() const {
    if (kind == NoiseKind::none) return;
    if (modes.empty()) throw std::invalid_argument("NoiseSpec: at least one mode is required");
    for (const auto& m : modes) {
        if (!(m.eta > 0.0)) throw std::invalid_argument("NoiseSpec: ou damping must be > 0");
        if (!std::isfinite(m.sigma)) throw std::invalid_argument("NoiseSpec: amplitude not finite");
        if (m.profile.empty()) throw std::invalid_argument("NoiseSpec: mode profile missing");
    }
}

VelocityField gaussian_stream_profile(const DomainSpec& d, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("gaussian_stream_profile: s must be > 0");
    const int nx = d.nx, ny = d.ny;
    const double m = d.half_width, Ly = d.height, h = d.spacing;
    const double taper_w = std::min(2.0, 0.25 * m);
    std::vector<double> psi(d.n_nodes());
    auto smoothstep = [](double t) {
        t = std::clamp(t, 0.0, 1.0);
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const double x = -m + i * h;
            const double y = j * h;
            const double taper = smoothstep((m - std::abs(x)) / taper_w);
            psi[static_cast<std::size_t>(j) * (nx + 1) + i] =
                std::exp(-0.5 * x * x / (s * s)) * std::sin(pi * y / Ly) * taper;
        }
    VelocityField g = from_stream(d, psi);
    const double n = norm_H(g);
    if (n > 0.0)
        for (auto* arr : {&g.ux, &g.uy})
            for (double& a : *arr) a /= n;
    return g;
}

std::size_t OUPath::index_of(double t) const {
    const long long k = near_step(t - t_start, dt, "OUPath::index_of");
    if (k < 0 || static_cast<std::size_t>(k) >= n_samples())
        throw std::invalid_argument("OUPath: time outside the sampled window");
    return static_cast<std::size_t>(k);
}

OUPath sample_ou_path(std::uint64_t seed, const NoiseSpec& spec, double t_start, double t_end,
                      double dt, bool stationary_init) {
    spec.validate();
    if (spec.kind == NoiseKind::none)
        throw std::invalid_argument("sample_ou_path: noise kind is none");
    if (!(dt > 0.0)) throw std::invalid_argument("sample_ou_path: dt must be > 0");
    if (!(t_start < t_end)) throw std::invalid_argument("sample_ou_path: empty window");
    const long long k0 = near_step(t_start, dt, "sample_ou_path");
    const long long k1 = near_step(t_end, dt, "sample_ou_path");
    OUPath p;
    p.seed = seed;
    p.dt = dt;
    p.t_start = t_start;
    p.t_end = t_end;
    p.stationary_init = stationary_init;
    p.shift_steps = 0;
    for (std::size_t m = 0; m < spec.n_modes(); ++m) {
        p.eta.push_back(spec.modes[m].eta);
        p.samples.push_back(sample_window(seed, m, k0, k1, spec.modes[m].eta, dt, stationary_init));
    }
    return p;
}

OUPath shift(const OUPath& path, double s) {
    const long long ks = near_step(s, path.dt, "shift");
    OUPath out = path;
    out.shift_steps += ks;
    out.t_start -= s;
    out.t_end -= s;
    return out;
}

OUPath ensure_window(const OUPath& p, double t0, double t1) {
    if (t0 >= p.t_start - 0.5 * p.dt && t1 <= p.t_end + 0.5 * p.dt) return p;
    const double nt0 = std::min(t0, p.t_start);
    const double nt1 = std::max(t1, p.t_end);
    const long long k0 = near_step(nt0, p.dt, "ensure_window") + p.shift_steps;
    const long long k1 = near_step(nt1, p.dt, "ensure_window") + p.shift_steps;
    OUPath out = p;
    out.t_start = nt0;
    out.t_end = nt1;
    for (std::size_t m = 0; m < p.n_modes(); ++m)
        out.samples[m] = sample_window(p.seed, m, k0, k1, p.eta[m], p.dt, p.stationary_init);
    return out;
}

VelocityField evaluate_z(const OUPath& path, const NoiseSpec& spec, double t,
                         const DomainSpec& domain) {
    spec.validate();
    if (spec.kind == NoiseKind::none) return VelocityField(domain);
    if (spec.n_modes() != path.n_modes())
        throw std::invalid_argument("evaluate_z: path and spec mode counts differ");
    VelocityField z(domain);
    for (std::size_t m = 0; m < spec.n_modes(); ++m) {
        const VelocityField g = spec.modes[m].profile.domain.same_grid(domain)
                                    ? spec.modes[m].profile
                                    : restrict_to(spec.modes[m].profile, domain);
        const double c = spec.modes[m].sigma * path.value(m, t);
        z = axpy(z, c, g);
    }
    return z;
}

TemperednessReport temperedness_report(const OUPath& path, const std::vector<double>& deltas) {
    if (path.t_start > 0.0)
        throw std::invalid_argument("temperedness_report: path must cover [-T, 0]");
    TemperednessReport rep;
    rep.deltas = deltas;
    const double T = -path.t_start;
    const std::size_t n0 = path.index_of(0.0);
    rep.decay.resize(deltas.size());
    rep.tail_max.assign(deltas.size(), 0.0);
    for (std::size_t i = 0; i <= n0; ++i) {
        const double t = static_cast<double>(i) * path.dt;  // look back t from time 0
        const double y = path.samples[0][n0 - i];
        rep.times.push_back(t);
        rep.growth_ratio.push_back(t > 0.0 ? std::abs(y) / t : 0.0);
        for (std::size_t d = 0; d < deltas.size(); ++d) {
            const double val = std::exp(-deltas[d] * t) * std::abs(y);
            rep.decay[d].push_back(val);
            if (t >= 0.5 * T) rep.tail_max[d] = std::max(rep.tail_max[d], val);
        }
    }
    return rep;
}

void write_ou_csv(const std::string& file, const OUPath& p) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("write_ou_csv: cannot open " + file);
    os << "t";
    for (std::size_t m = 0; m < p.n_modes(); ++m) os << ",y_" << (m + 1);
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < p.n_samples(); ++i) {
        os << (p.t_start + static_cast<double>(i) * p.dt);
        for (std::size_t m = 0; m < p.n_modes(); ++m) os << "," << p.samples[m][i];
        os << "\n";
    }
}

std::string ou_manifest_json(const OUPath& p, const NoiseSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "{\"seed\":" << p.seed << ",\"kind\":\""
       << (spec.kind == NoiseKind::scalar_ou
               ? "scalar-ou"
               : (spec.kind == NoiseKind::stokes_ou ? "stokes-ou-truncated" : "none"))
       << "\",\"modes\":[";
    for (std::size_t m = 0; m < spec.n_modes(); ++m) {
        if (m) os << ",";
        os << "{\"sigma\":" << spec.modes[m].sigma << ",\"eta\":" << spec.modes[m].eta << "}";
    }
    os << "],\"t_start\":" << p.t_start << ",\"t_end\":" << p.t_end << ",\"dt\":" << p.dt << "}";
    return os.str();
}

} // namespace scbf

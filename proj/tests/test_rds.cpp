#include "scbf/rds.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace scbf;
using namespace scbf::test;

namespace {

NoiseSpec scalar_spec(const DomainSpec& d, double sigma, double eta) {
    NoiseSpec s;
    s.kind = NoiseKind::scalar_ou;
    NoiseMode m;
    m.profile = gaussian_stream_profile(d, 0.5 * d.half_width);
    m.sigma = sigma;
    m.eta = eta;
    s.modes.push_back(std::move(m));
    return s;
}

PhysicsParams contractive() {
    PhysicsParams p;
    p.mu = 1.0;
    p.alpha = 1.0;
    p.beta = 1.0;
    p.r = 3.0;
    p.ell = 1.0;
    return p;
}

} // namespace

TEST_CASE("cocycle at t = 0 is the transform round trip, bit-exact") {
    const DomainSpec d = make_domain(1, 1.0, 0.25);
    Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
    const VelocityField x = random_solenoidal(d, 5);
    const OUPath path = sample_ou_path(8, model.noise(), 0.0, 1.0, 0.1);
    const VelocityField out = cocycle(model, 0.0, path, x, 0.1);
    const NoiseState ns0 = model.noise_state(path, 0.0);
    const VelocityField expect = axpy(axpy(x, -1.0, ns0.z), 1.0, ns0.z);
    CHECK(out.ux == expect.ux);
    CHECK(out.uy == expect.uy);
    CHECK_THROWS_AS((void)cocycle(model, -1.0, path, x, 0.1), std::invalid_argument);
}

TEST_CASE("cocycle property over the shift flow") {
    const DomainSpec d = make_domain(1, 1.0, 0.25);
    PhysicsParams p;
    p.mu = 0.1;
    p.alpha = 0.1;
    p.beta = 0.1;
    p.r = 3.0;
    p.ell = 1.0;
    Model model(d, p, scalar_spec(d, 0.3, 1.0));
    const double dt = 0.01;
    const double s = 0.5, t = 0.7;
    const VelocityField x = random_solenoidal(d, 21);
    const OUPath omega = sample_ou_path(31, model.noise(), 0.0, s + t, dt);
    const VelocityField full = cocycle(model, s + t, omega, x, dt);
    const VelocityField mid = cocycle(model, s, omega, x, dt);
    const VelocityField comp = cocycle(model, t, shift(omega, s), mid, dt);
    CHECK(norm_face(axpy(full, -1.0, comp)) <= 1e-8 * norm_face(x));
}

TEST_CASE("different seeds produce different states") {
    const DomainSpec d = make_domain(1, 1.0, 0.25);
    Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
    const VelocityField x = random_solenoidal(d, 1);
    const VelocityField a = cocycle(model, 1.0, std::uint64_t{111}, x, 0.01);
    const VelocityField b = cocycle(model, 1.0, std::uint64_t{222}, x, 0.01);
    CHECK(norm_face(axpy(a, -1.0, b)) > 1e-12);
}

TEST_CASE("pullback: identical members give zero diameter at every time") {
    const DomainSpec d = make_domain(2, 1.0, 0.25);
    Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
    PullbackConfig cfg;
    cfg.pullback_times = {1.0, 2.0};
    const VelocityField x = random_solenoidal(d, 3);
    cfg.ic_ensemble = {x, x, x};
    cfg.seed = 4;
    cfg.dt = 0.01;
    for (double t : cfg.pullback_times)
        CHECK(pullback_evolve(model, cfg, t).diameter == 0.0);
    CHECK_THROWS_AS((void)pullback_evolve(model, cfg, 3.0), std::invalid_argument);
}

TEST_CASE("pullback contraction in the calibrated regime") {
    const DomainSpec d = make_domain(4, 1.0, 0.25);
    Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
    PullbackConfig cfg;
    cfg.pullback_times = {1.0, 2.0, 4.0};
    cfg.ball_radius = 1.0;
    cfg.ball_count = 4;
    cfg.seed = 17;
    cfg.dt = 0.01;
    // initial bundle diameter
    const std::vector<VelocityField> ics = cfg.make_ensemble(d);
    double d0 = 0.0;
    for (std::size_t a = 0; a < ics.size(); ++a)
        for (std::size_t b = a + 1; b < ics.size(); ++b)
            d0 = std::max(d0, norm_H(axpy(ics[a], -1.0, ics[b])));
    CHECK(d0 > 0.0);
    double prev = d0;
    for (double t : cfg.pullback_times) {
        const double diam = pullback_evolve(model, cfg, t).diameter;
        CHECK(diam <= prev * 1.05 + 1e-14 * d0);  // nonincreasing within slack
        prev = diam;
    }
    CHECK(prev < 1e-3 * d0);
}

TEST_CASE("absorbing radius: trivial, closed-form, and guard cases") {
    const DomainSpec d = make_domain(2, 1.0, 0.25);
    SUBCASE("zero path and zero forcing give zero") {
        Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
        OUPath path = sample_ou_path(5, model.noise(), -20.0, 0.0, 0.1);
        for (double& y : path.samples[0]) y = 0.0;
        const AbsorbingEstimate est = absorbing_radius(model, path, 4.0);
        CHECK(est.L_hat == 0.0);
        CHECK(est.L_star_sq == 0.0);
    }
    SUBCASE("forcing only: the geometric integral in closed form") {
        PhysicsParams p = contractive();
        const VelocityField f = gaussian_stream_profile(d, 1.0);
        Model model(d, p, scalar_spec(d, 0.1, 1.0), f);
        OUPath path = sample_ou_path(5, model.noise(), -60.0, 0.0, 0.1);
        for (double& y : path.samples[0]) y = 0.0;
        const double M = 4.0;
        const AbsorbingEstimate est = absorbing_radius(model, path, M);
        const double fH = norm_face(model.forcing());
        CHECK(est.L_hat == doctest::Approx(M * fH * fH / p.alpha).epsilon(1e-10));
    }
    SUBCASE("r = 1 is rejected") {
        PhysicsParams p = contractive();
        p.r = 1.0;
        Model model(d, p, scalar_spec(d, 0.1, 1.0));
        CHECK_THROWS_AS((void)absorbing_radius(model, std::uint64_t{1}, 10.0, 4.0, 0.1),
                        std::invalid_argument);
    }
    SUBCASE("monotone nondecreasing in the horizon") {
        Model model(d, contractive(), scalar_spec(d, 0.1, 1.0));
        const AbsorbingEstimate a = absorbing_radius(model, std::uint64_t{9}, 10.0, 4.0, 0.1);
        const AbsorbingEstimate b = absorbing_radius(model, std::uint64_t{9}, 20.0, 4.0, 0.1);
        CHECK(b.L_hat >= a.L_hat * (1.0 - 1e-12));
    }
}

TEST_CASE("tail mass: cutoff profile, interior support, annulus oracle, bracket") {
    SUBCASE("cutoff profile shape") {
        CHECK(tail_cutoff_rho(0.5) == 0.0);
        CHECK(tail_cutoff_rho(1.0) == 0.0);
        CHECK(tail_cutoff_rho(2.0) == 1.0);
        CHECK(tail_cutoff_rho(3.0) == 1.0);
        CHECK(tail_cutoff_rho(1.5) == doctest::Approx(0.5));
        // |rho'| <= 15/8 by construction: sample the derivative
        double worst = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            const double s = 1.0 + i / 1000.0;
            const double eps = 1e-6;
            const double der =
                (tail_cutoff_rho(s + eps) - tail_cutoff_rho(s - eps)) / (2.0 * eps);
            worst = std::max(worst, std::abs(der));
        }
        CHECK(worst <= 1.875 * (1.0 + 1e-6));
    }
    SUBCASE("interior-supported field has zero tail") {
        const DomainSpec d = make_domain(4, 1.0, 0.25);
        std::vector<double> psi(d.n_nodes(), 0.0);
        for (int j = 1; j < d.ny; ++j)
            for (int i = 0; i <= d.nx; ++i) {
                const double x = -4.0 + i * 0.25;
                if (std::abs(x) < 1.0)
                    psi[static_cast<std::size_t>(j) * (d.nx + 1) + i] =
                        std::cos(1.5707963267948966 * x);
            }
        const VelocityField v = from_stream(d, psi);
        const TailMass tm = tail_mass(v, 2.0);
        CHECK(tm.smooth == 0.0);
        CHECK(tm.hard == 0.0);
    }
    SUBCASE("constant annulus mass matches the analytic area") {
        const DomainSpec d = make_domain(4, 1.0, 0.25);
        const double c = 0.8, a = 3.0;
        VelocityField v(d);
        for (int j = 0; j < d.ny; ++j)
            for (int i = 0; i <= d.nx; ++i)
                if (std::abs(d.xface_x(i)) >= a) v.x(i, j) = c;
        // strip cells carry c, the two straddling columns carry c/2
        const double analytic =
            c * c * (2.0 * (d.half_width - a) * d.height + d.height * d.spacing / 2.0);
        const TailMass tm = tail_mass(v, 2.0);  // rho == 1 on the whole support
        CHECK(tm.smooth == doctest::Approx(analytic).epsilon(1e-12));
        CHECK(tm.hard == doctest::Approx(analytic).epsilon(1e-12));
    }
    SUBCASE("smooth mass sits between the hard cuts at k and k/sqrt(2)") {
        const DomainSpec d = make_domain(4, 1.0, 0.25);
        for (int s = 0; s < 20; ++s) {
            const VelocityField v = random_solenoidal(d, 800 + s);
            const double k = 2.0;
            const TailMass tm = tail_mass(v, k);
            const double hard_hi = tail_mass(v, k / std::sqrt(2.0)).hard;
            CHECK(tm.smooth >= tm.hard * (1.0 - 1e-12));
            CHECK(tm.smooth <= hard_hi * (1.0 + 1e-12));
        }
    }
    SUBCASE("k >= m is rejected") {
        const DomainSpec d = make_domain(2, 1.0, 0.25);
        CHECK_THROWS_AS((void)tail_mass(VelocityField(d), 2.0), std::invalid_argument);
    }
}

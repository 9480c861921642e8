#pragma once

#include "scbf/domain.hpp"
#include "scbf/rng.hpp"

#include <cmath>
#include <vector>

namespace scbf::test {

/// Independent direct-summation oracle for the reporting H norm: recompute
/// the center interpolation and the quadrature with plain index loops.
inline double oracle_norm_H_sq(const VelocityField& v) {
    const int nx = v.domain.nx, ny = v.domain.ny;
    double s = 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double a = 0.5 * (v.x(i, j) + v.x(i + 1, j));
            const double b = 0.5 * (v.y(i, j) + v.y(i, j + 1));
            s += a * a + b * b;
        }
    return v.domain.cell_area() * s;
}

/// Random raw (not divergence-free) zero-boundary field.
inline VelocityField random_raw(const DomainSpec& d, std::uint64_t seed, double scale = 1.0) {
    VelocityField v(d);
    for (std::size_t k = 0; k < v.ux.size(); ++k) v.ux[k] = scale * rng::normal(seed, 11, k);
    for (std::size_t k = 0; k < v.uy.size(); ++k) v.uy[k] = scale * rng::normal(seed, 12, k);
    v.zero_boundary();
    return v;
}

} // namespace scbf::test

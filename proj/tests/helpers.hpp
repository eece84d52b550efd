#pragma once

// Shared fixtures for the test suite.

#include <complex>
#include <tuple>
#include <vector>

#include "stabilyze/coordinate_chain.hpp"
#include "stabilyze/dynamics_model.hpp"

namespace stabilyze::testing {

inline DynamicsModel make_model(int n, std::complex<double> a, double sigma,
                                std::vector<std::tuple<int, int, std::complex<double>>> f = {}) {
    DynamicsModel m;
    m.n = n;
    m.a = ExactComplex{rat_from_double(a.real()), rat_from_double(a.imag())};
    m.sigma = rat_from_double(sigma);
    for (auto& [k, l, c] : f)
        m.f_coeffs[{k, l}] = ExactComplex{rat_from_double(c.real()), rat_from_double(c.imag())};
    return m;
}

// Bundled n=3 demonstration model: F = 2i z²z̄ + 5i z², whose time-changed
// angular drift near θ=0 is 3θ + 2r⁻¹ + 5r⁻² (chain constants 1/2 and 1).
inline DynamicsModel demo3_model(double sigma = 1.0) {
    return make_model(3, {1, 0}, sigma, {{2, 1, {0, 2}}, {2, 0, {0, 5}}});
}

// The idealized n=3 demonstration operator:
//   L = r∂_r + (3θ + 2r⁻¹ + 5r⁻²)∂_θ + σ²/2 (r⁻³∂_r² + r⁻⁵∂_θ²)
inline PolarOperator demo3_operator(const Rat& sigma = Rat(1)) {
    PolarOperator op;
    op.J = default_truncation(3);
    op.add(Rat(1), 1, 0, 1, 0);
    op.add(Rat(3), 0, 1, 0, 1);
    op.add(Rat(2), -1, 0, 0, 1);
    op.add(Rat(5), -2, 0, 0, 1);
    const Rat h = sigma * sigma / 2;
    op.add(h, -3, 0, 2, 0);
    op.add(h, -5, 0, 0, 2);
    op.canonicalize();
    return op;
}

}  // namespace stabilyze::testing

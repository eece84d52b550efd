#pragma once

// The SDE  dz = [a z^{n+1} + F(z, z̄)] dt + σ dB  as coefficient data, its
// leading-coefficient normalization, and the time-changed polar generator
//   L = r cos(nθ)∂_r + sin(nθ)∂_θ + P∂_r + Q∂_θ + σ²/(2rⁿ)∂_r² + σ²/(2r^{n+2})∂_θ²
// with trigonometric data Taylor-expanded in θ about the wedge center.

#include <complex>
#include <map>
#include <utility>

#include "stabilyze/polar_operator.hpp"

namespace stabilyze {

struct ExactComplex {
    Rat re{0}, im{0};
    std::complex<double> value() const { return {to_double(re), to_double(im)}; }
};

struct DynamicsModel {
    int n = 1;
    ExactComplex a{Rat(1), Rat(0)};
    std::map<std::pair<int, int>, ExactComplex> f_coeffs;  // (k,l) -> coeff of z^k z̄^l
    Rat sigma{1};

    void validate() const;  // throws on a=0, sigma<=0, n<1, or k+l>n

    static DynamicsModel from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    double sigma_d() const { return to_double(sigma); }
};

std::complex<double> eval_drift(const DynamicsModel& model, std::complex<double> z);

// Substitute z = λw, λ the principal n-th root of a⁻¹; returns the w-model
// (a = 1, σ scaled by |λ|⁻¹) and λ.
std::pair<DynamicsModel, std::complex<double>> normalize_leading(const DynamicsModel& model);

// Time-changed generator as a PolarOperator, requires a = 1 exactly.
// J is the truncation order (series kept to θ^{J-1}); must satisfy J > n/2 + 6.
PolarOperator polar_generator(const DynamicsModel& model, int J);

inline int default_truncation(int n) { return n / 2 + 7 + (n % 2); }  // ⌈n/2⌉ + 7

// Exact (untruncated) coefficients of the time-changed generator's first-order
// part at (r, θ): returns {radial, angular} = {r cos nθ + P, sin nθ + Q}.
std::array<double, 2> polar_drift_exact(const DynamicsModel& model, double r, double theta);

}  // namespace stabilyze

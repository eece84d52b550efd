#pragma once

// Differential operators in (r, φ) with Laurent-polynomial coefficients:
// sums of  c · r^a · φ^b · ∂_r^i ∂_φ^k,  the vehicle for the coordinate-chain
// transforms. Coefficients are exact rationals; numeric evaluation goes through
// CompiledOperator (plain doubles) for hot loops.

#include <array>
#include <vector>

#include "stabilyze/rational.hpp"

namespace stabilyze {

struct OpTerm {
    Rat coeff;
    int r_pow = 0;    // may be negative
    int phi_pow = 0;  // >= 0
    int d_r = 0;      // derivative order in r, 0..2
    int d_phi = 0;    // derivative order in φ, 0..2  (d_r + d_phi <= 2)
};

struct PolarOperator {
    std::vector<OpTerm> terms;     // canonical: sorted, merged, no zeros
    int J = 0;                     // angular truncation order; series kept to φ^{J-1}
    double remainder_bound = 0.0;  // C with |dropped part| <= C·|φ|^J for |φ| <= 1

    void add(const Rat& c, int r_pow, int phi_pow, int d_r, int d_phi);
    void canonicalize();

    // Exact coefficient lookup (0 if absent). Operator must be canonical.
    Rat coeff(int r_pow, int phi_pow, int d_r, int d_phi) const;

    // Sum of coefficients multiplying ∂_r^{d_r}∂_φ^{d_phi}, evaluated at (r, φ).
    double eval_coeff(int d_r, int d_phi, double r, double phi) const;

    // Keep only first-order derivative terms (the drift vector field).
    PolarOperator first_order() const;

    // Apply to a function given its derivative values at (r, φ):
    // derivs = {f, f_r, f_φ, f_rr, f_φφ, f_rφ}.
    double apply(const std::array<double, 6>& derivs, double r, double phi) const;
};

// Double-precision mirror of an operator for numeric inner loops.
struct CompiledTerm {
    double coeff;
    int r_pow, phi_pow, d_r, d_phi;
};

struct CompiledOperator {
    std::vector<CompiledTerm> terms;
    explicit CompiledOperator(const PolarOperator& op);
    CompiledOperator() = default;

    double eval_coeff(int d_r, int d_phi, double r, double phi) const;

    // Drift vector field (first-order part): returns (dr/dt, dφ/dt).
    std::array<long double, 2> drift(long double r, long double phi) const;
};

double powi(double base, int e);
long double powi(long double base, int e);

// Append the Taylor series of  pre_cos·cos(mφ) + pre_sin·sin(mφ)  (times r^{r_pow})
// to `op` as coefficients of ∂_r^{d_r}∂_φ^{d_phi}, keeping powers φ^0..φ^{J-1}.
// Returns the tail-bound contribution |pre|·|m|^J·e^{|m|}/J!, valid for |φ| <= 1.
double append_trig_series(PolarOperator& op, const Rat& pre_cos, const Rat& pre_sin, long m,
                          int r_pow, int d_r, int d_phi);

}  // namespace stabilyze

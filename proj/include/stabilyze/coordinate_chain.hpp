#pragma once

// Inductive coordinate transforms φ_m = r φ_{m-1} + c_{m-1} straightening the
// angular drift, the dominant-balance analysis that terminates the chain, and
// the asymptotic operators T_m and A.

#include <vector>

#include "stabilyze/polar_operator.hpp"

namespace stabilyze {

// Rewrite op (coordinates (r, φ_old)) in (r, φ_new), φ_new = r·φ_old + c:
//   ∂_{φ_old} = r ∂_{φ_new},   ∂_r|_{φ_old} = ∂_r|_{φ_new} + (φ_new − c) r⁻¹ ∂_{φ_new},
// with φ_old = (φ_new − c)/r substituted in coefficients. Terms above φ^J or
// below r^{-(n+J+1)} (via max_neg_r_pow) are folded into remainder_bound.
PolarOperator pushforward(const PolarOperator& op, const Rat& c, int max_neg_r_pow);

// Exact inverse of pushforward (φ_old = (φ_new − c)/r); used to certify the
// transform algebra: pullback(pushforward(op, c), c) == op term-for-term when
// nothing was truncated.
PolarOperator pullback(const PolarOperator& op, const Rat& c, int max_neg_r_pow);

struct BalanceReport {
    std::vector<OpTerm> I;    // r ∂_r
    std::vector<OpTerm> II;   // (n+m-2) φ ∂_φ
    std::vector<OpTerm> III;  // γ_i r^{-i} ∂_φ
    std::vector<OpTerm> IV;   // angular diffusion σ²/(2 r^{n-2m+6}) ∂_φ²
    Rat gamma1{0};            // coefficient of r⁻¹ ∂_φ
    bool is_diffusive = false;
};

// Scaling analysis at level m (coordinates (r, φ_m), m >= 2 with φ_2 = θ):
// under r = λR the γ_i r^{-i}∂_φ terms scale as λ^{α-i} and the diffusion
// σ²/(2 r^{e})∂_φ², e = n−2m+6, as λ^{2α−e}; the diffusion survives against
// every drift correction iff e <= 2, which is the chain's stopping rule.
BalanceReport dominant_balance(const PolarOperator& op, int n, int m);

struct CoordinateChain {
    int n = 1;
    int j = 0;                   // n = 2j+1 or 2j+2
    std::vector<Rat> c;          // c_2 .. c_{j+2}   (c[i] = c_{i+2})
    std::vector<Rat> gamma1;     // γ₁^{(m)}, m = 3 .. j+3
    Rat c_next{0};               // c_{j+3} = γ₁^{(j+3)}/(n+j+2); the η-shift for n even
    std::vector<PolarOperator> transformed_ops;  // L_{(r,φ_m)}, m = 3 .. j+3
    std::vector<PolarOperator> asymptotic_ops;   // T_1 .. T_{j+3}
    PolarOperator A;

    Rat c_m(int m) const { return c.at(m - 2); }          // m in [2, j+2]
    Rat gamma1_m(int m) const { return gamma1.at(m - 3); }  // m in [3, j+3]
    const PolarOperator& level_op(int m) const { return transformed_ops.at(m - 3); }

    nlohmann::json to_json() const;
};

// Runs exactly j+1 pushforwards on gen = polar_generator(model); the
// dominant-balance stopping rule is asserted as a cross-check at every level.
CoordinateChain build_chain(const PolarOperator& gen, int n);

// [φ_2 = θ, φ_3, ..., φ_{j+3}] by the affine recursion, in doubles.
std::vector<double> phi_coords(const CoordinateChain& chain, double r, double theta);

// φ_m(r, θ) = r^{m-2} θ + Σ_{i=2}^{m-1} c_i r^{m-1-i} and its (r, θ) partials.
struct PhiAffine {
    double value, d_r, d_theta, d_rr;  // d_rθ = (m-2) r^{m-3}, d_θθ = 0
    double d_rtheta;
};
PhiAffine phi_affine(const CoordinateChain& chain, int m, double r, double theta);

}  // namespace stabilyze

#pragma once

// The piecewise Lyapunov function Ψ: coefficient recurrences, the h⁻ symmetry
// solve, the ψ_1 quadrature profile, the inner-layer exit-moment problem, and
// region-wise evaluation with analytic partial derivatives.

#include <complex>
#include <vector>

#include "stabilyze/exit_moment.hpp"
#include "stabilyze/exponent_table.hpp"
#include "stabilyze/region_atlas.hpp"

namespace stabilyze {

// ψ_1^sign(1, θ) for θ on the same side as sign, by adaptive quadrature of the
// characteristic integral (absolute tolerance 1e-10).
double psi1_value(int n, double p, double q, double theta0, double h1, int sign,
                  double theta);

// The source integral I(θ) = ∫_θ^{sign·θ0} |sin nα|^{p/n} / (|α|^q sin nα) dα.
double psi1_source_integral(int n, double p, double q, double theta0, int sign,
                            double theta);

struct Psi1Profile {
    std::vector<double> theta;  // grid on [theta1, theta0]
    std::vector<double> plus;   // ψ_1^+(1, θ_i)
    std::vector<double> minus;  // ψ_1^-(1, -θ_i)

    nlohmann::json to_json() const;
};

Psi1Profile psi1_profile(int n, double p, double q, double theta0, double theta1,
                         double h1_plus, double h1_minus, int grid);

struct CoefficientTable {
    std::vector<double> h_plus, h_minus;  // h_m^±, m = 1..j+3 (stored at m-1)
    double h_j4 = 0;
    // d_{l,m}^±, rows m = 2..j+3 (stored at m-2), entries l = 1..m
    std::vector<std::vector<double>> d_plus, d_minus;
    std::vector<double> deviations;  // |h_m^+ - h_m^-|

    double d(int sign, int l, int m) const {
        return (sign > 0 ? d_plus : d_minus).at(m - 2).at(l - 1);
    }
    nlohmann::json to_json() const;
};

// b_{l,m}^± and e_m of the coefficient recurrences.
double coeff_b(const ExponentTable& t, const CoordinateChain& chain, double phi_star,
               int sign, int l, int m);
double coeff_e(const ExponentTable& t, double phi_star, int m);

// Default h⁺ ladder: h_1^+ = 0.5·p·(θ0*)^q·|cos nθ0*|, halving down the chain.
std::vector<double> default_h_plus(const ExponentTable& t, const RegionParams& params,
                                   double scale = 1.0);

// Largest admissible h_{j+4}, measured on the innermost boundary of a
// zero-h build: the flux jump across |φ_{j+3}| = η* r^{-s} is affine in
// h_{j+4} with positive slope, so the cap is min(−jump(0)/slope) over
// boundary samples. Returns h_j4_factor times the cap; throws if the zero-h
// jump is not negative everywhere.
class PiecewiseLyapunov;
double default_h_j4(const PiecewiseLyapunov& zero_h, double h_j4_factor = 0.5);

struct HMinusSolve {
    std::vector<double> h_minus;
    std::vector<double> deviations;  // |h_m^+ - h_m^-|
};

// Back-substitutes d_{m,j+3}^+ = d_{m,j+3}^- from m = j+3 down to m = 1.
// Throws if any h_m^- <= 0 (φ* too small).
HMinusSolve solve_h_minus(const ExponentTable& t, const CoordinateChain& chain,
                          const RegionParams& params, const std::vector<double>& h_plus);

// Fills the d-tables for given h ladders (both sides).
CoefficientTable coefficient_table(const ExponentTable& t, const CoordinateChain& chain,
                                   const RegionParams& params,
                                   const std::vector<double>& h_plus,
                                   const std::vector<double>& h_minus, double h_j4);

struct PsiDerivs {
    double value = 0, d_r = 0, d_theta = 0;
    double d_rr = 0, d_thetatheta = 0, d_rtheta = 0;
};

struct LyapunovOptions {
    Rat q_frac{1, 2};        // where in its open interval each diagonal q_m sits
    double h_scale = 1.0;    // scales the default h⁺ ladder
    double h_j4_factor = 0.5;
    std::vector<double> h_plus;  // optional override (size j+3)
    int psi1_grid = 257;
    int exit_min_nodes = 2001;
};

class PiecewiseLyapunov {
  public:
    PiecewiseLyapunov(RegionAtlas atlas, ExponentTable exponents, CoefficientTable coeffs,
                      Psi1Profile profile, std::vector<ExitMomentSolution> exit_cache);

    const RegionAtlas& atlas() const { return atlas_; }
    const ExponentTable& exponents() const { return exponents_; }
    const CoefficientTable& coefficients() const { return coeffs_; }
    const Psi1Profile& profile() const { return profile_; }
    // exit-moment solutions for p_{m,j+4}, m = 1..j+3, then p_{j+4} last
    const std::vector<ExitMomentSolution>& exit_cache() const { return exit_cache_; }

    // classify-and-evaluate on the principal wedge (r >= r*)
    double evaluate(double r, double theta) const;
    // evaluate region id's formula without classification (boundary studies)
    double evaluate_region(int id, double r, double theta) const;
    // value plus analytic (r, θ) partials of region id's formula
    PsiDerivs evaluate_region_derivs(int id, double r, double theta) const;

    // n-fold angular reduction into the principal wedge; constant-in-r cap
    // below r* (continuous at r*)
    double global(std::complex<double> z) const;

    nlohmann::json to_json() const;

  private:
    RegionAtlas atlas_;
    ExponentTable exponents_;
    CoefficientTable coeffs_;
    Psi1Profile profile_;
    std::vector<ExitMomentSolution> exit_cache_;
};

PiecewiseLyapunov build_lyapunov(const RegionAtlas& atlas, const Rat& p, const Rat& q,
                                 const LyapunovOptions& opt = {});

// Convenience: default exponents p = n/2, q at the midpoint of (p/n, 1).
PiecewiseLyapunov build_lyapunov(const RegionAtlas& atlas,
                                 const LyapunovOptions& opt = {});

}  // namespace stabilyze

#pragma once

// Numerical certification of the inequality structure: region-wise generator
// bounds 𝓛ψ_i ≤ -C_i Φ_i + D_i, boundary-flux signs, the symmetry of the
// penultimate form, the generalized Itô flux law for piecewise functions, and
// the Lyapunov-pair supermartingale consequence.

#include <complex>
#include <functional>

#include "stabilyze/lyapunov.hpp"
#include "stabilyze/sde.hpp"

namespace stabilyze {

// The untimechanged generator 𝓛 = r^n (D_r ∂_r + D_θ ∂_θ) + (σ²/2)(∂_rr +
// ∂_θθ/r²) applied to region id's closed form via its analytic partials;
// (D_r, D_θ) is the exact time-changed drift (the σ²/(2r) Laplacian drift
// rides inside D_r).
double apply_generator(const PiecewiseLyapunov& psi, const DynamicsModel& model, int id,
                       double r, double theta);

// Same contraction on raw derivative data (linear in d by construction).
double apply_generator_at(const DynamicsModel& model, const PsiDerivs& d, double r,
                          double theta);

struct RegionFit {
    int id = 0;
    double C = 0, D = 0;        // fitted pair of 𝓛ψ ≤ -C Φ + D
    double phi_exponent = 0;    // Φ = r^{phi_exponent}
    long points = 0;
    std::vector<std::array<double, 3>> violations;  // (r, θ, 𝓛ψ) with 𝓛ψ ≥ 0 in the tail

    nlohmann::json to_json() const;
};

struct PairFit {
    double delta = 0, m = 0, b = 0;
    bool ok = false;  // m > 0 found

    nlohmann::json to_json() const;
};

struct LocalLyapunovReport {
    std::vector<RegionFit> regions;
    PairFit pair;

    long total_violations() const;
    nlohmann::json to_json() const;
};

// Deterministic log-r grid per region (points_per_region each, both signs),
// C fitted on the tail r >= tail_factor·r*, D on the whole grid. The pair fit
// uses δ = 0.9·n/max_i(Φ-exponent) (the exact asymptotic admissibility cap)
// and verifies m > 0 numerically.
LocalLyapunovReport check_local_lyapunov(const PiecewiseLyapunov& psi,
                                         const DynamicsModel& model,
                                         int points_per_region = 1000, double r_max = 1e6,
                                         double tail_factor = 10.0,
                                         bool force_serial = false);

struct FluxSample {
    double r = 0, theta = 0;
    int side = 0;
    double jump = 0;  // oriented outer-minus-inner angular-derivative jump
};

struct FluxBoundary {
    int outer_id = 0, inner_id = 0;
    double max_jump = 0;
    long positive_count = 0;  // samples with jump > tol
    std::vector<FluxSample> samples;

    nlohmann::json to_json() const;
};

struct FluxReport {
    std::vector<FluxBoundary> boundaries;
    bool all_nonpositive = true;

    nlohmann::json to_json() const;
};

// One-sided angular derivatives from the two region forms at shared boundary
// samples; jump > tol counts as a violation. Orientation: side·(∂_θ outer -
// ∂_θ inner) with "outer" the smaller region id.
FluxReport check_flux_signs(const PiecewiseLyapunov& psi, int samples_per_boundary = 100,
                            double r_span = 10.0, double tol = 1e-9);

// max over a grid of |ψ_{j+3}(r,-φ) - ψ_{j+3}(r,φ)| / ψ_{j+3}(r,φ).
double check_symmetry(const PiecewiseLyapunov& psi, int r_points = 24, int phi_points = 24);

// A piecewise-C² test function of one variable with a single kink.
struct PiecewisePhi {
    double boundary = 0;
    std::function<double(double)> value;
    std::function<double(double)> second;  // φ'' away from the kink
    double jump = 0;                       // declared derivative jump (right minus left)
};

struct DynkinReport {
    double t = 0;
    double flux = 0, ci_half = 0;
    double declared_jump = 0;
    bool sign_ok = false;  // estimated Flux sign matches the declared jump sign

    nlohmann::json to_json() const;
};

// Monte Carlo Flux(ξ, t, n_ball) = E φ(x_{t∧τ}) - φ(x0) - E ∫ ½[𝓛φ(+) + 𝓛φ(-)]
// for standard 1-D Brownian motion, time integral by trapezoid, τ the exit
// from |x| <= n_ball.
DynkinReport check_dynkin(const PiecewisePhi& phi, double x0, double t, double dt, long N,
                          std::uint64_t seed, double n_ball = 1e6,
                          bool force_serial = false);

struct PairCheckPoint {
    std::complex<double> z0;
    double t = 0;
    double mean_psi = 0, se = 0, bound = 0;
    bool ok = false;

    nlohmann::json to_json() const;
};

struct LyapunovPairReport {
    std::vector<PairCheckPoint> points;
    double b_used = 0;
    bool all_ok = true;

    nlohmann::json to_json() const;
};

// E Ψ(z_{t∧τ_n}) ≤ Ψ(z0) + b·t within 2 standard errors, τ_n the explosion
// guard of cfg; N paths per (z0, t).
LyapunovPairReport check_lyapunov_pair(const PiecewiseLyapunov& psi,
                                       const DynamicsModel& model,
                                       const std::vector<std::complex<double>>& z0s,
                                       const std::vector<double>& t_grid, double b, long N,
                                       const SimConfig& cfg, bool force_serial = false);

}  // namespace stabilyze

#pragma once

// Invariant-measure estimation: ergodic sampling with effective-sample-size
// metadata, Hill tail-index estimation with plateau selection, the moment
// finiteness frontier diagnostic, and the scaled density lower bound on an
// annulus.

#include <string>
#include <vector>

#include "stabilyze/sde.hpp"

namespace stabilyze {

// Thinned stationary samples; throws if more than 1% of chains hit the
// explosion guard. Fills the effective sample size of |z| ∧ 10 (per-chain
// autocorrelation, initial-positive-sequence cutoff).
SampleSet invariant_samples(const DynamicsModel& model, const SimConfig& cfg,
                            double burn_in, double thin, bool force_serial = false);

std::vector<double> radii(const SampleSet& samples);

// ESS of a chain-major concatenation of `chains` equal-length series.
double effective_sample_size(const std::vector<double>& values, int chains);

struct TailReport {
    std::vector<long> k_grid;
    std::vector<double> hill;  // index estimate per k
    long k_selected = 0;
    double estimate = 0, ci_half = 0;  // 95% CI by asymptotic normality
    double target = 0;
    bool pass = false;

    nlohmann::json to_json() const;
};

// Hill estimator over upper order statistics; k selected by the flattest
// plateau (minimum relative spread over a sliding window of the k-grid).
// Throws if no window is flat enough (tail not resolved).
TailReport tail_exponent(std::vector<double> magnitudes, const std::vector<long>& k_grid,
                         double target, double plateau_tol = 0.2);

struct MomentPoint {
    double gamma = 0;
    double mean = 0;            // running mean at the end of the chain
    double dominance = 0;       // largest single-sample share of the sum of squares
    double log_max_slope = 0;   // slope of log running-max against log index
    bool stabilizing = false;   // dominance <= 0.5

    nlohmann::json to_json() const;
};

struct MomentReport {
    std::vector<MomentPoint> points;  // sorted by gamma
    bool monotone = true;             // no stabilizing gamma above a dominated one

    nlohmann::json to_json() const;
};

MomentReport moment_curve(const SampleSet& samples, std::vector<double> gammas);

struct DensityReport {
    double r1 = 0, r2 = 0;
    int n_r = 0, n_theta = 0;
    long in_annulus = 0, total = 0;
    std::vector<long> counts;   // row-major (r-bin, θ-bin)
    std::vector<double> rho;    // ρ̂ per bin (probability density in the plane)
    std::vector<double> c_hat;  // r^{2n+2}·ρ̂ at the bin's geometric mid-radius
    double min_c = 0;
    double min_c_lcb = 0;  // bootstrap 2.5% quantile of the min bin
    double mass_error = 0;  // |Σ ρ̂·area − annulus fraction|

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Histogram on (log r, θ) bins with the polar Jacobian folded into the bin
// areas; bootstrap (resamples of the full set) for the lower confidence bound
// on the minimum scaled bin. Throws if fewer than 200 samples land in the
// annulus.
DensityReport density_annulus(const SampleSet& samples, int n_model, double r1, double r2,
                              int n_r, int n_theta, std::uint64_t seed,
                              int bootstrap = 200, bool force_serial = false);

}  // namespace stabilyze

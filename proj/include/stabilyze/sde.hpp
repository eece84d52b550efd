#pragma once

// Seeded integration of the SDE dz = [a z^{n+1} + F(z, z̄)] dt + σ dB, the
// adjoint (time-changed) process stopped at |z*| = γ, the 1-D η exit sampler,
// and deterministic drift flows for trajectory checks.

#include <complex>
#include <string>
#include <vector>

#include "stabilyze/dynamics_model.hpp"

namespace stabilyze {

struct SimConfig {
    double dt_max = 1e-3;
    double T = 1.0;                // process-time horizon
    std::uint64_t seed = 1;
    int path_count = 1;
    double blowup_radius = 1e6;    // numerical explosion guard
    double eps_c = 0.1;            // adaptive step: dt = min(dt_max, eps_c/(1+|drift|))
    long max_steps = 400000000;    // hard cap per path
    int store_stride = 1;          // path storage decimation

    void validate() const;  // throws std::invalid_argument on bad fields
};

struct SamplePath {
    std::vector<double> times;                  // strictly increasing
    std::vector<std::complex<double>> states;   // same length
    bool blown_up = false;                      // hit blowup_radius (flag, not error)
    long steps = 0;
    std::uint64_t seed = 0, path_id = 0;
};

// Adaptive Euler-Maruyama; Brownian increments keyed by (seed, path_id, step).
SamplePath simulate_path(const DynamicsModel& model, std::complex<double> z0,
                         const SimConfig& cfg, std::uint64_t path_id = 0);

// dz* = -|z*|^{-(n-1)} (P(z*,z̄*) + σ²(n+1)/z̄*) dt + σ |z*|^{-(n-1)/2} dB,
// stopped at |z*| <= gamma (hit=false means censored at cfg.T).
struct AdjointResult {
    SamplePath path;
    double hit_time = 0;
    bool hit = false;
};
AdjointResult simulate_adjoint(const DynamicsModel& model, std::complex<double> z0,
                               double gamma, const SimConfig& cfg,
                               std::uint64_t path_id = 0);

// Hitting times S_gamma for n_paths independent paths (infinity when censored
// at cfg.T); parallel over paths, order deterministic.
std::vector<double> adjoint_exit_times(const DynamicsModel& model, std::complex<double> z0,
                                       double gamma, const SimConfig& cfg, int n_paths,
                                       bool force_serial = false);

// Monte Carlo E e^{pτ} for dη = ((3/2)n+1)η dt + σ dW exiting (lo, hi), by the
// exact Gaussian transition with step sizes refined near the boundaries.
// Cross-oracle for the exit_moment BVP solver.
struct EtaExitEstimate {
    double mean = 0, ci_half = 0;  // 95% CI half-width
    double mean_tau = 0;
    long n = 0;
};
EtaExitEstimate sample_eta_exit(int n, double sigma, double lo, double hi, double eta0,
                                double p, long N, std::uint64_t seed,
                                bool force_serial = false);

// RK4 on the first-order part of op (the time-changed drift field), fixed dt
// with a half-step error estimate.
struct FlowTrajectory {
    std::vector<double> t, r, theta;
    bool blown_up = false;
    double step_error = 0;  // max state deviation vs the dt/2 run
};
FlowTrajectory deterministic_flow(const PolarOperator& op, double r0, double theta0,
                                  double T, double dt, double blowup_radius = 1e6);

// Thinned stationary samples: cfg.path_count chains to horizon cfg.T, states
// recorded on the fixed process-time grid burn_in + k·interval (grid-based
// rather than per-step, so the adaptive step cannot time-weight the record).
// Chains that hit the explosion guard contribute no samples.
struct SampleSet {
    std::vector<std::complex<double>> z;
    std::uint64_t seed = 0;
    std::string scheme = "euler-maruyama-adaptive";
    double dt_max = 0, burn_in_time = 0, sample_interval = 0, horizon = 0;
    int chains = 0, blowup_count = 0;
    long total_steps = 0;
    double ess = 0;  // effective sample size of |z| ∧ 10 (filled by estimators)

    nlohmann::json metadata() const;
};

SampleSet stationary_samples(const DynamicsModel& model, std::complex<double> z0,
                             const SimConfig& cfg, double burn_in_time,
                             double sample_interval, bool force_serial = false);

}  // namespace stabilyze

#include "stabilyze/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stabilyze/parallel.hpp"
#include "stabilyze/rng.hpp"

namespace stabilyze {

void SimConfig::validate() const {
    if (!(dt_max > 0)) throw std::invalid_argument("SimConfig: dt_max must be positive");
    if (!(T > 0)) throw std::invalid_argument("SimConfig: T must be positive");
    if (path_count < 1) throw std::invalid_argument("SimConfig: path_count must be >= 1");
    if (!(blowup_radius > 0))
        throw std::invalid_argument("SimConfig: blowup_radius must be positive");
    if (!(eps_c > 0)) throw std::invalid_argument("SimConfig: eps_c must be positive");
    if (max_steps < 1 || store_stride < 1)
        throw std::invalid_argument("SimConfig: max_steps and store_stride must be >= 1");
}

SamplePath simulate_path(const DynamicsModel& model, std::complex<double> z0,
                         const SimConfig& cfg, std::uint64_t path_id) {
    cfg.validate();
    model.validate();
    const double sigma = model.sigma_d();
    SamplePath out;
    out.seed = cfg.seed;
    out.path_id = path_id;
    out.times.push_back(0.0);
    out.states.push_back(z0);

    std::complex<double> z = z0;
    double t = 0;
    for (long step = 0; t < cfg.T && step < cfg.max_steps; ++step) {
        const auto drift = eval_drift(model, z);
        double dt = std::min(cfg.dt_max, cfg.eps_c / (1.0 + std::abs(drift)));
        if (t + dt > cfg.T) dt = cfg.T - t;
        const auto g = gaussian_pair(cfg.seed, path_id, std::uint64_t(step));
        z += drift * dt + sigma * std::sqrt(dt) * std::complex<double>(g[0], g[1]);
        t += dt;
        out.steps = step + 1;
        if (std::abs(z) >= cfg.blowup_radius) {
            out.blown_up = true;
            out.times.push_back(t);
            out.states.push_back(z);
            return out;
        }
        if ((step + 1) % cfg.store_stride == 0 || t >= cfg.T) {
            out.times.push_back(t);
            out.states.push_back(z);
        }
    }
    return out;
}

namespace {

std::complex<double> adjoint_drift(const DynamicsModel& model, std::complex<double> z,
                                   double s2) {
    const double az = std::abs(z);
    const auto P = eval_drift(model, z);
    return -std::pow(az, -(model.n - 1)) *
           (P + s2 * double(model.n + 1) / std::conj(z));
}

}  // namespace

AdjointResult simulate_adjoint(const DynamicsModel& model, std::complex<double> z0,
                               double gamma, const SimConfig& cfg, std::uint64_t path_id) {
    cfg.validate();
    model.validate();
    if (z0 == std::complex<double>(0, 0))
        throw std::invalid_argument("simulate_adjoint: z0 must be nonzero");
    if (!(gamma > 0 && std::abs(z0) > gamma))
        throw std::invalid_argument("simulate_adjoint: need |z0| > gamma > 0");

    const double sigma = model.sigma_d();
    const double s2 = sigma * sigma;
    AdjointResult res;
    res.path.seed = cfg.seed;
    res.path.path_id = path_id;
    res.path.times.push_back(0.0);
    res.path.states.push_back(z0);

    std::complex<double> z = z0;
    double t = 0;
    for (long step = 0; t < cfg.T && step < cfg.max_steps; ++step) {
        const auto drift = adjoint_drift(model, z, s2);
        double dt = std::min(cfg.dt_max, cfg.eps_c / (1.0 + std::abs(drift)));
        if (t + dt > cfg.T) dt = cfg.T - t;
        const double diff = sigma * std::pow(std::abs(z), -(model.n - 1) / 2.0);
        const auto g = gaussian_pair(cfg.seed, path_id, std::uint64_t(step));
        z += drift * dt + diff * std::sqrt(dt) * std::complex<double>(g[0], g[1]);
        t += dt;
        res.path.steps = step + 1;
        const bool record = (step + 1) % cfg.store_stride == 0;
        if (std::abs(z) <= gamma) {
            res.hit = true;
            res.hit_time = t;
            res.path.times.push_back(t);
            res.path.states.push_back(z);
            return res;
        }
        if (std::abs(z) >= cfg.blowup_radius) {
            res.path.blown_up = true;
            res.path.times.push_back(t);
            res.path.states.push_back(z);
            return res;
        }
        if (record || t >= cfg.T) {
            res.path.times.push_back(t);
            res.path.states.push_back(z);
        }
    }
    return res;
}

std::vector<double> adjoint_exit_times(const DynamicsModel& model, std::complex<double> z0,
                                       double gamma, const SimConfig& cfg, int n_paths,
                                       bool force_serial) {
    cfg.validate();
    model.validate();
    if (!(gamma > 0 && std::abs(z0) > gamma))
        throw std::invalid_argument("adjoint_exit_times: need |z0| > gamma > 0");
    const double sigma = model.sigma_d();
    const double s2 = sigma * sigma;
    std::vector<double> out(n_paths);
    parallel_for(
        n_paths,
        [&](long pid) {
            std::complex<double> z = z0;
            double t = 0;
            double hit = std::numeric_limits<double>::infinity();
            for (long step = 0; t < cfg.T && step < cfg.max_steps; ++step) {
                const auto drift = adjoint_drift(model, z, s2);
                double dt = std::min(cfg.dt_max, cfg.eps_c / (1.0 + std::abs(drift)));
                if (t + dt > cfg.T) dt = cfg.T - t;
                const double diff = sigma * std::pow(std::abs(z), -(model.n - 1) / 2.0);
                const auto g = gaussian_pair(cfg.seed, std::uint64_t(pid), std::uint64_t(step));
                z += drift * dt + diff * std::sqrt(dt) * std::complex<double>(g[0], g[1]);
                t += dt;
                if (std::abs(z) <= gamma) {
                    hit = t;
                    break;
                }
                if (std::abs(z) >= cfg.blowup_radius) break;
            }
            out[pid] = hit;
        },
        force_serial);
    return out;
}

EtaExitEstimate sample_eta_exit(int n, double sigma, double lo, double hi, double eta0,
                                double p, long N, std::uint64_t seed, bool force_serial) {
    if (!(lo < hi)) throw std::invalid_argument("sample_eta_exit: need lo < hi");
    if (!(eta0 >= lo && eta0 <= hi))
        throw std::invalid_argument("sample_eta_exit: eta0 outside the interval");
    if (!(sigma > 0)) throw std::invalid_argument("sample_eta_exit: need sigma > 0");
    if (p >= 0.5 * (3 * n + 2))
        throw std::invalid_argument("sample_eta_exit: p >= (3n+2)/2, mean diverges");
    if (N < 1) throw std::invalid_argument("sample_eta_exit: need N >= 1");

    const double beta = 1.5 * n + 1.0;
    const double width = hi - lo;
    const double delta_b = 1e-3 * width;                    // boundary resolution
    const double dt_floor = std::pow(0.25 * delta_b / sigma, 2);
    const double dt_cap = 0.05 / beta;

    std::vector<double> vals(N), taus(N);
    parallel_for(
        N,
        [&](long path) {
            double eta = eta0, tau = 0;
            std::uint64_t step = 0;
            while (eta > lo && eta < hi) {
                const double dist = std::min(eta - lo, hi - eta);
                const double dt =
                    std::clamp(std::pow(0.25 * dist / sigma, 2), dt_floor, dt_cap);
                // exact transition of the linear SDE over dt
                const double a = std::exp(beta * dt);
                const double s = sigma * std::sqrt((a * a - 1.0) / (2.0 * beta));
                eta = eta * a + s * gaussian_pair(seed, std::uint64_t(path), step)[0];
                tau += dt;
                if (++step > 20000000)
                    throw std::runtime_error("sample_eta_exit: path failed to exit");
            }
            vals[path] = std::exp(p * tau);
            taus[path] = tau;
        },
        force_serial);

    EtaExitEstimate e;
    e.n = N;
    double sum = 0, sum_tau = 0;
    for (long i = 0; i < N; ++i) {
        sum += vals[i];
        sum_tau += taus[i];
    }
    e.mean = sum / double(N);
    e.mean_tau = sum_tau / double(N);
    double ss = 0;
    for (long i = 0; i < N; ++i) ss += (vals[i] - e.mean) * (vals[i] - e.mean);
    const double sd = std::sqrt(ss / double(std::max<long>(N - 1, 1)));
    e.ci_half = 1.96 * sd / std::sqrt(double(N));
    return e;
}

FlowTrajectory deterministic_flow(const PolarOperator& op, double r0, double theta0,
                                  double T, double dt, double blowup_radius) {
    if (!(dt > 0 && T > 0))
        throw std::invalid_argument("deterministic_flow: need dt > 0, T > 0");
    const CompiledOperator field(op.first_order());

    // state carries Kahan compensation: the e^{ct} instabilities of the flow
    // amplify per-step accumulation roundoff, which plain += cannot afford
    auto kahan_add = [](long double& x, long double& comp, long double inc) {
        const long double y = inc - comp;
        const long double t = x + y;
        comp = (t - x) - y;
        x = t;
    };
    auto rk4 = [&](long double& r, long double& th, long double& cr, long double& cth,
                   long double h) {
        const auto k1 = field.drift(r, th);
        const auto k2 = field.drift(r + 0.5L * h * k1[0], th + 0.5L * h * k1[1]);
        const auto k3 = field.drift(r + 0.5L * h * k2[0], th + 0.5L * h * k2[1]);
        const auto k4 = field.drift(r + h * k3[0], th + h * k3[1]);
        kahan_add(r, cr, h / 6.0L * (k1[0] + 2.0L * k2[0] + 2.0L * k3[0] + k4[0]));
        kahan_add(th, cth, h / 6.0L * (k1[1] + 2.0L * k2[1] + 2.0L * k3[1] + k4[1]));
    };

    FlowTrajectory out;
    const long steps = long(std::ceil(T / dt - 1e-9));
    out.t.reserve(steps + 1);
    out.r.reserve(steps + 1);
    out.theta.reserve(steps + 1);

    long double r = r0, th = theta0, cr = 0, cth = 0;          // full-step state
    long double rh = r0, thh = theta0, crh = 0, cthh = 0;      // half-step reference
    out.t.push_back(0);
    out.r.push_back(r0);
    out.theta.push_back(theta0);
    double err = 0;
    for (long i = 0; i < steps; ++i) {
        const long double h = std::min<long double>(dt, T - i * (long double)dt);
        rk4(r, th, cr, cth, h);
        rk4(rh, thh, crh, cthh, h / 2);
        rk4(rh, thh, crh, cthh, h / 2);
        err = std::max(err, double(std::max(std::fabs(r - rh), std::fabs(th - thh))));
        out.t.push_back(double((i + 1) * (long double)dt));
        // recorded states are Richardson-extrapolated from the two chains,
        // cancelling the leading O(h^4) global error; err stays conservative
        out.r.push_back(double((16.0L * rh - r) / 15.0L));
        out.theta.push_back(double((16.0L * thh - th) / 15.0L));
        if (std::fabs(double(r)) >= blowup_radius) {
            out.blown_up = true;
            break;
        }
    }
    out.step_error = err;
    return out;
}

SampleSet stationary_samples(const DynamicsModel& model, std::complex<double> z0,
                             const SimConfig& cfg, double burn_in_time,
                             double sample_interval, bool force_serial) {
    cfg.validate();
    model.validate();
    if (!(burn_in_time >= 0 && burn_in_time < cfg.T))
        throw std::invalid_argument("stationary_samples: burn-in must lie inside [0, T)");
    if (!(sample_interval > 0))
        throw std::invalid_argument("stationary_samples: sample_interval must be positive");

    const int chains = cfg.path_count;
    const double sigma = model.sigma_d();
    std::vector<std::vector<std::complex<double>>> buf(chains);
    std::vector<long> steps(chains, 0);
    std::vector<char> blown(chains, 0);

    parallel_for(
        chains,
        [&](long chain) {
            std::complex<double> z = z0;
            double t = 0;
            long k = 0;  // grid index: sample times burn_in + k*interval, no drift
            auto next = [&] { return burn_in_time + double(k) * sample_interval; };
            auto& local = buf[chain];
            if (next() <= 0) {
                local.push_back(z);
                ++k;
            }
            for (long step = 0; t < cfg.T && step < cfg.max_steps; ++step) {
                const auto drift = eval_drift(model, z);
                double dt = std::min(cfg.dt_max, cfg.eps_c / (1.0 + std::abs(drift)));
                if (t + dt > cfg.T) dt = cfg.T - t;
                const auto g = gaussian_pair(cfg.seed, std::uint64_t(chain), std::uint64_t(step));
                z += drift * dt + sigma * std::sqrt(dt) * std::complex<double>(g[0], g[1]);
                t += dt;
                steps[chain] = step + 1;
                if (std::abs(z) >= cfg.blowup_radius) {
                    blown[chain] = 1;
                    return;
                }
                while (next() <= t && next() <= cfg.T) {
                    local.push_back(z);
                    ++k;
                }
            }
        },
        force_serial);

    SampleSet set;
    set.seed = cfg.seed;
    set.dt_max = cfg.dt_max;
    set.burn_in_time = burn_in_time;
    set.sample_interval = sample_interval;
    set.horizon = cfg.T;
    set.chains = chains;
    for (int c = 0; c < chains; ++c) {
        set.total_steps += steps[c];
        if (blown[c]) {
            ++set.blowup_count;
            continue;  // flagged chains contribute no samples
        }
        set.z.insert(set.z.end(), buf[c].begin(), buf[c].end());
    }
    return set;
}

nlohmann::json SampleSet::metadata() const {
    return nlohmann::json{{"seed", seed},
                          {"scheme", scheme},
                          {"dt_max", dt_max},
                          {"burn_in_time", burn_in_time},
                          {"sample_interval", sample_interval},
                          {"horizon", horizon},
                          {"chains", chains},
                          {"blowup_count", blowup_count},
                          {"total_steps", total_steps},
                          {"samples", z.size()},
                          {"ess", ess}};
}

}  // namespace stabilyze

#include "stabilyze/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stabilyze/parallel.hpp"
#include "stabilyze/rng.hpp"

namespace stabilyze {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Geyer initial-positive-sequence integrated autocorrelation time of one chain.
double iact(const double* x, long len) {
    if (len < 4) return 1.0;
    double mean = 0;
    for (long i = 0; i < len; ++i) mean += x[i];
    mean /= double(len);
    auto cov = [&](long lag) {
        double s = 0;
        for (long i = 0; i + lag < len; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
        return s / double(len);
    };
    const double c0 = cov(0);
    if (!(c0 > 0)) return 1.0;  // constant chain
    double tau = 1.0;
    for (long m = 0; 2 * m + 2 < len / 2; ++m) {
        const double pair = (cov(2 * m + 1) + cov(2 * m + 2)) / c0;
        if (pair <= 0) break;
        tau += 2.0 * pair;
    }
    return std::max(tau, 1.0);
}

}  // namespace

double effective_sample_size(const std::vector<double>& values, int chains) {
    if (chains < 1) throw std::invalid_argument("effective_sample_size: chains >= 1");
    if (values.empty()) return 0.0;
    const long len = long(values.size()) / chains;
    if (len == 0) return 0.0;
    double ess = 0;
    for (int c = 0; c < chains; ++c) ess += double(len) / iact(values.data() + c * len, len);
    return ess;
}

SampleSet invariant_samples(const DynamicsModel& model, const SimConfig& cfg,
                            double burn_in, double thin, bool force_serial) {
    // start off the distinguished curve; the burn-in forgets the choice
    const std::complex<double> z0 = std::polar(1.0, 0.5);
    SampleSet set = stationary_samples(model, z0, cfg, burn_in, thin, force_serial);
    if (set.blowup_count > 0.01 * set.chains)
        throw std::runtime_error(
            "invariant_samples: more than 1% of chains hit the explosion guard "
            "(reduce dt_max or raise blowup_radius)");

    const int kept = set.chains - set.blowup_count;
    if (kept > 0 && !set.z.empty()) {
        std::vector<double> x(set.z.size());
        for (size_t i = 0; i < set.z.size(); ++i) x[i] = std::min(std::abs(set.z[i]), 10.0);
        set.ess = effective_sample_size(x, kept);
    }
    return set;
}

std::vector<double> radii(const SampleSet& samples) {
    std::vector<double> r(samples.z.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = std::abs(samples.z[i]);
    return r;
}

nlohmann::json TailReport::to_json() const {
    return nlohmann::json{{"k_grid", k_grid},         {"hill", hill},
                          {"k_selected", k_selected}, {"estimate", estimate},
                          {"ci_half", ci_half},       {"target", target},
                          {"pass", pass}};
}

TailReport tail_exponent(std::vector<double> magnitudes, const std::vector<long>& k_grid,
                         double target, double plateau_tol) {
    if (k_grid.size() < 3)
        throw std::invalid_argument("tail_exponent: need at least 3 grid entries");
    std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());

    TailReport rep;
    rep.target = target;
    for (long k : k_grid) {
        if (k < 2 || k + 1 >= long(magnitudes.size()))
            throw std::invalid_argument("tail_exponent: k outside [2, n-1)");
        if (!(magnitudes[k] > 0))
            throw std::invalid_argument("tail_exponent: nonpositive order statistic");
        double h = 0;
        for (long i = 0; i < k; ++i) h += std::log(magnitudes[i] / magnitudes[k]);
        rep.k_grid.push_back(k);
        rep.hill.push_back(double(k) / h);
    }

    // flattest sliding window of the k-grid: minimum relative spread
    const int w = std::max<int>(3, int(rep.hill.size()) / 4);
    double best = std::numeric_limits<double>::infinity();
    int best_at = -1;
    for (int i = 0; i + w <= int(rep.hill.size()); ++i) {
        double lo = rep.hill[i], hi = rep.hill[i], mid = 0;
        for (int l = i; l < i + w; ++l) {
            lo = std::min(lo, rep.hill[l]);
            hi = std::max(hi, rep.hill[l]);
            mid += rep.hill[l];
        }
        mid /= w;
        const double spread = (hi - lo) / std::abs(mid);
        if (spread < best) {
            best = spread;
            best_at = i;
        }
    }
    if (best_at < 0 || best > plateau_tol)
        throw std::runtime_error(
            "tail_exponent: no flat plateau in the Hill curve (tail not resolved; "
            "run a longer chain)");

    const int sel = best_at + w / 2;
    rep.k_selected = rep.k_grid[sel];
    rep.estimate = rep.hill[sel];
    rep.ci_half = 1.96 * rep.estimate / std::sqrt(double(rep.k_selected));
    rep.pass = std::abs(rep.estimate - target) <= rep.ci_half + plateau_tol * target;
    return rep;
}

nlohmann::json MomentPoint::to_json() const {
    return nlohmann::json{{"gamma", gamma},
                          {"mean", mean},
                          {"dominance", dominance},
                          {"log_max_slope", log_max_slope},
                          {"stabilizing", stabilizing}};
}

nlohmann::json MomentReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) pts.push_back(p.to_json());
    return nlohmann::json{{"points", pts}, {"monotone", monotone}};
}

MomentReport moment_curve(const SampleSet& samples, std::vector<double> gammas) {
    if (samples.z.empty()) throw std::invalid_argument("moment_curve: empty sample set");
    std::sort(gammas.begin(), gammas.end());
    const long N = long(samples.z.size());
    std::vector<double> base(N);
    for (long i = 0; i < N; ++i) base[i] = 1.0 + std::abs(samples.z[i]);

    MomentReport rep;
    for (double g : gammas) {
        MomentPoint pt;
        pt.gamma = g;
        double sum = 0, sum2 = 0, maxw = 0;
        // slope of log(running max) against log(index), over update points
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        long updates = 0;
        for (long i = 0; i < N; ++i) {
            const double w = (g == 0.0) ? 1.0 : std::pow(base[i], g);
            sum += w;
            sum2 += w * w;
            if (w > maxw) {
                maxw = w;
                const double x = std::log(double(i + 1)), y = std::log(w);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++updates;
            }
        }
        pt.mean = (g == 0.0) ? 1.0 : sum / double(N);
        // influence of the single largest observation on the mean: its share
        // of the sum of squares (the squared terms drive the standard error,
        // and this share crosses 1/2 exactly where the moment stops being
        // finite for a power-law tail)
        pt.dominance = maxw * maxw / sum2;
        const double den = updates * sxx - sx * sx;
        pt.log_max_slope = (updates >= 2 && den > 0) ? (updates * sxy - sx * sy) / den : 0.0;
        pt.stabilizing = pt.dominance <= 0.5;
        rep.points.push_back(pt);
    }
    for (size_t i = 1; i < rep.points.size(); ++i)
        if (rep.points[i].stabilizing && !rep.points[i - 1].stabilizing) rep.monotone = false;
    return rep;
}

nlohmann::json DensityReport::to_json() const {
    return nlohmann::json{{"r1", r1},
                          {"r2", r2},
                          {"n_r", n_r},
                          {"n_theta", n_theta},
                          {"in_annulus", in_annulus},
                          {"total", total},
                          {"counts", counts},
                          {"rho", rho},
                          {"c_hat", c_hat},
                          {"min_c", min_c},
                          {"min_c_lcb", min_c_lcb},
                          {"mass_error", mass_error}};
}

std::string DensityReport::to_csv() const {
    std::string out = "r_bin,theta_bin,count,rho_hat,c_hat\n";
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_theta; ++j) {
            const int b = i * n_theta + j;
            out += std::to_string(i) + "," + std::to_string(j) + "," +
                   std::to_string(counts[b]) + "," + fmt17(rho[b]) + "," + fmt17(c_hat[b]) +
                   "\n";
        }
    return out;
}

DensityReport density_annulus(const SampleSet& samples, int n_model, double r1, double r2,
                              int n_r, int n_theta, std::uint64_t seed, int bootstrap,
                              bool force_serial) {
    using std::numbers::pi;
    if (!(0 < r1 && r1 < r2)) throw std::invalid_argument("density_annulus: need 0 < r1 < r2");
    if (n_r < 1 || n_theta < 1)
        throw std::invalid_argument("density_annulus: need at least one bin per axis");

    DensityReport rep;
    rep.r1 = r1;
    rep.r2 = r2;
    rep.n_r = n_r;
    rep.n_theta = n_theta;
    rep.total = long(samples.z.size());

    // bin index per sample (-1 outside the annulus); log-spaced radial edges
    const double lstep = std::log(r2 / r1) / n_r;
    const double tstep = 2 * pi / n_theta;
    std::vector<int> bin(samples.z.size(), -1);
    for (size_t i = 0; i < samples.z.size(); ++i) {
        const double r = std::abs(samples.z[i]);
        if (!(r >= r1 && r < r2)) continue;
        int ir = int(std::log(r / r1) / lstep);
        ir = std::clamp(ir, 0, n_r - 1);
        int it = int((std::arg(samples.z[i]) + pi) / tstep);
        it = std::clamp(it, 0, n_theta - 1);
        bin[i] = ir * n_theta + it;
    }

    const int nbins = n_r * n_theta;
    rep.counts.assign(nbins, 0);
    for (int b : bin)
        if (b >= 0) ++rep.counts[b];
    for (long c : rep.counts) rep.in_annulus += c;
    if (rep.in_annulus < 200)
        throw std::runtime_error(
            "density_annulus: fewer than 200 samples in the annulus; run a longer chain");

    std::vector<double> area(nbins), scale(nbins);
    for (int i = 0; i < n_r; ++i) {
        const double rlo = r1 * std::exp(i * lstep), rhi = r1 * std::exp((i + 1) * lstep);
        const double a = tstep * (rhi * rhi - rlo * rlo) / 2.0;
        const double rmid = std::sqrt(rlo * rhi);
        for (int j = 0; j < n_theta; ++j) {
            area[i * n_theta + j] = a;
            scale[i * n_theta + j] = std::pow(rmid, 2 * n_model + 2);
        }
    }

    auto min_scaled = [&](const std::vector<long>& counts) {
        double m = std::numeric_limits<double>::infinity();
        for (int b = 0; b < nbins; ++b)
            m = std::min(m, scale[b] * double(counts[b]) / (double(rep.total) * area[b]));
        return m;
    };

    rep.rho.resize(nbins);
    rep.c_hat.resize(nbins);
    double mass = 0;
    for (int b = 0; b < nbins; ++b) {
        rep.rho[b] = double(rep.counts[b]) / (double(rep.total) * area[b]);
        rep.c_hat[b] = scale[b] * rep.rho[b];
        mass += rep.rho[b] * area[b];
    }
    rep.min_c = min_scaled(rep.counts);
    rep.mass_error = std::abs(mass - double(rep.in_annulus) / double(rep.total));

    // bootstrap over resamples of the full set: min-bin ĉ lower confidence bound
    std::vector<double> mins(bootstrap);
    parallel_for(
        bootstrap,
        [&](long b) {
            std::vector<long> counts(nbins, 0);
            for (long i = 0; i < rep.total; ++i) {
                const long pick =
                    long(uniform01(seed, std::uint64_t(b), std::uint64_t(i)) * rep.total);
                const int bb = bin[std::min(pick, rep.total - 1)];
                if (bb >= 0) ++counts[bb];
            }
            mins[b] = min_scaled(counts);
        },
        force_serial);
    std::sort(mins.begin(), mins.end());
    rep.min_c_lcb = mins[size_t(0.025 * bootstrap)];
    return rep;
}

}  // namespace stabilyze

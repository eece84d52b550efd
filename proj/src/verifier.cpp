#include "stabilyze/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stabilyze/parallel.hpp"
#include "stabilyze/rng.hpp"

namespace stabilyze {

namespace {

// Leading r-exponent of region id's form (the comparison function is
// Φ_i = r^{exponent + n}).
double region_exponent(const PiecewiseLyapunov& psi, int id) {
    const auto& t = psi.exponents();
    if (id <= 1) return to_double(t.p);
    if (id <= t.j + 3) return to_double(t.p_diag(id));
    return to_double(t.p_j4(t.j + 4));
}

// Deterministic sample angles inside region id at radius r on one angular
// side; points that the atlas classifies differently (parametrization slack
// near corners) are dropped by the caller.
std::vector<double> region_thetas(const RegionAtlas& atlas, int id, double r, int sign,
                                  int n_u) {
    const auto& pr = atlas.params();
    const double pi_n = std::numbers::pi / atlas.n();
    const int j = atlas.j();
    std::vector<double> out;
    out.reserve(n_u);
    auto frac = [&](int k) { return (k + 0.5) / n_u; };

    if (id == 0) {
        for (int k = 0; k < n_u; ++k)
            out.push_back(sign * (pr.theta0 + frac(k) * (pi_n - pr.theta0)));
    } else if (id == 1) {
        for (int k = 0; k < n_u; ++k)
            out.push_back(sign * (pr.theta1 + frac(k) * (pr.theta0 - pr.theta1)));
    } else if (id == 2) {
        // between |φ_3| = φ* and |θ| = θ1*, log-spaced in θ
        const double lo =
            std::min(std::abs(atlas.theta_for_phi(3, r, sign * pr.phi_star)) * 1.5,
                     pr.theta1 * 0.5);
        for (int k = 0; k < n_u; ++k)
            out.push_back(sign * lo * std::pow(pr.theta1 / lo, frac(k)));
    } else if (id <= j + 3) {
        // band of the level coordinate: |φ_id| up to φ*, floor where the next
        // level (or the inner scale) takes over
        double lo;
        if (id <= j + 2)
            lo = 2.0 * (pr.phi_star + std::abs(to_double(atlas.chain().c_m(id)))) / r;
        else
            lo = 1.5 * pr.eta_star * std::pow(r, -atlas.inner_scale());
        if (lo >= pr.phi_star) return out;
        for (int k = 0; k < n_u; ++k) {
            const double phi = sign * lo * std::pow(pr.phi_star / lo, frac(k));
            out.push_back(atlas.theta_for_phi(id, r, phi));
        }
    } else {
        // inner layer: |φ_{j+3}| below η* r^{-s}, linear through zero
        const double cap = pr.eta_star * std::pow(r, -atlas.inner_scale());
        for (int k = 0; k < n_u; ++k)
            out.push_back(atlas.theta_for_phi(j + 3, r, sign * frac(k) * cap));
    }
    return out;
}

struct GridPoint {
    int id;
    double r, theta;
};

std::vector<GridPoint> region_grid(const RegionAtlas& atlas, int points_per_region,
                                   double r_max) {
    const int n_u = 5;
    const int n_r = std::max(2, points_per_region / (2 * n_u));
    const double r_lo = 1.05 * atlas.params().r_star;
    if (r_max <= r_lo) throw std::invalid_argument("region_grid: r_max below 1.05 r*");
    const double ratio = std::pow(r_max / r_lo, 1.0 / (n_r - 1));
    const double pi_n = std::numbers::pi / atlas.n();

    std::vector<GridPoint> pts;
    pts.reserve(size_t(atlas.region_count()) * points_per_region);
    for (int id = 0; id < atlas.region_count(); ++id)
        for (int i = 0; i < n_r; ++i) {
            const double r = r_lo * std::pow(ratio, i);
            for (int sign : {+1, -1})
                for (double th : region_thetas(atlas, id, r, sign, n_u)) {
                    if (std::abs(th) > pi_n) continue;
                    if (atlas.classify(r, th) != id) continue;
                    pts.push_back({id, r, th});
                }
        }
    return pts;
}

double mean_and_se(const std::vector<double>& v, double& se) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= std::max<size_t>(1, v.size() - 1);
    se = std::sqrt(var / double(v.size()));
    return mean;
}

}  // namespace

double apply_generator_at(const DynamicsModel& model, const PsiDerivs& d, double r,
                          double theta) {
    const auto drift = polar_drift_exact(model, r, theta);
    const double s2 = model.sigma_d() * model.sigma_d();
    const double rn = std::pow(r, model.n);
    return rn * (drift[0] * d.d_r + drift[1] * d.d_theta) +
           0.5 * s2 * (d.d_rr + d.d_thetatheta / (r * r));
}

double apply_generator(const PiecewiseLyapunov& psi, const DynamicsModel& model, int id,
                       double r, double theta) {
    return apply_generator_at(model, psi.evaluate_region_derivs(id, r, theta), r, theta);
}

nlohmann::json RegionFit::to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : violations) v.push_back({x[0], x[1], x[2]});
    return nlohmann::json{{"id", id},          {"C", C},
                          {"D", D},            {"phi_exponent", phi_exponent},
                          {"points", points},  {"violations", v}};
}

nlohmann::json PairFit::to_json() const {
    return nlohmann::json{{"delta", delta}, {"m", m}, {"b", b}, {"ok", ok}};
}

long LocalLyapunovReport::total_violations() const {
    long s = 0;
    for (const auto& r : regions) s += long(r.violations.size());
    return s;
}

nlohmann::json LocalLyapunovReport::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : regions) rs.push_back(r.to_json());
    return nlohmann::json{{"regions", rs},
                          {"pair", pair.to_json()},
                          {"total_violations", total_violations()}};
}

LocalLyapunovReport check_local_lyapunov(const PiecewiseLyapunov& psi,
                                         const DynamicsModel& model, int points_per_region,
                                         double r_max, double tail_factor,
                                         bool force_serial) {
    const auto& atlas = psi.atlas();
    const auto pts = region_grid(atlas, points_per_region, r_max);
    const long n_pts = long(pts.size());

    std::vector<double> lpsi(n_pts), value(n_pts);
    parallel_for(
        n_pts,
        [&](long i) {
            lpsi[i] = apply_generator(psi, model, pts[i].id, pts[i].r, pts[i].theta);
            value[i] = psi.evaluate_region(pts[i].id, pts[i].r, pts[i].theta);
        },
        force_serial);

    const double tail_r = tail_factor * atlas.params().r_star;
    LocalLyapunovReport report;
    double p_max = 0;
    for (int id = 0; id < atlas.region_count(); ++id) {
        RegionFit fit;
        fit.id = id;
        const double pe = region_exponent(psi, id);
        p_max = std::max(p_max, pe);
        fit.phi_exponent = pe + model.n;
        double max_ratio = -std::numeric_limits<double>::infinity();
        for (long i = 0; i < n_pts; ++i) {
            if (pts[i].id != id) continue;
            ++fit.points;
            if (pts[i].r < tail_r) continue;
            max_ratio = std::max(max_ratio, lpsi[i] / std::pow(pts[i].r, fit.phi_exponent));
            if (lpsi[i] >= 0 && fit.violations.size() < 64)
                fit.violations.push_back({pts[i].r, pts[i].theta, lpsi[i]});
        }
        fit.C = std::isfinite(max_ratio) ? -max_ratio : 0.0;
        double d_max = 0;
        for (long i = 0; i < n_pts; ++i) {
            if (pts[i].id != id) continue;
            d_max = std::max(d_max, lpsi[i] + fit.C * std::pow(pts[i].r, fit.phi_exponent));
        }
        fit.D = d_max;
        report.regions.push_back(std::move(fit));
    }

    // Lyapunov-pair fit 𝓛Ψ ≤ -m Ψ^{1+δ} + b: δ capped by the exact asymptotic
    // admissibility p_i(1+δ) ≤ p_i + n in the steepest region.
    PairFit pair;
    pair.delta = 0.9 * model.n / p_max;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_pts; ++i) {
        if (pts[i].r < tail_r) continue;
        min_ratio = std::min(min_ratio, -lpsi[i] / std::pow(value[i], 1.0 + pair.delta));
    }
    pair.m = std::isfinite(min_ratio) ? min_ratio : 0.0;
    pair.ok = pair.m > 0;
    if (pair.ok) {
        double b = 0;
        for (long i = 0; i < n_pts; ++i)
            b = std::max(b, lpsi[i] + pair.m * std::pow(value[i], 1.0 + pair.delta));
        pair.b = b;
    }
    report.pair = pair;
    return report;
}

nlohmann::json FluxBoundary::to_json() const {
    nlohmann::json ss = nlohmann::json::array();
    for (const auto& s : samples)
        ss.push_back({{"r", s.r}, {"theta", s.theta}, {"side", s.side}, {"jump", s.jump}});
    return nlohmann::json{{"outer_id", outer_id},
                          {"inner_id", inner_id},
                          {"max_jump", max_jump},
                          {"positive_count", positive_count},
                          {"samples", ss}};
}

nlohmann::json FluxReport::to_json() const {
    nlohmann::json bs = nlohmann::json::array();
    for (const auto& b : boundaries) bs.push_back(b.to_json());
    return nlohmann::json{{"boundaries", bs}, {"all_nonpositive", all_nonpositive}};
}

FluxReport check_flux_signs(const PiecewiseLyapunov& psi, int samples_per_boundary,
                            double r_span, double tol) {
    const auto& atlas = psi.atlas();
    const double r0 = atlas.params().r_star;
    FluxReport report;
    for (int a = 0; a + 1 <= atlas.inner_id(); ++a) {
        FluxBoundary fb;
        fb.outer_id = a;
        fb.inner_id = a + 1;
        fb.max_jump = -std::numeric_limits<double>::infinity();
        const auto samples =
            atlas.boundary_samples(a, a + 1, samples_per_boundary, r0, r_span * r0);
        for (const auto& s : samples) {
            const double d_out = psi.evaluate_region_derivs(a, s.r, s.theta).d_theta;
            const double d_in = psi.evaluate_region_derivs(a + 1, s.r, s.theta).d_theta;
            // kink of ∂_θΨ in the increasing-θ direction must be concave
            const double jump = s.side * (d_out - d_in);
            fb.max_jump = std::max(fb.max_jump, jump);
            if (jump > tol * std::max(1.0, std::abs(d_out) + std::abs(d_in)))
                ++fb.positive_count;
            fb.samples.push_back({s.r, s.theta, s.side, jump});
        }
        if (fb.positive_count > 0) report.all_nonpositive = false;
        report.boundaries.push_back(std::move(fb));
    }
    return report;
}

double check_symmetry(const PiecewiseLyapunov& psi, int r_points, int phi_points) {
    const auto& atlas = psi.atlas();
    const auto& pr = atlas.params();
    // r and φ ranges kept moderate: the θ-parametrization of a target φ has
    // backward error ~ ε·|φ_offset(r)|, which the |φ|^{-q} powers amplify, so
    // wide ranges would measure conditioning rather than coefficient symmetry
    const int top = atlas.j() + 3;
    const double r_lo = 1.05 * pr.r_star, r_hi = 3.0 * pr.r_star;
    double worst = 0;
    for (int i = 0; i < r_points; ++i) {
        const double r = r_lo * std::pow(r_hi / r_lo, double(i) / (r_points - 1));
        const double lo = 1.0;
        if (lo >= pr.phi_star) continue;
        for (int k = 0; k < phi_points; ++k) {
            const double phi = lo * std::pow(pr.phi_star / lo, (k + 0.5) / phi_points);
            const double vp =
                psi.evaluate_region(top, r, atlas.theta_for_phi(top, r, phi));
            const double vm =
                psi.evaluate_region(top, r, atlas.theta_for_phi(top, r, -phi));
            worst = std::max(worst, std::abs(vp - vm) / vp);
        }
    }
    return worst;
}

nlohmann::json DynkinReport::to_json() const {
    return nlohmann::json{{"t", t},
                          {"flux", flux},
                          {"ci_half", ci_half},
                          {"declared_jump", declared_jump},
                          {"sign_ok", sign_ok}};
}

DynkinReport check_dynkin(const PiecewisePhi& phi, double x0, double t, double dt, long N,
                          std::uint64_t seed, double n_ball, bool force_serial) {
    if (!(t > 0) || !(dt > 0) || N < 2)
        throw std::invalid_argument("check_dynkin: need t > 0, dt > 0, N >= 2");
    const long steps = long(std::ceil(t / dt));
    std::vector<double> flux(N);
    parallel_for(
        N,
        [&](long k) {
            double x = x0, integral = 0;
            double g_prev = 0.5 * phi.second(x);
            long step = 0;
            double remaining = t;
            bool stopped = false;
            for (long s = 0; s < steps && !stopped; ++s) {
                const double h = std::min(dt, remaining);
                const auto [g1, g2] = gaussian_pair(seed, std::uint64_t(k), step++);
                x += std::sqrt(h) * g1;
                (void)g2;
                remaining -= h;
                const double g_cur = 0.5 * phi.second(x);
                integral += 0.5 * (g_prev + g_cur) * h;
                g_prev = g_cur;
                if (std::abs(x) >= n_ball) stopped = true;
            }
            flux[k] = phi.value(x) - phi.value(x0) - integral;
        },
        force_serial);

    DynkinReport report;
    report.t = t;
    report.declared_jump = phi.jump;
    double se = 0;
    report.flux = mean_and_se(flux, se);
    report.ci_half = 1.96 * se;
    if (phi.jump == 0)
        report.sign_ok = std::abs(report.flux) <= 2 * report.ci_half;
    else
        report.sign_ok =
            report.flux * phi.jump >= 0 || std::abs(report.flux) <= 2 * report.ci_half;
    return report;
}

nlohmann::json PairCheckPoint::to_json() const {
    return nlohmann::json{{"z0_re", z0.real()}, {"z0_im", z0.imag()}, {"t", t},
                          {"mean_psi", mean_psi}, {"se", se},
                          {"bound", bound},       {"ok", ok}};
}

nlohmann::json LyapunovPairReport::to_json() const {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : points) ps.push_back(p.to_json());
    return nlohmann::json{{"points", ps}, {"b_used", b_used}, {"all_ok", all_ok}};
}

LyapunovPairReport check_lyapunov_pair(const PiecewiseLyapunov& psi,
                                       const DynamicsModel& model,
                                       const std::vector<std::complex<double>>& z0s,
                                       const std::vector<double>& t_grid, double b, long N,
                                       const SimConfig& cfg, bool force_serial) {
    if (N < 2) throw std::invalid_argument("check_lyapunov_pair: N >= 2 required");
    LyapunovPairReport report;
    report.b_used = b;
    long point_index = 0;
    for (const auto& z0 : z0s)
        for (double t : t_grid) {
            SimConfig local = cfg;
            local.T = t;
            local.store_stride = std::numeric_limits<int>::max();
            local.seed = cfg.seed + 1000003ull * std::uint64_t(point_index++);
            std::vector<double> vals(N);
            parallel_for(
                N,
                [&](long k) {
                    const auto path =
                        simulate_path(model, z0, local, std::uint64_t(k));
                    vals[k] = psi.global(path.states.back());
                },
                force_serial);
            PairCheckPoint pt;
            pt.z0 = z0;
            pt.t = t;
            pt.mean_psi = mean_and_se(vals, pt.se);
            pt.bound = psi.global(z0) + b * t;
            pt.ok = pt.mean_psi <= pt.bound + 2 * pt.se;
            if (!pt.ok) report.all_ok = false;
            report.points.push_back(pt);
        }
    return report;
}

}  // namespace stabilyze

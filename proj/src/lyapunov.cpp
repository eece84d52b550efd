#include "stabilyze/lyapunov.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stabilyze {

namespace {

double sgn(double x) { return x < 0 ? -1.0 : 1.0; }

// integrand of the ψ_1 characteristic integral
double psi1_integrand(int n, double p, double q, double alpha) {
    const double w = std::sin(n * alpha);
    return std::pow(std::abs(w), p / n) / (std::pow(std::abs(alpha), q) * w);
}

double den_m(const ExponentTable& t, int m) {
    // q_m(n+m-2) - p_m, positive by the admissible q_m interval
    return to_double(t.q_diag(m)) * (t.n + m - 2) - to_double(t.p_diag(m));
}

}  // namespace

double psi1_source_integral(int n, double p, double q, double theta0, int sign,
                            double theta) {
    const double upper = sign > 0 ? theta0 : -theta0;
    auto f = [&](double a) { return psi1_integrand(n, p, q, a); };
    double error = 0;
    double val;
    if (theta <= upper)
        val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, theta, upper, 15, 1e-12, &error);
    else
        val = -boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, upper, theta, 15, 1e-12, &error);
    if (!(error <= 1e-10 * (1.0 + std::abs(val))))
        throw std::runtime_error("psi1 quadrature failed to converge");
    return val;
}

double psi1_value(int n, double p, double q, double theta0, double h1, int sign,
                  double theta) {
    // the homogeneous constant |sin nθ0|^{p/n} enforces ψ_1(1, ±θ0) = 1
    const double s = std::abs(std::sin(n * theta));
    const double base = std::pow(std::abs(std::sin(n * theta0)), p / n);
    const double I = psi1_source_integral(n, p, q, theta0, sign, theta);
    return std::pow(s, -p / n) * (base + h1 * I);
}

Psi1Profile psi1_profile(int n, double p, double q, double theta0, double theta1,
                         double h1_plus, double h1_minus, int grid) {
    if (grid < 2) throw std::invalid_argument("psi1_profile: need at least 2 nodes");
    Psi1Profile out;
    out.theta.resize(grid);
    out.plus.resize(grid);
    out.minus.resize(grid);
    for (int i = 0; i < grid; ++i) {
        const double th = theta1 + (theta0 - theta1) * i / double(grid - 1);
        out.theta[i] = th;
        out.plus[i] = psi1_value(n, p, q, theta0, h1_plus, +1, th);
        out.minus[i] = psi1_value(n, p, q, theta0, h1_minus, -1, -th);
    }
    return out;
}

nlohmann::json Psi1Profile::to_json() const {
    return nlohmann::json{{"theta", theta}, {"plus", plus}, {"minus", minus}};
}

double coeff_b(const ExponentTable& t, const CoordinateChain& chain, double phi_star,
               int sign, int l, int m) {
    const double c = to_double(chain.c_m(m - 1));
    const double denom_base = sign > 0 ? std::abs(c - phi_star) : std::abs(c + phi_star);
    return std::pow(phi_star, to_double(t.q_lm(l, m))) /
           std::pow(denom_base, to_double(t.q_lm(l, m - 1)));
}

double coeff_e(const ExponentTable& t, double phi_star, int m) {
    return std::pow(phi_star, to_double(t.q_lm(m - 1, m) - t.q_lm(m, m)));
}

std::vector<double> default_h_plus(const ExponentTable& t, const RegionParams& params,
                                   double scale) {
    const double p = to_double(t.p), q = to_double(t.q);
    std::vector<double> h(t.j + 3);
    h[0] = scale * 0.5 * p * std::pow(params.theta0, q) *
           std::abs(std::cos(t.n * params.theta0));
    for (int m = 1; m < t.j + 3; ++m) h[m] = h[m - 1] / 2.0;
    return h;
}

double default_h_j4(const PiecewiseLyapunov& zero_h, double h_j4_factor) {
    const auto& atlas = zero_h.atlas();
    const int J = atlas.inner_id() - 1;  // j+3

    auto bumped_coeffs = zero_h.coefficients();
    bumped_coeffs.h_j4 += 1.0;
    const PiecewiseLyapunov bumped(atlas, zero_h.exponents(), bumped_coeffs,
                                   zero_h.profile(), zero_h.exit_cache());

    const double rs = atlas.params().r_star;
    const auto pts = atlas.boundary_samples(J, J + 1, 9, rs, 100 * rs);
    double cap = std::numeric_limits<double>::infinity();
    for (const auto& s : pts) {
        auto jump = [&](const PiecewiseLyapunov& psi) {
            return s.side * (psi.evaluate_region_derivs(J, s.r, s.theta).d_theta -
                             psi.evaluate_region_derivs(J + 1, s.r, s.theta).d_theta);
        };
        const double j0 = jump(zero_h);
        const double slope = jump(bumped) - j0;
        if (slope > 0) cap = std::min(cap, -j0 / slope);
    }
    if (!(cap > 0) || !std::isfinite(cap))
        throw std::runtime_error("default_h_j4: the zero-h flux jump is not negative");
    return h_j4_factor * cap;
}

HMinusSolve solve_h_minus(const ExponentTable& t, const CoordinateChain& chain,
                          const RegionParams& params, const std::vector<double>& h_plus) {
    const int n = t.n, M = t.j + 3;
    if (int(h_plus.size()) != M)
        throw std::invalid_argument("solve_h_minus: h_plus must have j+3 entries");
    const double phi_star = params.phi_star;
    const double p = to_double(t.p), q = to_double(t.q);

    std::vector<double> hm(M, 0.0);          // h_m^- at m-1
    std::vector<double> dp(M + 1), dm(M + 1);  // diagonal d_{m,m}^± at index m
    for (int m = 2; m <= M; ++m) dp[m] = h_plus[m - 1] / den_m(t, m);

    // m = j+3: the diagonal identity forces h^- = h^+
    hm[M - 1] = h_plus[M - 1];
    dm[M] = dp[M];

    // back-substitution on d_{m,j+3}^+ = d_{m,j+3}^- down to m = 2
    for (int m = M - 1; m >= 2; --m) {
        const double bp1 = coeff_b(t, chain, phi_star, +1, m, m + 1);
        const double bm1 = coeff_b(t, chain, phi_star, -1, m, m + 1);
        const double em1 = coeff_e(t, phi_star, m + 1);
        double tail_p = 1.0, tail_m = 1.0;
        for (int k = m + 2; k <= M; ++k) {
            tail_p *= coeff_b(t, chain, phi_star, +1, m, k);
            tail_m *= coeff_b(t, chain, phi_star, -1, m, k);
        }
        const double d_mj_plus = (dp[m] * bp1 - dp[m + 1] * em1) * tail_p;
        dm[m] = (d_mj_plus / tail_m + dm[m + 1] * em1) / bm1;
        hm[m - 1] = dm[m] * den_m(t, m);
    }

    // m = 1: d_{1,j+3}^± = d_{1,2}^± Π b_{1,k}^±, then ψ_1 makes h_1^- linear
    const double theta1 = params.theta1, theta0 = params.theta0;
    const double qn_p = q * n - p;
    double ratio = 1.0;
    for (int k = 3; k <= M; ++k)
        ratio *= coeff_b(t, chain, phi_star, +1, 1, k) /
                 coeff_b(t, chain, phi_star, -1, 1, k);
    const double d12_plus = std::pow(theta1, p / n) *
                                psi1_value(n, p, q, theta0, h_plus[0], +1, theta1) -
                            h_plus[1] * std::pow(theta1, p / n - q) / qn_p;
    const double d12_minus = d12_plus * ratio;
    const double I1 = psi1_source_integral(n, p, q, theta0, -1, -theta1);
    const double s1 = std::abs(std::sin(n * theta1));
    const double base = std::pow(std::abs(std::sin(n * theta0)), p / n);
    hm[0] = ((d12_minus + hm[1] * std::pow(theta1, p / n - q) / qn_p) *
                 std::pow(s1, p / n) * std::pow(theta1, -p / n) -
             base) /
            I1;

    HMinusSolve out;
    out.h_minus = hm;
    out.deviations.resize(M);
    for (int m = 0; m < M; ++m) {
        if (!(hm[m] > 0))
            throw std::runtime_error("solve_h_minus: nonpositive h^- (phi* too small)");
        out.deviations[m] = std::abs(h_plus[m] - hm[m]);
    }
    return out;
}

CoefficientTable coefficient_table(const ExponentTable& t, const CoordinateChain& chain,
                                   const RegionParams& params,
                                   const std::vector<double>& h_plus,
                                   const std::vector<double>& h_minus, double h_j4) {
    const int n = t.n, M = t.j + 3;
    if (int(h_plus.size()) != M || int(h_minus.size()) != M)
        throw std::invalid_argument("coefficient_table: h ladders must have j+3 entries");
    for (double h : h_plus)
        if (!(h > 0)) throw std::invalid_argument("coefficient_table: h_plus must be positive");
    const double p = to_double(t.p), q = to_double(t.q);
    const double qn_p = q * n - p;
    if (!(qn_p > 0)) throw std::invalid_argument("coefficient_table: qn - p <= 0");

    CoefficientTable out;
    out.h_plus = h_plus;
    out.h_minus = h_minus;
    out.h_j4 = h_j4;
    out.deviations.resize(M);
    for (int m = 0; m < M; ++m) out.deviations[m] = std::abs(h_plus[m] - h_minus[m]);

    auto fill = [&](const std::vector<double>& h, int sign) {
        std::vector<std::vector<double>> d;
        const double psi1_at = psi1_value(n, p, q, params.theta0, h[0], sign,
                                          sign * params.theta1);
        const double d12 = std::pow(params.theta1, p / n) * psi1_at -
                           h[1] * std::pow(params.theta1, p / n - q) / qn_p;
        d.push_back({d12, h[1] / qn_p});
        for (int m = 3; m <= M; ++m) {
            const double denom = den_m(t, m);
            if (!(denom > 0))
                throw std::invalid_argument("coefficient_table: q_m(n+m-2) - p_m <= 0");
            std::vector<double> row(m);
            for (int l = 1; l <= m - 2; ++l)
                row[l - 1] = d.back()[l - 1] * coeff_b(t, chain, params.phi_star, sign, l, m);
            row[m - 1] = h[m - 1] / denom;
            row[m - 2] = d.back()[m - 2] * coeff_b(t, chain, params.phi_star, sign, m - 1, m) -
                         row[m - 1] * coeff_e(t, params.phi_star, m);
            d.push_back(std::move(row));
        }
        return d;
    };
    out.d_plus = fill(h_plus, +1);
    out.d_minus = fill(h_minus, -1);
    return out;
}

nlohmann::json CoefficientTable::to_json() const {
    return nlohmann::json{{"h_plus", h_plus},   {"h_minus", h_minus},
                          {"h_j4", h_j4},       {"d_plus", d_plus},
                          {"d_minus", d_minus}, {"deviations", deviations}};
}

PiecewiseLyapunov::PiecewiseLyapunov(RegionAtlas atlas, ExponentTable exponents,
                                     CoefficientTable coeffs, Psi1Profile profile,
                                     std::vector<ExitMomentSolution> exit_cache)
    : atlas_(std::move(atlas)),
      exponents_(std::move(exponents)),
      coeffs_(std::move(coeffs)),
      profile_(std::move(profile)),
      exit_cache_(std::move(exit_cache)) {}

double PiecewiseLyapunov::evaluate(double r, double theta) const {
    return evaluate_region(atlas_.classify(r, theta), r, theta);
}

double PiecewiseLyapunov::evaluate_region(int id, double r, double theta) const {
    return evaluate_region_derivs(id, r, theta).value;
}

PsiDerivs PiecewiseLyapunov::evaluate_region_derivs(int id, double r, double theta) const {
    const auto& t = exponents_;
    const auto& chain = atlas_.chain();
    const int n = t.n, j = t.j;
    const double p = to_double(t.p), q = to_double(t.q);
    PsiDerivs out;

    if (id == 0) {
        out.value = std::pow(r, p);
        out.d_r = p * std::pow(r, p - 1);
        out.d_rr = p * (p - 1) * std::pow(r, p - 2);
        return out;
    }

    if (id == 1) {
        // ψ_1 = r^p g(θ) with g analytic from the characteristic solution
        const int sign = theta >= 0 ? +1 : -1;
        const double h1 = sign > 0 ? coeffs_.h_plus[0] : coeffs_.h_minus[0];
        const double w = std::sin(n * theta), cw = std::cos(n * theta);
        const double sg = sgn(w);
        const double s = std::abs(w);
        const double a = -p / n;
        const double ds = n * cw * sg, dds = -n * n * s;
        const double A = std::pow(s, a);
        const double dA = a * std::pow(s, a - 1) * ds;
        const double ddA = a * (a - 1) * std::pow(s, a - 2) * ds * ds +
                           a * std::pow(s, a - 1) * dds;
        const double theta0 = atlas_.params().theta0;
        const double G = std::pow(std::abs(std::sin(n * theta0)), p / n) +
                         h1 * psi1_source_integral(n, p, q, theta0, sign, theta);
        const double f = psi1_integrand(n, p, q, theta);
        // f = sg·s^{p/n-1}|θ|^{-q}
        const double df =
            sg * ((p / n - 1) * std::pow(s, p / n - 2) * ds * std::pow(std::abs(theta), -q) +
                  std::pow(s, p / n - 1) * (-q) * std::pow(std::abs(theta), -q - 1) *
                      sgn(theta));
        const double g = A * G;
        const double dg = dA * G - A * h1 * f;
        const double ddg = ddA * G - 2.0 * dA * h1 * f - A * h1 * df;
        const double rp = std::pow(r, p);
        out.value = rp * g;
        out.d_r = p * rp / r * g;
        out.d_rr = p * (p - 1) * rp / (r * r) * g;
        out.d_theta = rp * dg;
        out.d_thetatheta = rp * ddg;
        out.d_rtheta = p * rp / r * dg;
        return out;
    }

    if (id <= j + 3) {
        // ψ_m = Σ_l d_l r^{p_l} |φ_m|^{-q_l}
        const int m = id;
        const auto aff = phi_affine(chain, m, r, theta);
        const double phi = aff.value;
        const int sign = phi >= 0 ? +1 : -1;
        const double s = std::abs(phi), sg = sgn(phi);
        for (int l = 1; l <= m; ++l) {
            const double d = coeffs_.d(sign, l, m);
            const double pl = to_double(t.p_lm(l, m)), ql = to_double(t.q_lm(l, m));
            const double rp = std::pow(r, pl);
            const double sq = std::pow(s, -ql);
            const double sq1 = -ql * std::pow(s, -ql - 1) * sg;       // d/dφ |φ|^{-q}
            const double sq2 = ql * (ql + 1) * std::pow(s, -ql - 2);  // d²/dφ²
            out.value += d * rp * sq;
            out.d_r += d * (pl * rp / r * sq + rp * sq1 * aff.d_r);
            out.d_theta += d * rp * sq1 * aff.d_theta;
            out.d_thetatheta += d * rp * sq2 * aff.d_theta * aff.d_theta;
            out.d_rr += d * (pl * (pl - 1) * rp / (r * r) * sq +
                             2.0 * pl * rp / r * sq1 * aff.d_r +
                             rp * (sq2 * aff.d_r * aff.d_r + sq1 * aff.d_rr));
            out.d_rtheta += d * (pl * rp / r * sq1 * aff.d_theta +
                                 rp * (sq2 * aff.d_r * aff.d_theta + sq1 * aff.d_rtheta));
        }
        return out;
    }

    if (id != j + 4) throw std::invalid_argument("evaluate_region: bad region id");

    // ψ_{j+4}: exit-moment representation in η
    const auto aff = phi_affine(chain, j + 3, r, theta);
    const bool odd = atlas_.odd();
    double eta, eta_r, eta_th, eta_rr, eta_rth;
    if (odd) {
        const double rs = std::sqrt(r);
        eta = rs * aff.value;
        eta_r = 0.5 * aff.value / rs + rs * aff.d_r;
        eta_th = rs * aff.d_theta;
        eta_rr = -0.25 * aff.value / (rs * r) + aff.d_r / rs + rs * aff.d_rr;
        eta_rth = 0.5 * aff.d_theta / rs + rs * aff.d_rtheta;
    } else {
        const double cnext = to_double(chain.c_next);
        eta = r * aff.value + cnext;
        eta_r = aff.value + r * aff.d_r;
        eta_th = r * aff.d_theta;
        eta_rr = 2.0 * aff.d_r + r * aff.d_rr;
        eta_rth = aff.d_theta + r * aff.d_rtheta;
    }
    const double eta_star = atlas_.params().eta_star;
    for (int m = 1; m <= j + 4; ++m) {
        const auto& sol = exit_cache_.at(m - 1);
        double cm, am;
        bool subtract_one = false;
        if (m <= j + 3) {
            cm = coeffs_.d(+1, m, j + 3) /
                 std::pow(eta_star, to_double(t.q_lm(m, j + 3)));
            am = to_double(t.p_j4(m));
        } else {
            cm = coeffs_.h_j4 / to_double(t.p_j4(j + 4));
            am = to_double(t.p_j4(j + 4));
            subtract_one = true;
        }
        const double u = sol.u_at(eta) - (subtract_one ? 1.0 : 0.0);
        const double du = sol.du_at(eta);
        const double ddu = sol.ddu_at(eta);
        const double rp = std::pow(r, am);
        out.value += cm * rp * u;
        out.d_r += cm * (am * rp / r * u + rp * du * eta_r);
        out.d_theta += cm * rp * du * eta_th;
        out.d_thetatheta += cm * rp * ddu * eta_th * eta_th;
        out.d_rr += cm * (am * (am - 1) * rp / (r * r) * u + 2.0 * am * rp / r * du * eta_r +
                          rp * (ddu * eta_r * eta_r + du * eta_rr));
        out.d_rtheta += cm * (am * rp / r * du * eta_th +
                              rp * (ddu * eta_r * eta_th + du * eta_rth));
    }
    return out;
}

double PiecewiseLyapunov::global(std::complex<double> z) const {
    const int n = atlas_.n();
    const double r = std::abs(z);
    const double theta = std::remainder(std::arg(z), 2.0 * std::numbers::pi / n);
    const double rs = atlas_.params().r_star;
    return evaluate(std::max(r, rs), theta);
}

nlohmann::json PiecewiseLyapunov::to_json() const {
    nlohmann::json exits = nlohmann::json::array();
    for (const auto& s : exit_cache_) exits.push_back(s.to_json());
    return nlohmann::json{{"atlas", atlas_.to_json()},
                          {"exponents", exponents_.to_json()},
                          {"coefficients", coeffs_.to_json()},
                          {"psi1_profile", profile_.to_json()},
                          {"exit_moments", exits}};
}

PiecewiseLyapunov build_lyapunov(const RegionAtlas& atlas, const Rat& p, const Rat& q,
                                 const LyapunovOptions& opt) {
    const int n = atlas.n();
    const auto& chain = atlas.chain();
    auto t = exponent_table(n, p, q, opt.q_frac);

    auto h_plus = opt.h_plus.empty() ? default_h_plus(t, atlas.params(), opt.h_scale)
                                     : opt.h_plus;
    auto hsolve = solve_h_minus(t, chain, atlas.params(), h_plus);
    auto coeffs = coefficient_table(t, chain, atlas.params(), h_plus, hsolve.h_minus, 0.0);

    auto profile = psi1_profile(n, to_double(t.p), to_double(t.q), atlas.params().theta0,
                                atlas.params().theta1, h_plus[0], hsolve.h_minus[0],
                                opt.psi1_grid);

    // σ²/2 is the angular-diffusion weight of A
    const Rat half_s2 = chain.A.coeff(atlas.odd() ? -1 : -2, 0, 0, 2);
    const double sigma = std::sqrt(2.0 * to_double(half_s2));
    const double eta_star = atlas.params().eta_star;
    const double shift = atlas.odd() ? 0.0 : to_double(chain.c_next);
    std::vector<ExitMomentSolution> exits;
    for (int m = 1; m <= t.j + 3; ++m)
        exits.push_back(exit_moment(to_double(t.p_j4(m)), n, sigma, -eta_star + shift,
                                    eta_star + shift, opt.exit_min_nodes));
    exits.push_back(exits.back());  // p_{j+4} = p_{j+3,j+4}: identical problem

    PiecewiseLyapunov psi(atlas, std::move(t), std::move(coeffs), std::move(profile),
                          std::move(exits));
    auto final_coeffs = psi.coefficients();
    final_coeffs.h_j4 = default_h_j4(psi, opt.h_j4_factor);
    return PiecewiseLyapunov(atlas, psi.exponents(), std::move(final_coeffs), psi.profile(),
                             psi.exit_cache());
}

PiecewiseLyapunov build_lyapunov(const RegionAtlas& atlas, const LyapunovOptions& opt) {
    const Rat p(atlas.n(), 2);
    const Rat pn = p / atlas.n();
    const Rat q = (pn + 1) / 2;
    return build_lyapunov(atlas, p, q, opt);
}

}  // namespace stabilyze

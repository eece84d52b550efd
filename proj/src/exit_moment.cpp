#include "stabilyze/exit_moment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stabilyze {

namespace {

// Central second-order scheme with Dirichlet data u = 1 at both ends; the
// tridiagonal system is solved by the Thomas algorithm.
std::vector<double> solve_grid(double p, double beta, double sigma, double lo, double hi,
                               int nodes) {
    const int n_in = nodes - 2;  // interior unknowns
    const double h = (hi - lo) / double(nodes - 1);
    const double dif = sigma * sigma / (2.0 * h * h);
    std::vector<double> a(n_in), b(n_in), c(n_in), rhs(n_in, 0.0);
    for (int i = 0; i < n_in; ++i) {
        const double eta = lo + (i + 1) * h;
        const double adv = beta * eta / (2.0 * h);
        a[i] = dif - adv;        // u_{i-1}
        b[i] = -2.0 * dif + p;   // u_i
        c[i] = dif + adv;        // u_{i+1}
    }
    rhs[0] -= a[0];          // u(lo) = 1
    rhs[n_in - 1] -= c[n_in - 1];  // u(hi) = 1

    for (int i = 1; i < n_in; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> u(nodes);
    u.front() = u.back() = 1.0;
    u[n_in] = rhs[n_in - 1] / b[n_in - 1];
    for (int i = n_in - 2; i >= 0; --i) u[i + 1] = (rhs[i] - c[i] * u[i + 2]) / b[i];
    return u;
}

}  // namespace

ExitMomentSolution exit_moment(double p, int n, double sigma, double lo, double hi,
                               int min_nodes) {
    if (!(lo < hi)) throw std::invalid_argument("exit_moment: need lo < hi");
    if (!(sigma > 0)) throw std::invalid_argument("exit_moment: need sigma > 0");
    const double beta = 1.5 * n + 1.0;
    if (p >= 0.5 * (3 * n + 2))
        throw std::invalid_argument("exit_moment: p >= (3n+2)/2, moment diverges");

    // cell-Péclet limit keeps the off-diagonals positive (discrete maximum
    // principle), which is what guarantees a positive solution
    const double eta_max = std::max(std::abs(lo), std::abs(hi));
    const double h_cap = sigma * sigma / (2.0 * beta * std::max(eta_max, 1e-12));
    int nodes = std::max(min_nodes, int(std::ceil((hi - lo) / h_cap)) + 2);
    if (nodes % 2 == 0) ++nodes;  // odd count so the doubled grid shares nodes

    auto coarse = solve_grid(p, beta, sigma, lo, hi, nodes);
    auto fine = solve_grid(p, beta, sigma, lo, hi, 2 * nodes - 1);

    ExitMomentSolution s;
    s.p = p;
    s.beta = beta;
    s.sigma = sigma;
    s.lo = lo;
    s.hi = hi;
    s.u = std::move(fine);
    double err = 0;
    for (int i = 0; i < nodes; ++i)
        err = std::max(err, std::abs(coarse[i] - s.u[2 * i]) / 3.0);
    s.richardson_error = err;

    for (double v : s.u)
        if (!(v > 0)) throw std::runtime_error("exit_moment: nonpositive solution (moment blow-up)");

    // nodal derivatives, second order (one-sided at the ends)
    const int N = int(s.u.size());
    const double h = s.step();
    s.du.resize(N);
    s.du[0] = (-3.0 * s.u[0] + 4.0 * s.u[1] - s.u[2]) / (2.0 * h);
    for (int i = 1; i < N - 1; ++i) s.du[i] = (s.u[i + 1] - s.u[i - 1]) / (2.0 * h);
    s.du[N - 1] = (3.0 * s.u[N - 1] - 4.0 * s.u[N - 2] + s.u[N - 3]) / (2.0 * h);
    return s;
}

namespace {

double interp(const std::vector<double>& v, double lo, double h, double x, double hi) {
    const int N = int(v.size());
    double t = (x - lo) / h;
    int i = int(std::floor(t));
    i = std::clamp(i, 0, N - 2);
    const double f = t - i;
    (void)hi;
    return v[i] * (1.0 - f) + v[i + 1] * f;
}

}  // namespace

double ExitMomentSolution::u_at(double eta) const {
    if (eta < lo - 1e-9 * (hi - lo) || eta > hi + 1e-9 * (hi - lo))
        throw std::domain_error("exit_moment: evaluation outside the interval");
    return interp(u, lo, step(), eta, hi);
}

double ExitMomentSolution::du_at(double eta) const {
    if (eta < lo - 1e-9 * (hi - lo) || eta > hi + 1e-9 * (hi - lo))
        throw std::domain_error("exit_moment: evaluation outside the interval");
    return interp(du, lo, step(), eta, hi);
}

nlohmann::json ExitMomentSolution::to_json() const {
    // the full grid can run to ~10^5 nodes; serialize a decimated profile
    const int N = int(u.size());
    const int stride = std::max(1, (N - 1) / 4096);
    nlohmann::json prof = nlohmann::json::array();
    for (int i = 0; i < N; i += stride) prof.push_back(u[i]);
    if ((N - 1) % stride != 0) prof.push_back(u.back());
    return nlohmann::json{{"p", p},
                          {"beta", beta},
                          {"sigma", sigma},
                          {"lo", lo},
                          {"hi", hi},
                          {"nodes", N},
                          {"stride", stride},
                          {"richardson_error", richardson_error},
                          {"u", prof}};
}

}  // namespace stabilyze

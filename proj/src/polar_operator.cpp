#include "stabilyze/polar_operator.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace stabilyze {

namespace {
auto term_key(const OpTerm& t) {
    return std::make_tuple(t.d_r, t.d_phi, t.r_pow, t.phi_pow);
}
}  // namespace

void PolarOperator::add(const Rat& c, int r_pow, int phi_pow, int d_r, int d_phi) {
    if (c == 0) return;
    terms.push_back(OpTerm{c, r_pow, phi_pow, d_r, d_phi});
}

void PolarOperator::canonicalize() {
    std::sort(terms.begin(), terms.end(),
              [](const OpTerm& a, const OpTerm& b) { return term_key(a) < term_key(b); });
    std::vector<OpTerm> merged;
    for (auto& t : terms) {
        if (!merged.empty() && term_key(merged.back()) == term_key(t))
            merged.back().coeff += t.coeff;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const OpTerm& t) { return t.coeff == 0; }),
                 merged.end());
    terms = std::move(merged);
}

Rat PolarOperator::coeff(int r_pow, int phi_pow, int d_r, int d_phi) const {
    for (const auto& t : terms)
        if (t.r_pow == r_pow && t.phi_pow == phi_pow && t.d_r == d_r && t.d_phi == d_phi)
            return t.coeff;
    return Rat(0);
}

double powi(double base, int e) {
    if (e < 0) return 1.0 / powi(base, -e);
    double out = 1.0;
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

long double powi(long double base, int e) {
    if (e < 0) return 1.0L / powi(base, -e);
    long double out = 1.0L;
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

double PolarOperator::eval_coeff(int d_r, int d_phi, double r, double phi) const {
    double s = 0.0;
    for (const auto& t : terms)
        if (t.d_r == d_r && t.d_phi == d_phi)
            s += to_double(t.coeff) * powi(r, t.r_pow) * powi(phi, t.phi_pow);
    return s;
}

PolarOperator PolarOperator::first_order() const {
    PolarOperator out;
    out.J = J;
    out.remainder_bound = remainder_bound;
    for (const auto& t : terms)
        if (t.d_r + t.d_phi == 1) out.terms.push_back(t);
    return out;
}

double PolarOperator::apply(const std::array<double, 6>& d, double r, double phi) const {
    // derivative slot per (d_r, d_phi): (0,0)->0, (1,0)->1, (0,1)->2, (2,0)->3, (0,2)->4, (1,1)->5
    double s = 0.0;
    for (const auto& t : terms) {
        int slot;
        if (t.d_r == 0 && t.d_phi == 0) slot = 0;
        else if (t.d_r == 1 && t.d_phi == 0) slot = 1;
        else if (t.d_r == 0 && t.d_phi == 1) slot = 2;
        else if (t.d_r == 2 && t.d_phi == 0) slot = 3;
        else if (t.d_r == 0 && t.d_phi == 2) slot = 4;
        else slot = 5;
        s += to_double(t.coeff) * powi(r, t.r_pow) * powi(phi, t.phi_pow) * d[slot];
    }
    return s;
}

double append_trig_series(PolarOperator& op, const Rat& pre_cos, const Rat& pre_sin, long m,
                          int r_pow, int d_r, int d_phi) {
    const int J = op.J;
    if (m == 0) {
        op.add(pre_cos, r_pow, 0, d_r, d_phi);
        return 0.0;
    }
    Rat m_pow(1);  // m^i
    for (int i = 0; i < J; ++i) {
        const Rat term = m_pow / rat_factorial(i);
        if (i % 2 == 0) {  // cos picks even powers with sign (-1)^{i/2}
            Rat c = pre_cos * term;
            if ((i / 2) % 2 == 1) c = -c;
            op.add(c, r_pow, i, d_r, d_phi);
        } else {  // sin picks odd powers with sign (-1)^{(i-1)/2}
            Rat c = pre_sin * term;
            if (((i - 1) / 2) % 2 == 1) c = -c;
            op.add(c, r_pow, i, d_r, d_phi);
        }
        m_pow *= m;
    }
    const double pre = std::abs(to_double(pre_cos)) + std::abs(to_double(pre_sin));
    const double am = std::abs(static_cast<double>(m));
    double tail = pre * std::exp(am);
    for (int i = 1; i <= J; ++i) tail *= am / i;  // |m|^J / J!
    return tail;
}

CompiledOperator::CompiledOperator(const PolarOperator& op) {
    terms.reserve(op.terms.size());
    for (const auto& t : op.terms)
        terms.push_back(CompiledTerm{to_double(t.coeff), t.r_pow, t.phi_pow, t.d_r, t.d_phi});
}

double CompiledOperator::eval_coeff(int d_r, int d_phi, double r, double phi) const {
    double s = 0.0;
    for (const auto& t : terms)
        if (t.d_r == d_r && t.d_phi == d_phi)
            s += t.coeff * powi(r, t.r_pow) * powi(phi, t.phi_pow);
    return s;
}

std::array<long double, 2> CompiledOperator::drift(long double r, long double phi) const {
    long double dr = 0.0L, dphi = 0.0L;
    for (const auto& t : terms) {
        if (t.d_r + t.d_phi != 1) continue;
        const long double v =
            static_cast<long double>(t.coeff) * powi(r, t.r_pow) * powi(phi, t.phi_pow);
        if (t.d_r == 1)
            dr += v;
        else
            dphi += v;
    }
    return {dr, dphi};
}

}  // namespace stabilyze

#include "stabilyze/coordinate_chain.hpp"

#include <cmath>
#include <stdexcept>

namespace stabilyze {

namespace {

Rat binomial(int n, int k) {
    Rat out(1);
    for (int i = 0; i < k; ++i) out = out * (n - i) / (i + 1);
    return out;
}

// substitution expansion of one derivative pair: lists of
// extra (φ_new − c)^e · r^f · ∂_r^{dr}∂_φ^{dp} factors
struct SubPiece {
    int k;  // integer prefactor
    int e;  // power of (φ_new − c)
    int f;  // extra power of r
    int dr, dp;
};

const std::vector<SubPiece>& substitution(int d_r, int d_phi) {
    static const std::vector<SubPiece> s00{{1, 0, 0, 0, 0}};
    static const std::vector<SubPiece> s10{{1, 0, 0, 1, 0}, {1, 1, -1, 0, 1}};
    static const std::vector<SubPiece> s01{{1, 0, 1, 0, 1}};
    static const std::vector<SubPiece> s20{{1, 0, 0, 2, 0}, {2, 1, -1, 1, 1}, {1, 2, -2, 0, 2}};
    static const std::vector<SubPiece> s02{{1, 0, 2, 0, 2}};
    static const std::vector<SubPiece> s11{{1, 0, 0, 0, 1}, {1, 0, 1, 1, 1}, {1, 1, 0, 0, 2}};
    if (d_r == 0 && d_phi == 0) return s00;
    if (d_r == 1 && d_phi == 0) return s10;
    if (d_r == 0 && d_phi == 1) return s01;
    if (d_r == 2 && d_phi == 0) return s20;
    if (d_r == 0 && d_phi == 2) return s02;
    return s11;
}

nlohmann::json op_to_json(const PolarOperator& op) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : op.terms)
        terms.push_back({{"coeff", rat_to_json(t.coeff)},
                         {"r_pow", t.r_pow},
                         {"phi_pow", t.phi_pow},
                         {"d_r", t.d_r},
                         {"d_phi", t.d_phi}});
    return nlohmann::json{
        {"terms", terms}, {"J", op.J}, {"remainder_bound", op.remainder_bound}};
}

}  // namespace

PolarOperator pushforward(const PolarOperator& op, const Rat& c, int max_neg_r_pow) {
    PolarOperator out;
    out.J = op.J;
    out.remainder_bound = op.remainder_bound;
    for (const auto& t : op.terms) {
        for (const auto& s : substitution(t.d_r, t.d_phi)) {
            // coefficient rewrite φ_old^{phi_pow} = r^{-phi_pow}(φ−c)^{phi_pow},
            // times the substitution's own (φ−c)^e r^f
            const int e_tot = t.phi_pow + s.e;
            const int r_tot = t.r_pow - t.phi_pow + s.f;
            const Rat pre = t.coeff * s.k;
            for (int b = 0; b <= e_tot; ++b) {
                const Rat coeff = pre * binomial(e_tot, b) * rat_pow(-c, e_tot - b);
                if (coeff == 0) continue;
                if (b > out.J || r_tot < -max_neg_r_pow) {
                    out.remainder_bound += std::abs(to_double(coeff));
                    continue;
                }
                out.add(coeff, r_tot, b, s.dr, s.dp);
            }
        }
    }
    out.canonicalize();
    return out;
}

PolarOperator pullback(const PolarOperator& op, const Rat& c, int max_neg_r_pow) {
    // φ_old = (φ_new − c)/r, so  ∂_{φ_new} = r⁻¹∂_{φ_old}  and
    // ∂_r|_{φ_new} = ∂_r|_{φ_old} − φ_old r⁻¹ ∂_{φ_old};  φ_new = r φ_old + c.
    static const std::vector<SubPiece> s00{{1, 0, 0, 0, 0}};
    static const std::vector<SubPiece> s10{{1, 0, 0, 1, 0}, {-1, 1, -1, 0, 1}};
    static const std::vector<SubPiece> s01{{1, 0, -1, 0, 1}};
    static const std::vector<SubPiece> s20{
        {1, 0, 0, 2, 0}, {2, 1, -2, 0, 1}, {-2, 1, -1, 1, 1}, {1, 2, -2, 0, 2}};
    static const std::vector<SubPiece> s02{{1, 0, -2, 0, 2}};
    static const std::vector<SubPiece> s11{{-1, 0, -2, 0, 1}, {1, 0, -1, 1, 1}, {-1, 1, -2, 0, 2}};
    auto table = [&](int d_r, int d_phi) -> const std::vector<SubPiece>& {
        if (d_r == 0 && d_phi == 0) return s00;
        if (d_r == 1 && d_phi == 0) return s10;
        if (d_r == 0 && d_phi == 1) return s01;
        if (d_r == 2 && d_phi == 0) return s20;
        if (d_r == 0 && d_phi == 2) return s02;
        return s11;
    };

    PolarOperator out;
    out.J = op.J;
    out.remainder_bound = op.remainder_bound;
    for (const auto& t : op.terms) {
        for (const auto& s : table(t.d_r, t.d_phi)) {
            const Rat pre = t.coeff * s.k;
            // φ_new^{phi_pow} = (rφ + c)^{phi_pow}, binomial in φ
            for (int b = 0; b <= t.phi_pow; ++b) {
                const Rat coeff =
                    pre * binomial(t.phi_pow, b) * rat_pow(c, t.phi_pow - b);
                if (coeff == 0) continue;
                const int pp = b + s.e;
                const int rp = t.r_pow + b + s.f;
                if (pp > out.J || rp < -max_neg_r_pow) {
                    out.remainder_bound += std::abs(to_double(coeff));
                    continue;
                }
                out.add(coeff, rp, pp, s.dr, s.dp);
            }
        }
    }
    out.canonicalize();
    return out;
}

BalanceReport dominant_balance(const PolarOperator& op, int n, int m) {
    BalanceReport rep;
    const int diff_exp = n - 2 * m + 6;  // angular diffusion lives at r^{-diff_exp}
    bool has_radial = false;
    for (const auto& t : op.terms) {
        if (t.d_r == 1 && t.d_phi == 0 && t.r_pow == 1 && t.phi_pow == 0) {
            rep.I.push_back(t);
            has_radial = true;
        } else if (t.d_r == 0 && t.d_phi == 1 && t.r_pow == 0 && t.phi_pow == 1) {
            rep.II.push_back(t);
        } else if (t.d_r == 0 && t.d_phi == 1 && t.phi_pow == 0 && t.r_pow <= -1) {
            rep.III.push_back(t);
            if (t.r_pow == -1) rep.gamma1 = t.coeff;
        } else if (t.d_r == 0 && t.d_phi == 2 && t.phi_pow == 0 && t.r_pow == -diff_exp) {
            rep.IV.push_back(t);
        }
    }
    if (!has_radial)
        throw std::invalid_argument("dominant_balance: operator lacks the r dr term");
    // Under r = λR, φ = λ^{-α}Φ the corrections γ_i r^{-i}∂_φ scale as λ^{α-i}
    // and the diffusion as λ^{2α-diff_exp}; balancing diffusion against the
    // angular multiplier fixes α = diff_exp/2, so a correction i survives iff
    // i < diff_exp/2. None survives (chain terminates) iff diff_exp <= 2.
    rep.is_diffusive = diff_exp <= 2;
    return rep;
}

CoordinateChain build_chain(const PolarOperator& gen, int n) {
    CoordinateChain ch;
    ch.n = n;
    ch.j = (n % 2 == 1) ? (n - 1) / 2 : (n - 2) / 2;
    const int J = gen.J;
    const Rat half_sigma2 = gen.coeff(-n - 2, 0, 0, 2);  // σ²/2

    PolarOperator L = gen;  // level 2, coordinates (r, θ)
    for (int m = 2; m <= ch.j + 2; ++m) {
        auto bal = dominant_balance(L, n, m);
        if (bal.is_diffusive)
            throw std::logic_error("build_chain: balance terminated before level j+3");
        if (m >= 3) ch.gamma1.push_back(bal.gamma1);
        const Rat cm = bal.gamma1 / (n + m - 1);
        ch.c.push_back(cm);
        L = pushforward(L, cm, n + J + 1);
        ch.transformed_ops.push_back(L);
    }
    auto bal = dominant_balance(L, n, ch.j + 3);
    if (!bal.is_diffusive)
        throw std::logic_error("build_chain: balance did not terminate at level j+3");
    ch.gamma1.push_back(bal.gamma1);
    ch.c_next = bal.gamma1 / (n + ch.j + 2);

    // asymptotic operators: T_1 = r cos(nθ)∂_r + sin(nθ)∂_θ (as its series), then
    // T_m = r∂_r + (n+m−2)φ_m∂_{φ_m}
    {
        PolarOperator T1;
        T1.J = J;
        double tail = 0.0;
        tail += append_trig_series(T1, Rat(1), Rat(0), n, 1, 1, 0);
        tail += append_trig_series(T1, Rat(0), Rat(1), n, 0, 0, 1);
        T1.remainder_bound = tail;
        T1.canonicalize();
        ch.asymptotic_ops.push_back(T1);
    }
    for (int m = 2; m <= ch.j + 3; ++m) {
        PolarOperator T;
        T.J = J;
        T.add(Rat(1), 1, 0, 1, 0);
        T.add(Rat(n + m - 2), 0, 1, 0, 1);
        T.canonicalize();
        ch.asymptotic_ops.push_back(T);
    }

    // A = T_{j+3} + σ²/(2r)∂²  (n odd)  or  + γ₁^{(j+3)}r⁻¹∂ + σ²/(2r²)∂²  (n even)
    ch.A = ch.asymptotic_ops.back();
    if (n % 2 == 0) ch.A.add(ch.gamma1.back(), -1, 0, 0, 1);
    ch.A.add(half_sigma2, (n % 2 == 1) ? -1 : -2, 0, 0, 2);
    ch.A.canonicalize();
    return ch;
}

std::vector<double> phi_coords(const CoordinateChain& chain, double r, double theta) {
    std::vector<double> out;
    out.reserve(chain.j + 2);
    out.push_back(theta);  // φ_2
    for (int m = 2; m <= chain.j + 2; ++m)
        out.push_back(r * out.back() + to_double(chain.c_m(m)));
    return out;
}

PhiAffine phi_affine(const CoordinateChain& chain, int m, double r, double theta) {
    // φ_m = r^{m-2}θ + Σ_{i=2}^{m-1} c_i r^{m-1-i}
    PhiAffine out{};
    const int k = m - 2;
    out.value = powi(r, k) * theta;
    out.d_r = k * powi(r, k - 1) * theta;
    out.d_theta = powi(r, k);
    out.d_rr = k * (k - 1) * powi(r, k - 2) * theta;
    out.d_rtheta = k * powi(r, k - 1);
    for (int i = 2; i <= m - 1; ++i) {
        const double ci = to_double(chain.c_m(i));
        const int e = m - 1 - i;
        out.value += ci * powi(r, e);
        out.d_r += ci * e * powi(r, e - 1);
        out.d_rr += ci * e * (e - 1) * powi(r, e - 2);
    }
    return out;
}

nlohmann::json CoordinateChain::to_json() const {
    nlohmann::json jc = nlohmann::json::array(), jg = nlohmann::json::array();
    for (const auto& v : c) jc.push_back(rat_to_json(v));
    for (const auto& v : gamma1) jg.push_back(rat_to_json(v));
    nlohmann::json jt = nlohmann::json::array(), ja = nlohmann::json::array();
    for (const auto& op : transformed_ops) jt.push_back(op_to_json(op));
    for (const auto& op : asymptotic_ops) ja.push_back(op_to_json(op));
    return nlohmann::json{{"n", n},
                          {"j", j},
                          {"c", jc},
                          {"gamma1", jg},
                          {"c_next", rat_to_json(c_next)},
                          {"transformed_ops", jt},
                          {"asymptotic_ops", ja},
                          {"A", op_to_json(A)}};
}

}  // namespace stabilyze

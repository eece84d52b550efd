#include "stabilyze/exponent_table.hpp"

#include <stdexcept>

namespace stabilyze {

void ExponentTable::validate() const {
    for (int m = 2; m <= j + 3; ++m) {
        for (int l = 1; l <= m - 2; ++l) {
            if (!(p_lm(l, m) < p_lm(l + 1, m)))
                throw std::logic_error("exponent table: p_{l,m} ordering violated");
            if (!(q_lm(l, m) < q_lm(l + 1, m)))
                throw std::logic_error("exponent table: q_{l,m} ordering violated");
        }
        if (m >= 3 && p_lm(m - 1, m) != p_lm(m, m))
            throw std::logic_error("exponent table: p_{m-1,m} != p_{m,m}");
        if (m >= 3 && !(q_lm(m - 1, m) < q_lm(m, m)))
            throw std::logic_error("exponent table: q_{m-1,m} >= q_{m,m}");
        if (!(q_diag(m) < 1))
            throw std::logic_error("exponent table: q_m >= 1");
    }
    // Strict ordering up to the terminal identity p_{j+3,j+4} = p_{j+4,j+4}
    // (the same convention as p_{m-1,m} = p_{m,m} on earlier rows).
    for (int m = 1; m <= j + 2; ++m)
        if (!(p_j4(m) < p_j4(m + 1)))
            throw std::logic_error("exponent table: p_{m,j+4} ordering violated");
    if (p_j4(j + 3) != p_j4(j + 4))
        throw std::logic_error("exponent table: p_{j+3,j+4} != p_{j+4,j+4}");
    if (!(p_j4(j + 4) * 2 < Rat(3 * n + 2)))
        throw std::logic_error("exponent table: p_{j+4,j+4} >= (3n+2)/2");
}

ExponentTable exponent_table(int n, const Rat& p, const Rat& q, const Rat& q_frac) {
    if (!(Rat(0) < p && p < Rat(n)))
        throw std::invalid_argument("exponent_table: need 0 < p < n");
    if (!(p / n < q && q < Rat(1)))
        throw std::invalid_argument("exponent_table: need p/n < q < 1");
    if (!(Rat(0) < q_frac && q_frac < Rat(1)))
        throw std::invalid_argument("exponent_table: q_frac must lie in (0,1)");

    ExponentTable t;
    t.n = n;
    t.j = (n % 2 == 1) ? (n - 1) / 2 : (n - 2) / 2;
    t.p = p;
    t.q = q;

    // row m = 2: p_{1,2} = p_{2,2} = p, q_{1,2} = p/n, q_{2,2} = q
    t.plm.push_back({p, p});
    t.qlm.push_back({p / n, q});

    for (int m = 3; m <= t.j + 3; ++m) {
        const auto& pp = t.plm.back();
        const auto& pq = t.qlm.back();
        std::vector<Rat> rp(m), rq(m);
        for (int l = 1; l < m; ++l) {
            rp[l - 1] = pp[l - 1] + pq[l - 1];
            rq[l - 1] = rp[l - 1] / (n + m - 2);
        }
        rp[m - 1] = rp[m - 2];  // p_{m,m} = p_{m-1,m} = p_m
        const Rat lo_int = rp[m - 1] / (n + m - 2);
        const Rat lo = (pq[m - 2] > lo_int) ? pq[m - 2] : lo_int;  // q_{m-1} v p_m/(n+m-2)
        if (!(lo < 1))
            throw std::invalid_argument("exponent_table: empty q_m interval (bad p, q)");
        rq[m - 1] = lo + q_frac * (Rat(1) - lo);
        t.plm.push_back(std::move(rp));
        t.qlm.push_back(std::move(rq));
    }

    // inner-layer exponents: the half-step applies for odd n only
    const Rat step = (n % 2 == 1) ? Rat(1, 2) : Rat(1);
    t.pj4.resize(t.j + 4);
    for (int m = 1; m <= t.j + 3; ++m)
        t.pj4[m - 1] = t.p_lm(m, t.j + 3) + step * t.q_lm(m, t.j + 3);
    t.pj4[t.j + 3] = t.p_diag(t.j + 3) + step * t.q_diag(t.j + 3);  // p_{j+4}

    t.validate();
    return t;
}

nlohmann::json ExponentTable::to_json() const {
    auto rows = [](const std::vector<std::vector<Rat>>& a) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& row : a) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& v : row) r.push_back(rat_to_json(v));
            out.push_back(r);
        }
        return out;
    };
    nlohmann::json j4 = nlohmann::json::array();
    for (const auto& v : pj4) j4.push_back(rat_to_json(v));
    return nlohmann::json{{"n", n},          {"j", j},
                          {"p", rat_to_json(p)}, {"q", rat_to_json(q)},
                          {"p_lm", rows(plm)},   {"q_lm", rows(qlm)},
                          {"p_j4", j4}};
}

}  // namespace stabilyze

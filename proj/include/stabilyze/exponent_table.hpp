#pragma once

// Exact-rational exponent recurrences for the piecewise Lyapunov construction:
// the diagonal (p_m, q_m), the triangular arrays p_{l,m}, q_{l,m}, and the
// inner-layer exponents p_{m,j+4}.

#include <vector>

#include "stabilyze/rational.hpp"

namespace stabilyze {

struct ExponentTable {
    int n = 1;
    int j = 0;
    Rat p{0}, q{0};

    // rows m = 2..j+3 (stored at m-2), each with entries l = 1..m
    std::vector<std::vector<Rat>> plm, qlm;
    // p_{m,j+4}, m = 1..j+4 (stored at m-1); p_{j+4,j+4} = p_{j+4}
    std::vector<Rat> pj4;

    Rat p_lm(int l, int m) const { return plm.at(m - 2).at(l - 1); }
    Rat q_lm(int l, int m) const { return qlm.at(m - 2).at(l - 1); }
    Rat p_diag(int m) const { return p_lm(m, m); }
    Rat q_diag(int m) const { return q_lm(m, m); }
    Rat p_j4(int m) const { return pj4.at(m - 1); }

    // Asserts the strict orderings p_{1,m} < ... < p_{m-1,m} = p_{m,m},
    // q_{1,m} < ... < q_{m,m} < 1, the increasing p_{m,j+4}, and the bound
    // p_{j+4,j+4} < (3n+2)/2; throws on any violation.
    void validate() const;

    nlohmann::json to_json() const;
};

// Fills the table from 0 < p < n and p/n < q < 1. The diagonal q_m is chosen
// inside its admissible open interval (q_{m-1} v p_m/(n+m-2), 1) at fraction
// q_frac of the way up (default: midpoint). validate() runs before returning.
ExponentTable exponent_table(int n, const Rat& p, const Rat& q,
                             const Rat& q_frac = Rat(1, 2));

}  // namespace stabilyze

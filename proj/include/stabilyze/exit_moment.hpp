#pragma once

// Exit-moment boundary-value problem on the inner-layer interval: the process
// dη = ((3/2)n+1)η dt + σ dW exits [lo,hi] at time τ, and u(η0) = E e^{pτ}
// solves (σ²/2)u'' + ((3/2)n+1)η u' + p u = 0 with u(lo) = u(hi) = 1.

#include <vector>

#include "json.hpp"

namespace stabilyze {

struct ExitMomentSolution {
    double p = 0;
    double beta = 0;   // (3/2)n + 1
    double sigma = 1;
    double lo = -1, hi = 1;
    std::vector<double> u;   // uniform grid lo..hi
    std::vector<double> du;  // second-order nodal derivatives
    double richardson_error = 0;  // max |u_N - u_{2N}| / 3 on the coarse nodes

    double step() const { return (hi - lo) / double(u.size() - 1); }
    double u_at(double eta) const;
    double du_at(double eta) const;
    // u'' from the ODE itself (exact given u, u'), avoiding noisy differencing
    double ddu_at(double eta) const {
        return -2.0 / (sigma * sigma) * (beta * eta * du_at(eta) + p * u_at(eta));
    }
    double du_hi() const { return du.back(); }

    nlohmann::json to_json() const;
};

// Finite-difference solve with at least min_nodes nodes (more when the
// cell-Péclet limit h <= σ²/(2β·max|η|) demands it), then a doubled-grid
// Richardson check. Throws if p >= (3n+2)/2 or the solution is nonpositive.
ExitMomentSolution exit_moment(double p, int n, double sigma, double lo, double hi,
                               int min_nodes = 2001);

}  // namespace stabilyze

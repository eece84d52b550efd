#pragma once

// The region ladder S_0..S_{j+4} covering the principal wedge {r >= r*, |θ| <= π/n},
// its parameter ladder, point classification, and boundary sampling.

#include <string>
#include <vector>

#include "stabilyze/coordinate_chain.hpp"

namespace stabilyze {

struct RegionParams {
    double theta0 = 0;    // θ0*, in (π/2n, π/n)
    double theta1 = 0;    // θ1*, in (0, θ0*)
    double phi_star = 0;  // φ*
    double eta_star = 0;  // η*
    double r_star = 0;    // r*

    nlohmann::json to_json() const;
    static RegionParams from_json(const nlohmann::json& j);
};

// Ladder defaults, chosen in the order θ0*, θ1*, φ*(θ1*), η*(φ*), r*:
// θ0* = 3π/(4n), θ1* = θ0*/10, φ* = 10(1 + max|c_m| + |γ₁|),
// η* = 10(1 + |c_{j+2}| + √φ*), r* = 10 φ*².
RegionParams default_region_params(const CoordinateChain& chain);

struct BoundarySample {
    double r = 0;
    double theta = 0;
    int side = +1;  // sign of the angular variable on this sample
};

class RegionAtlas {
  public:
    RegionAtlas(CoordinateChain chain, RegionParams params);

    const CoordinateChain& chain() const { return chain_; }
    const RegionParams& params() const { return params_; }
    bool odd() const { return chain_.n % 2 == 1; }
    int n() const { return chain_.n; }
    int j() const { return chain_.j; }
    int region_count() const { return chain_.j + 5; }  // ids 0..j+4
    int inner_id() const { return chain_.j + 4; }

    // Exponent s in the inner-layer scale η* r^{-s}: 1/2 for n odd, 1 for n even.
    double inner_scale() const { return odd() ? 0.5 : 1.0; }

    // Unique region id; boundary ties break toward the larger (inner) index.
    // Throws if r < r* or |θ| > π/n.
    int classify(double r, double theta) const;

    // Points on the shared boundary of two adjacent regions, log-spaced in r,
    // alternating angular sign. Throws if the regions are not adjacent.
    std::vector<BoundarySample> boundary_samples(int id_a, int id_b, int count, double r_min,
                                                 double r_max) const;

    // θ with φ_m(r, θ) = target (the affine recursion inverted), m in [2, j+3].
    double theta_for_phi(int m, double r, double target) const;

    nlohmann::json to_json() const;

  private:
    CoordinateChain chain_;
    RegionParams params_;
};

// CSV rows (curve_id, r, theta) for the bundled n=3 demonstration: region
// boundary polylines plus the distinguished curve φ_4 = 0 and trajectories
// θ = φ_4(0)·r³ − 1/(2r) − 1/r².
std::string demo_region_csv(const RegionAtlas& atlas, int samples_per_curve);

}  // namespace stabilyze

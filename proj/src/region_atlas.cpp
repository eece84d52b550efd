#include "stabilyze/region_atlas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace stabilyze {

namespace {

double max_abs(const std::vector<Rat>& v) {
    double m = 0;
    for (const auto& x : v) m = std::max(m, std::abs(to_double(x)));
    return m;
}

}  // namespace

nlohmann::json RegionParams::to_json() const {
    return nlohmann::json{{"theta0", theta0},
                          {"theta1", theta1},
                          {"phi_star", phi_star},
                          {"eta_star", eta_star},
                          {"r_star", r_star}};
}

RegionParams RegionParams::from_json(const nlohmann::json& j) {
    RegionParams p;
    p.theta0 = j.at("theta0").get<double>();
    p.theta1 = j.at("theta1").get<double>();
    p.phi_star = j.at("phi_star").get<double>();
    p.eta_star = j.at("eta_star").get<double>();
    p.r_star = j.at("r_star").get<double>();
    return p;
}

RegionParams default_region_params(const CoordinateChain& chain) {
    RegionParams p;
    const int n = chain.n;
    p.theta0 = 3.0 * std::numbers::pi / (4.0 * n);
    p.theta1 = p.theta0 / 10.0;
    p.phi_star = 10.0 * (1.0 + max_abs(chain.c) + max_abs(chain.gamma1));
    p.eta_star = 10.0 * (1.0 + std::abs(to_double(chain.c_m(chain.j + 2))) +
                         std::sqrt(p.phi_star));
    p.r_star = 10.0 * p.phi_star * p.phi_star;
    return p;
}

RegionAtlas::RegionAtlas(CoordinateChain chain, RegionParams params)
    : chain_(std::move(chain)), params_(params) {
    const int n = chain_.n;
    const double pi_n = std::numbers::pi / n;
    if (!(pi_n / 2 < params_.theta0 && params_.theta0 < pi_n))
        throw std::invalid_argument("region params: theta0 outside (pi/2n, pi/n)");
    if (!(0 < params_.theta1 && params_.theta1 < params_.theta0))
        throw std::invalid_argument("region params: theta1 outside (0, theta0)");
    if (!(params_.phi_star > max_abs(chain_.c) * (n + 2)))
        throw std::invalid_argument("region params: phi_star too small vs max|c_m|");
    if (!(params_.phi_star > max_abs(chain_.gamma1) / (n + 1)))
        throw std::invalid_argument("region params: phi_star too small vs gamma1");
    if (!(params_.eta_star > std::abs(to_double(chain_.c_m(chain_.j + 2)))))
        throw std::invalid_argument("region params: eta_star too small vs |c_{j+2}|");
    if (!(params_.r_star > params_.phi_star))
        throw std::invalid_argument("region params: r_star must exceed phi_star");
}

int RegionAtlas::classify(double r, double theta) const {
    const double pi_n = std::numbers::pi / chain_.n;
    if (r < params_.r_star)
        throw std::domain_error("classify: r below r* (core region, outside atlas)");
    if (std::abs(theta) > pi_n * (1 + 1e-12))
        throw std::domain_error("classify: theta outside the principal wedge");

    // Inner regions are tested first so boundary ties break toward the larger id.
    const auto phi = phi_coords(chain_, r, theta);  // phi[m-2] = φ_m
    const double inner = std::abs(phi.back());      // |φ_{j+3}|
    if (inner <= params_.eta_star * std::pow(r, -inner_scale())) return chain_.j + 4;
    if (inner <= params_.phi_star) return chain_.j + 3;
    for (int m = chain_.j + 2; m >= 3; --m)
        if (std::abs(phi[m - 2]) <= params_.phi_star) return m;
    if (std::abs(theta) <= params_.theta1) return 2;
    if (std::abs(theta) <= params_.theta0) return 1;
    return 0;
}

double RegionAtlas::theta_for_phi(int m, double r, double target) const {
    if (m < 2 || m > chain_.j + 3)
        throw std::invalid_argument("theta_for_phi: level out of range");
    const double offset = phi_affine(chain_, m, r, 0.0).value;
    return (target - offset) / powi(r, m - 2);
}

std::vector<BoundarySample> RegionAtlas::boundary_samples(int id_a, int id_b, int count,
                                                          double r_min, double r_max) const {
    const int a = std::min(id_a, id_b), b = std::max(id_a, id_b);
    if (b != a + 1 || a < 0 || b > inner_id())
        throw std::invalid_argument("boundary_samples: regions are not adjacent");
    if (count < 1 || r_min < params_.r_star || r_max < r_min)
        throw std::invalid_argument("boundary_samples: bad sampling range");

    std::vector<BoundarySample> out;
    out.reserve(count);
    const double ratio = (count > 1) ? std::pow(r_max / r_min, 1.0 / (count - 1)) : 1.0;
    for (int i = 0; i < count; ++i) {
        BoundarySample s;
        s.r = r_min * std::pow(ratio, i);
        s.side = (i % 2 == 0) ? +1 : -1;
        if (a == 0)
            s.theta = s.side * params_.theta0;
        else if (a == 1)
            s.theta = s.side * params_.theta1;
        else if (a <= chain_.j + 2)
            s.theta = theta_for_phi(a + 1, s.r, s.side * params_.phi_star);
        else  // (S_{j+3}, S_{j+4})
            s.theta = theta_for_phi(chain_.j + 3, s.r,
                                    s.side * params_.eta_star * std::pow(s.r, -inner_scale()));
        out.push_back(s);
    }
    return out;
}

nlohmann::json RegionAtlas::to_json() const {
    return nlohmann::json{{"chain", chain_.to_json()},
                          {"params", params_.to_json()},
                          {"parity", odd() ? "odd" : "even"},
                          {"region_count", region_count()}};
}

std::string demo_region_csv(const RegionAtlas& atlas, int samples_per_curve) {
    std::ostringstream csv;
    csv << "curve_id,r,theta\n";
    char buf[96];
    auto row = [&](const std::string& id, double r, double theta) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", id.c_str(), r, theta);
        csv << buf;
    };

    const double r0 = atlas.params().r_star;
    const double r1 = 10.0 * r0;
    const double ratio = std::pow(r1 / r0, 1.0 / (samples_per_curve - 1));

    // region boundary polylines, one per sign
    for (int a = 0; a < atlas.inner_id(); ++a) {
        for (int side : {+1, -1}) {
            const std::string id = "S" + std::to_string(a) + "_S" + std::to_string(a + 1) +
                                   (side > 0 ? "_pos" : "_neg");
            for (int i = 0; i < samples_per_curve; ++i) {
                const double r = r0 * std::pow(ratio, i);
                double theta;
                if (a == 0)
                    theta = side * atlas.params().theta0;
                else if (a == 1)
                    theta = side * atlas.params().theta1;
                else if (a <= atlas.j() + 2)
                    theta = atlas.theta_for_phi(a + 1, r, side * atlas.params().phi_star);
                else
                    theta = atlas.theta_for_phi(atlas.j() + 3, r,
                                                side * atlas.params().eta_star *
                                                    std::pow(r, -atlas.inner_scale()));
                row(id, r, theta);
            }
        }
    }

    // the distinguished curve φ_{j+3} = 0 and nearby trajectories
    // θ = φ(0)·r^{j+2} + (zero curve); trajectories with φ(0) ≠ 0 eventually
    // exit through |θ| = θ1*.
    const int top = atlas.j() + 3;
    for (int i = 0; i < samples_per_curve; ++i) {
        const double r = r0 * std::pow(ratio, i);
        row("unstable", r, atlas.theta_for_phi(top, r, 0.0));
    }
    const double theta1 = atlas.params().theta1;
    const int pw = atlas.n() + atlas.j() + 1;  // φ_{j+3}/r^{n+j+1} is flow-invariant
    int k = 0;
    for (double scale : {0.2, 0.6, -0.2, -0.6}) {
        ++k;
        const double K = scale * theta1 / powi(r1, pw - (top - 2));  // φ(0) at r = r1 scale
        const std::string id = "stable_" + std::to_string(k);
        for (int i = 0; i < samples_per_curve; ++i) {
            const double r = r0 * std::pow(ratio, i);
            const double theta = atlas.theta_for_phi(top, r, K * powi(r, pw));
            if (std::abs(theta) <= std::numbers::pi / atlas.n()) row(id, r, theta);
        }
    }
    return csv.str();
}

}  // namespace stabilyze

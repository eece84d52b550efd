#include "stabilyze/dynamics_model.hpp"

#include <cmath>
#include <stdexcept>

namespace stabilyze {

void DynamicsModel::validate() const {
    if (n < 1) throw std::invalid_argument("model: n must be >= 1");
    if (a.re == 0 && a.im == 0) throw std::invalid_argument("model: a must be nonzero");
    if (sigma <= 0) throw std::invalid_argument("model: sigma must be positive");
    for (const auto& [kl, c] : f_coeffs) {
        (void)c;
        if (kl.first < 0 || kl.second < 0 || kl.first + kl.second > n)
            throw std::invalid_argument("model: F monomial z^k zbar^l must have 0 <= k+l <= n");
    }
}

DynamicsModel DynamicsModel::from_json(const nlohmann::json& j) {
    DynamicsModel m;
    m.n = j.at("n").get<int>();
    const auto& ja = j.at("a");
    m.a = ExactComplex{rat_from_json(ja.at(0)), rat_from_json(ja.at(1))};
    m.sigma = rat_from_json(j.at("sigma"));
    if (j.contains("F"))
        for (const auto& t : j.at("F")) {
            auto key = std::make_pair(t.at("k").get<int>(), t.at("l").get<int>());
            ExactComplex c{rat_from_json(t.at("re")), rat_from_json(t.at("im"))};
            m.f_coeffs[key] = c;
        }
    m.validate();
    return m;
}

nlohmann::json DynamicsModel::to_json() const {
    nlohmann::json jf = nlohmann::json::array();
    for (const auto& [kl, c] : f_coeffs)
        jf.push_back({{"k", kl.first},
                      {"l", kl.second},
                      {"re", rat_to_json(c.re)},
                      {"im", rat_to_json(c.im)}});
    return nlohmann::json{{"n", n},
                          {"a", {rat_to_json(a.re), rat_to_json(a.im)}},
                          {"sigma", rat_to_json(sigma)},
                          {"F", jf}};
}

std::complex<double> eval_drift(const DynamicsModel& model, std::complex<double> z) {
    std::complex<double> out = model.a.value() * std::pow(z, model.n + 1);
    const std::complex<double> zb = std::conj(z);
    for (const auto& [kl, c] : model.f_coeffs)
        out += c.value() * std::pow(z, kl.first) * std::pow(zb, kl.second);
    return out;
}

std::pair<DynamicsModel, std::complex<double>> normalize_leading(const DynamicsModel& model) {
    model.validate();
    if (model.a.re == 1 && model.a.im == 0) return {model, {1.0, 0.0}};

    std::complex<double> inv_a = 1.0 / model.a.value();
    // flush signed zero so the negative real axis gets arg = +π (ties broken
    // toward the smallest nonnegative argument)
    inv_a = {inv_a.real() + 0.0, inv_a.imag() + 0.0};
    // principal n-th root: |1/a|^{1/n} e^{i arg(1/a)/n}, arg in (-π, π]
    const double mod = std::pow(std::abs(inv_a), 1.0 / model.n);
    const double ang = std::arg(inv_a) / model.n;
    const std::complex<double> lambda = std::polar(mod, ang);

    DynamicsModel out;
    out.n = model.n;
    out.a = ExactComplex{Rat(1), Rat(0)};
    out.sigma = rat_from_double(model.sigma_d() / std::abs(lambda));
    for (const auto& [kl, c] : model.f_coeffs) {
        // z = λw:  f z^k z̄^l dt contributes λ^{k-1} λ̄^l f to the w-drift
        const std::complex<double> fp = c.value() * std::pow(lambda, kl.first - 1) *
                                        std::pow(std::conj(lambda), kl.second);
        out.f_coeffs[kl] = ExactComplex{rat_from_double(fp.real()), rat_from_double(fp.imag())};
    }
    out.validate();
    return {out, lambda};
}

PolarOperator polar_generator(const DynamicsModel& model, int J) {
    model.validate();
    if (!(model.a.re == 1 && model.a.im == 0))
        throw std::invalid_argument("polar_generator: model must be normalized (a = 1)");
    if (2 * J <= model.n + 12)
        throw std::invalid_argument("polar_generator: need J > n/2 + 6");

    const int n = model.n;
    PolarOperator op;
    op.J = J;
    double tail = 0.0;

    // leading drift z^{n+1}: time-changed  r cos(nθ)∂_r + sin(nθ)∂_θ
    tail += append_trig_series(op, Rat(1), Rat(0), n, 1, 1, 0);
    tail += append_trig_series(op, Rat(0), Rat(1), n, 0, 0, 1);

    // F monomials: e^{-iθ}·f z^k z̄^l = f r^{k+l} e^{imθ}, m = k-l-1.
    // Radial part r^{k+l-n}[Re f·cos(mθ) − Im f·sin(mθ)]∂_r,
    // angular part r^{k+l-1-n}[Re f·sin(mθ) + Im f·cos(mθ)]∂_θ (both time-changed).
    for (const auto& [kl, c] : model.f_coeffs) {
        const int k = kl.first, l = kl.second;
        const long m = k - l - 1;
        tail += append_trig_series(op, c.re, -c.im, m, k + l - n, 1, 0);
        tail += append_trig_series(op, c.im, c.re, m, k + l - 1 - n, 0, 1);
    }

    // noise: σ²/2 (∂_r² + r⁻¹∂_r + r⁻²∂_θ²), time-changed by r⁻ⁿ
    const Rat half_s2 = model.sigma * model.sigma / 2;
    op.add(half_s2, -n, 0, 2, 0);
    op.add(half_s2, -n - 1, 0, 1, 0);
    op.add(half_s2, -n - 2, 0, 0, 2);

    op.remainder_bound = tail;
    op.canonicalize();
    return op;
}

std::array<double, 2> polar_drift_exact(const DynamicsModel& model, double r, double theta) {
    const int n = model.n;
    const std::complex<double> z = std::polar(r, theta);
    std::complex<double> F{0.0, 0.0};
    const std::complex<double> zb = std::conj(z);
    for (const auto& [kl, c] : model.f_coeffs)
        F += c.value() * std::pow(z, kl.first) * std::pow(zb, kl.second);
    const std::complex<double> e = std::polar(1.0, -theta) * F;
    const double s2 = model.sigma_d() * model.sigma_d();
    const double radial =
        r * std::cos(n * theta) + e.real() / powi(r, n) + 0.5 * s2 / powi(r, n + 1);
    const double angular = std::sin(n * theta) + e.imag() / powi(r, n + 1);
    return {radial, angular};
}

}  // namespace stabilyze

#pragma once

// Exact rational scalar used throughout the symbolic layer, plus JSON helpers.
// Model files may give numbers either as plain JSON numbers (converted exactly,
// doubles are binary rationals) or as {"num": ..., "den": ...} objects.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace stabilyze {

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rat& x) { return static_cast<double>(x); }

// Exact conversion: every finite double is a binary rational.
inline Rat rat_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite input");
    if (x == 0.0) return Rat(0);
    int exp = 0;
    double m = std::frexp(x, &exp);            // x = m * 2^exp, 0.5 <= |m| < 1
    auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));  // integer mantissa
    exp -= 53;
    Rat r(mant);
    if (exp > 0)
        r *= Rat(BigInt(1) << exp);
    else if (exp < 0)
        r /= Rat(BigInt(1) << -exp);
    return r;
}

inline Rat rat_pow(Rat base, long e) {
    if (e < 0) {
        if (base == 0) throw std::domain_error("rat_pow: zero to negative power");
        base = 1 / base;
        e = -e;
    }
    Rat out(1);
    while (e > 0) {
        if (e & 1) out *= base;
        base *= base;
        e >>= 1;
    }
    return out;
}

inline Rat rat_factorial(long n) {
    Rat out(1);
    for (long i = 2; i <= n; ++i) out *= i;
    return out;
}

// JSON encoding: {num, den} with int64 payloads when they fit, decimal strings otherwise.
inline nlohmann::json rat_to_json(const Rat& x) {
    const BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    auto enc = [](const BigInt& v) -> nlohmann::json {
        if (v >= std::numeric_limits<std::int64_t>::min() &&
            v <= std::numeric_limits<std::int64_t>::max())
            return static_cast<std::int64_t>(v);
        return v.str();
    };
    return nlohmann::json{{"num", enc(num)}, {"den", enc(den)}};
}

inline Rat rat_from_json(const nlohmann::json& j) {
    if (j.is_object()) {
        auto dec = [](const nlohmann::json& v) -> BigInt {
            if (v.is_string()) return BigInt(v.get<std::string>());
            return BigInt(v.get<std::int64_t>());
        };
        const BigInt den = dec(j.at("den"));
        if (den == 0) throw std::invalid_argument("rational with zero denominator");
        return Rat(dec(j.at("num")), den);
    }
    if (j.is_number_integer()) return Rat(j.get<std::int64_t>());
    if (j.is_number_float()) return rat_from_double(j.get<double>());
    throw std::invalid_argument("cannot parse rational from JSON value: " + j.dump());
}

}  // namespace stabilyze

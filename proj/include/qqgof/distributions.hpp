#pragma once

// Standard (unit) prototypes Z of the location-scale families used for
// Q-Q plots and as simulation alternatives.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "qqgof/errors.hpp"
#include "qqgof/rng.hpp"

namespace qqgof {

enum class Family { Normal, Exponential, Gumbel, Logistic };

inline std::string_view to_string(Family f) {
    switch (f) {
        case Family::Normal: return "normal";
        case Family::Exponential: return "exponential";
        case Family::Gumbel: return "gumbel";
        case Family::Logistic: return "logistic";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    if (name == "normal") return Family::Normal;
    if (name == "exponential") return Family::Exponential;
    if (name == "gumbel") return Family::Gumbel;
    if (name == "logistic") return Family::Logistic;
    throw DomainError("unknown family: " + std::string(name));
}

namespace detail {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;

template <std::size_t N>
constexpr double horner(const double (&c)[N], double x) {
    double r = c[N - 1];
    for (std::size_t i = N - 1; i-- > 0;) r = r * x + c[i];
    return r;
}

}  // namespace detail

/// Standard normal density.
inline double normal_pdf(double x) {
    return detail::inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF via the complementary error function; relative error
/// is at the level of double rounding over the whole real line.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// log Phi(x), finite down to x = -37.
inline double normal_log_cdf(double x) {
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

/// Standard normal quantile, Wichura's AS 241 (PPND16). Relative accuracy
/// about 1e-16 for p in (1e-300, 1 - 1e-16).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");

    static constexpr double a[] = {3.387132872796366608,   133.14166789178437745,
                                   1971.5909503065514427,  13731.693765509461125,
                                   45921.953931549871457,  67265.770927008700853,
                                   33430.575583588128105,  2509.0809287301226727};
    static constexpr double b[] = {1.0,
                                   42.313330701600911252,  687.1870074920579083,
                                   5394.1960214247511077,  21213.794301586595867,
                                   39307.89580009271061,   28729.085735721942674,
                                   5226.495278852545925};
    static constexpr double c[] = {1.42343711074968357734,   4.6303378461565452959,
                                   5.7694972214606914055,    3.64784832476320460504,
                                   1.27045825245236838258,   0.24178072517745061177,
                                   0.0227238449892691845833, 7.7454501427834140764e-4};
    static constexpr double d[] = {1.0,
                                   2.05319162663775882187,   1.6763848301838038494,
                                   0.68976733498510000455,   0.14810397642748007459,
                                   0.0151986665636164571966, 5.475938084995344946e-4,
                                   1.05075007164441684324e-9};
    static constexpr double e[] = {6.6579046435011037772,    5.4637849111641143699,
                                   1.7848265399172913358,    0.29656057182850489123,
                                   0.026532189526576123093,  0.0012426609473880784386,
                                   2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[] = {1.0,
                                   0.59983220655588793769,   0.13692988092273580531,
                                   0.0148753612908506148525, 7.868691311456132591e-4,
                                   1.8463183175100546818e-5, 1.4215117583164458887e-7,
                                   2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * detail::horner(a, r) / detail::horner(b, r);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = detail::horner(c, r) / detail::horner(d, r);
    } else {
        r -= 5.0;
        val = detail::horner(e, r) / detail::horner(f, r);
    }
    return q < 0.0 ? -val : val;
}

inline double pdf(Family family, double x) {
    if (!std::isfinite(x)) throw DomainError("pdf: non-finite argument");
    switch (family) {
        case Family::Normal: return normal_pdf(x);
        case Family::Exponential: return x < 0.0 ? 0.0 : std::exp(-x);
        case Family::Gumbel: {
            const double t = std::exp(-x);
            return t * std::exp(-t);
        }
        case Family::Logistic: {
            const double t = std::exp(-std::abs(x));
            return t / ((1.0 + t) * (1.0 + t));
        }
    }
    return 0.0;
}

/// Distribution function; tails saturate to 0 and 1.
inline double cdf(Family family, double x) {
    switch (family) {
        case Family::Normal: return normal_cdf(x);
        case Family::Exponential: return x <= 0.0 ? 0.0 : -std::expm1(-x);
        case Family::Gumbel: return std::exp(-std::exp(-x));
        case Family::Logistic:
            return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return 0.0;
}

inline double quantile(Family family, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in (0,1)");
    switch (family) {
        case Family::Normal: return normal_quantile(u);
        case Family::Exponential: return -std::log1p(-u);
        case Family::Gumbel: return -std::log(-std::log(u));
        case Family::Logistic: return std::log(u) - std::log1p(-u);
    }
    return 0.0;
}

/// One draw by inversion.
inline double draw(Family family, SeededGenerator& rng) {
    return quantile(family, rng.uniform());
}

/// n independent draws by inversion of uniform variates.
inline std::vector<double> sample(Family family, std::size_t n, SeededGenerator& rng) {
    if (n == 0) throw DomainError("sample: n must be at least 1");
    std::vector<double> out(n);
    for (auto& v : out) v = draw(family, rng);
    return out;
}

}  // namespace qqgof

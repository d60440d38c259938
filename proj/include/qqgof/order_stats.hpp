#pragma once

// Expected values of order statistics and the plotting positions u_k built
// from them: the abscissa side of every Q-Q plot.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"

namespace qqgof {

enum class PositionMethod {
    ExactExpectation,
    Hazen,       ///< classical (k - 0.5) / n
    HazenTable,  ///< (k - 0.5) / (n + 1), as printed in the common comparison table
    Weibull,
    Beard,
    BenardBosLevenbach,
    Blom,
    Tukey,
    Gringorten,
    FittedAB,
    CompactAB,
};

inline std::string_view to_string(PositionMethod m) {
    switch (m) {
        case PositionMethod::ExactExpectation: return "exact";
        case PositionMethod::Hazen: return "hazen";
        case PositionMethod::HazenTable: return "hazen-table";
        case PositionMethod::Weibull: return "weibull";
        case PositionMethod::Beard: return "beard";
        case PositionMethod::BenardBosLevenbach: return "benard";
        case PositionMethod::Blom: return "blom";
        case PositionMethod::Tukey: return "tukey";
        case PositionMethod::Gringorten: return "gringorten";
        case PositionMethod::FittedAB: return "fitted";
        case PositionMethod::CompactAB: return "compact";
    }
    return "unknown";
}

inline PositionMethod parse_position_method(std::string_view name) {
    for (auto m : {PositionMethod::ExactExpectation, PositionMethod::Hazen,
                   PositionMethod::HazenTable, PositionMethod::Weibull, PositionMethod::Beard,
                   PositionMethod::BenardBosLevenbach, PositionMethod::Blom,
                   PositionMethod::Tukey, PositionMethod::Gringorten, PositionMethod::FittedAB,
                   PositionMethod::CompactAB}) {
        if (to_string(m) == name) return m;
    }
    throw DomainError("unknown plotting-position method: " + std::string(name));
}

/// Offsets (a, b) of the form u_k = (k - a) / (n + b).
struct PositionOffsets {
    double a = 0.0;
    double b = 0.0;
    bool in_range = true;  ///< false when a fitted formula is evaluated outside its validated n
};

/// Fixed offsets of the named rules, or nothing for the n-dependent ones.
inline std::optional<PositionOffsets> named_offsets(PositionMethod m) {
    switch (m) {
        case PositionMethod::Hazen: return PositionOffsets{0.5, 0.0};
        case PositionMethod::HazenTable: return PositionOffsets{0.5, 1.0};
        case PositionMethod::Weibull: return PositionOffsets{0.0, 1.0};
        case PositionMethod::Beard: return PositionOffsets{0.31, 0.38};
        case PositionMethod::BenardBosLevenbach: return PositionOffsets{0.30, 0.20};
        case PositionMethod::Blom: return PositionOffsets{0.375, 0.25};
        case PositionMethod::Tukey: return PositionOffsets{0.333, 0.333};
        case PositionMethod::Gringorten: return PositionOffsets{0.44, 0.12};
        default: return std::nullopt;
    }
}

/// Smooth fits of the offsets that make Phi^{-1}((k - a_n)/(n + b_n)) track
/// the expected normal order statistics.
///
/// The full fit is validated for 3 <= n <= 100, the compact one for n <= 20.
/// Outside those ranges the values are still returned with in_range = false.
inline PositionOffsets fitted_ab(std::size_t n, bool compact = false) {
    if (n == 0) throw DomainError("fitted_ab: n must be positive");
    const double nn = static_cast<double>(n);
    PositionOffsets o;
    if (compact) {
        o.a = 0.3177 * std::pow(nn, 0.0661);
        o.b = 0.3856 / std::pow(nn, 0.1754);
        o.in_range = n <= 20;
    } else {
        o.a = 0.27950585 + 0.04684273 / (0.34986981 + std::pow(nn, -0.79499457));
        o.b = 0.44480354 - 0.09890767 / (0.36353365 + std::pow(nn, -0.78493983));
        o.in_range = n >= 3 && n <= 100;
    }
    return o;
}

/// E(Z_(k)) for the unit exponential: sum_{i=1}^{k} 1/(n+1-i).
inline double expected_exponential_order_stat(std::size_t n, std::size_t k) {
    if (k < 1 || k > n) throw DomainError("expected_exponential_order_stat: need 1 <= k <= n");
    double s = 0.0;
    // Smallest terms first.
    for (std::size_t i = 1; i <= k; ++i) s += 1.0 / static_cast<double>(n + 1 - i);
    return s;
}

/// u_k for the unit exponential: exact F_Z(E(Z_(k))) or the k/(n+1) approximation.
inline std::vector<double> exponential_positions(std::size_t n, bool exact) {
    if (n == 0) throw DomainError("exponential_positions: n must be positive");
    std::vector<double> u(n);
    double h = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (exact) {
            h += 1.0 / static_cast<double>(n + 1 - k);
            u[k - 1] = -std::expm1(-h);
        } else {
            u[k - 1] = static_cast<double>(k) / static_cast<double>(n + 1);
        }
    }
    return u;
}

namespace detail {

struct KronrodEstimate {
    double lo, hi, value, error;
    bool operator<(const KronrodEstimate& o) const { return error < o.error; }
};

// 7-point Gauss / 15-point Kronrod rule on [lo, hi].
template <class F>
KronrodEstimate gauss_kronrod15(const F& f, double lo, double hi) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double kronrod = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double fsum = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * fsum;
        if (j % 2 == 1) gauss += wg[j / 2] * fsum;
    }
    return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

/// Globally adaptive Gauss-Kronrod integration: bisect the sub-interval with
/// the largest error estimate until the summed estimate meets `abs_tol`.
template <class F>
double integrate_adaptive(const F& f, double lo, double hi, double abs_tol,
                          std::size_t initial_pieces, std::size_t max_pieces,
                          const std::string& what) {
    std::priority_queue<KronrodEstimate> pieces;
    const double step = (hi - lo) / static_cast<double>(initial_pieces);
    double total = 0.0, error = 0.0;
    for (std::size_t i = 0; i < initial_pieces; ++i) {
        const double a = lo + step * static_cast<double>(i);
        const double b = i + 1 == initial_pieces ? hi : a + step;
        auto e = gauss_kronrod15(f, a, b);
        total += e.value;
        error += e.error;
        pieces.push(e);
    }
    while (error > abs_tol) {
        if (pieces.size() >= max_pieces) {
            throw NumericError(fmt::format(
                "quadrature did not converge for {}: error estimate {:.3e} > tolerance {:.3e} "
                "after {} sub-intervals",
                what, error, abs_tol, pieces.size()));
        }
        auto worst = pieces.top();
        pieces.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        auto left = gauss_kronrod15(f, worst.lo, mid);
        auto right = gauss_kronrod15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        pieces.push(left);
        pieces.push(right);
    }
    // Re-sum from the pieces to shed the drift of the running updates.
    double sum = 0.0;
    while (!pieces.empty()) {
        sum += pieces.top().value;
        pieces.pop();
    }
    return sum;
}

}  // namespace detail

/// E(Z_(k)) for the standard normal, k-th smallest of n, by adaptive
/// quadrature of x k C(n,k) Phi^{k-1}(x) (1-Phi(x))^{n-k} phi(x) on [-9, 9].
///
/// The density factor is assembled in log space so that n up to 400 does not
/// underflow; absolute error is below 1e-9 in practice (1e-6 guaranteed).
inline double expected_normal_order_stat(std::size_t n, std::size_t k) {
    if (n < 1 || n > 400) throw DomainError("expected_normal_order_stat: need 1 <= n <= 400");
    if (k < 1 || k > n) throw DomainError("expected_normal_order_stat: need 1 <= k <= n");
    if (2 * k == n + 1) return 0.0;

    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    const double log_prefactor = std::log(kd) + std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
                                 std::lgamma(nd - kd + 1.0);
    const double log_phi0 = std::log(detail::inv_sqrt_2pi);
    auto integrand = [&](double x) {
        const double log_density = log_prefactor + (kd - 1.0) * normal_log_cdf(x) +
                                   (nd - kd) * normal_log_cdf(-x) + log_phi0 - 0.5 * x * x;
        return x * std::exp(log_density);
    };
    return detail::integrate_adaptive(integrand, -9.0, 9.0, 1e-11, 36, 4000,
                                      fmt::format("E(Z_({})) with n = {}", k, n));
}

struct PlottingPositions {
    Family family = Family::Normal;
    std::size_t n = 0;
    PositionMethod method = PositionMethod::FittedAB;
    std::vector<double> u;  ///< probability levels u_k, strictly increasing in (0,1)
    std::vector<double> q;  ///< abscissae Q_Z(u_k)
    bool in_range = true;   ///< false if a fitted offset formula was extrapolated
};

/// Whether `method` is defined for `family`.
inline bool method_supports(PositionMethod method, Family family) {
    if (method == PositionMethod::Weibull) return true;
    if (method == PositionMethod::ExactExpectation)
        return family == Family::Normal || family == Family::Exponential;
    return family == Family::Normal;
}

inline PlottingPositions plotting_positions(Family family, std::size_t n, PositionMethod method) {
    if (n == 0) throw DomainError("plotting_positions: n must be positive");
    if (!method_supports(method, family)) {
        throw DomainError(fmt::format("plotting positions '{}' are not defined for the {} family",
                                      to_string(method), to_string(family)));
    }
    PlottingPositions pp{family, n, method, std::vector<double>(n), std::vector<double>(n), true};

    if (method == PositionMethod::ExactExpectation) {
        if (family == Family::Exponential) {
            double h = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                h += 1.0 / static_cast<double>(n + 1 - k);
                pp.q[k - 1] = h;
                pp.u[k - 1] = -std::expm1(-h);
            }
        } else {
            // Lower half by quadrature, upper half by symmetry.
            for (std::size_t k = 1; k <= n; ++k) {
                const std::size_t mirror = n + 1 - k;
                if (mirror < k) {
                    pp.q[k - 1] = -pp.q[mirror - 1];
                } else {
                    pp.q[k - 1] = expected_normal_order_stat(n, k);
                }
                pp.u[k - 1] = normal_cdf(pp.q[k - 1]);
            }
        }
        return pp;
    }

    PositionOffsets off;
    if (auto named = named_offsets(method)) {
        off = *named;
    } else {
        off = fitted_ab(n, method == PositionMethod::CompactAB);
    }
    pp.in_range = off.in_range;
    const double denom = static_cast<double>(n) + off.b;
    for (std::size_t k = 1; k <= n; ++k) {
        pp.u[k - 1] = (static_cast<double>(k) - off.a) / denom;
    }
    if (pp.u.front() <= 0.0 || pp.u.back() >= 1.0) {
        throw DomainError(fmt::format("plotting positions '{}' leave (0,1) for n = {}",
                                      to_string(method), n));
    }
    for (std::size_t k = 0; k < n; ++k) {
        // Symmetric rules: reuse the mirrored value so q_k = -q_{n+1-k} holds exactly.
        const std::size_t mirror = n - 1 - k;
        if (family == Family::Normal && mirror < k &&
            std::abs(pp.u[k] + pp.u[mirror] - 1.0) < 1e-15) {
            pp.q[k] = -pp.q[mirror];
        } else {
            pp.q[k] = quantile(family, pp.u[k]);
        }
    }
    return pp;
}

}  // namespace qqgof

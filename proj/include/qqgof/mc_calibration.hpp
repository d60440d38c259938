#pragma once

// Null calibration of the correlation statistic, refitting of the rational
// interpolation of its parameters, and power studies against Gumbel and
// logistic alternatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"
#include "qqgof/gof_statistics.hpp"
#include "qqgof/gof_tests.hpp"
#include "qqgof/simulation.hpp"

namespace qqgof {

struct Histogram {
    double lo = 0.0;
    double width = 0.0;
    std::vector<std::size_t> counts;
};

inline Histogram make_histogram(std::span<const double> sorted, std::size_t bins) {
    Histogram h;
    if (sorted.empty() || bins == 0) return h;
    // Central 99.9% of the mass; extreme draws fall into the edge bins.
    const std::size_t m = sorted.size();
    const double lo = sorted[m / 2000];
    const double hi = sorted[m - 1 - m / 2000];
    h.lo = lo;
    h.width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    h.counts.assign(bins, 0);
    for (double v : sorted) {
        if (!std::isfinite(v)) continue;
        const double pos = (v - lo) / h.width;
        const auto idx = static_cast<std::ptrdiff_t>(std::floor(pos));
        h.counts[static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins) - 1))]++;
    }
    return h;
}

struct CalibrationTable {
    std::size_t n = 0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    double mu_n = 0.0;      ///< sample mean of the simulated T_n
    double sigma_n = 0.0;   ///< sample standard deviation of the simulated T_n
    std::map<double, double> quantiles;
    Histogram histogram;
};

inline constexpr std::array<double, 7> calibration_probabilities = {0.01, 0.025, 0.05, 0.10,
                                                                    0.50, 0.90, 0.95};

/// Simulates the null law of T_n for standard normal samples of size n.
inline CalibrationTable calibrate_null(std::size_t n, std::size_t reps, std::uint64_t seed,
                                       const SimulationOptions& sim = {},
                                       std::size_t histogram_bins = 60) {
    if (n < 5) throw DomainError("calibrate_null: n must be at least 5");
    detail::check_reps(reps);
    const auto null = NullDistribution::simulate(TestKind::CorrelationT, n, {reps, seed, sim});
    const auto sorted = null.sorted();

    CalibrationTable table;
    table.n = n;
    table.reps = reps;
    table.seed = seed;
    // Perfect-fit draws (T = +inf) are impossible in practice, but guard the moments anyway.
    std::vector<double> finite;
    finite.reserve(sorted.size());
    for (double v : sorted)
        if (std::isfinite(v)) finite.push_back(v);
    std::tie(table.mu_n, table.sigma_n) = detail::mean_and_sd(finite);
    for (double p : calibration_probabilities) table.quantiles[p] = null.quantile(p);
    table.histogram = make_histogram(finite, histogram_bins);
    return table;
}

struct InterpolationFit {
    RationalCurve mu;
    RationalCurve sigma;
};

/// Least-squares fit of y = (p n + q) / (n + r).
///
/// Starts from the linearized problem y n = p n + q - r y, which is exact for
/// points on a curve of this class, then refines the true residuals by
/// Gauss-Newton.
inline RationalCurve fit_rational(std::span<const double> ns, std::span<const double> ys) {
    const auto m = static_cast<Eigen::Index>(ns.size());
    if (ns.size() != ys.size()) throw DomainError("fit_rational: size mismatch");
    if (m < 3) throw NumericError("fit_rational: need at least 3 points");

    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = ns[i];
        a(i, 1) = 1.0;
        a(i, 2) = -ys[i];
        rhs(i) = ys[i] * ns[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < 3) throw NumericError("fit_rational: rank-deficient design");
    Eigen::Vector3d theta = qr.solve(rhs);

    auto residuals = [&](const Eigen::Vector3d& t) {
        Eigen::VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i) r(i) = (t(0) * ns[i] + t(1)) / (ns[i] + t(2)) - ys[i];
        return r;
    };
    double cost = residuals(theta).squaredNorm();
    for (int iter = 0; iter < 50 && cost > 0.0; ++iter) {
        Eigen::MatrixXd jac(m, 3);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double den = ns[i] + theta(2);
            jac(i, 0) = ns[i] / den;
            jac(i, 1) = 1.0 / den;
            jac(i, 2) = -(theta(0) * ns[i] + theta(1)) / (den * den);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> step_qr(jac);
        if (step_qr.rank() < 3) break;
        const Eigen::Vector3d step = step_qr.solve(-residuals(theta));
        // Halve until the step improves the fit.
        double scale = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h, scale *= 0.5) {
            const Eigen::Vector3d trial = theta + scale * step;
            const double c = residuals(trial).squaredNorm();
            if (c < cost) {
                improved = c < cost * (1.0 - 1e-14);
                theta = trial;
                cost = c;
                break;
            }
        }
        if (!improved) break;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(ns[i] + theta(2)) < 1e-12) throw NumericError("fit_rational: pole at a data point");
    }
    return {theta(0), theta(1), theta(2)};
}

/// Refits the interpolation of (mu_n, sigma_n) over a set of calibrations.
inline InterpolationFit fit_interpolation(std::span<const CalibrationTable> tables) {
    if (tables.size() < 4) throw DomainError("fit_interpolation: need at least 4 tables");
    std::vector<double> ns, mus, sigmas;
    for (const auto& t : tables) {
        ns.push_back(static_cast<double>(t.n));
        mus.push_back(t.mu_n);
        sigmas.push_back(t.sigma_n);
    }
    return {fit_rational(ns, mus), fit_rational(ns, sigmas)};
}

struct PowerRow {
    TestKind test = TestKind::CorrelationT;
    Family alternative = Family::Gumbel;
    std::size_t n = 0;
    double alpha = 0.0;
    double critical_value = 0.0;
    double beta = 0.0;  ///< fraction of alternative samples the test accepts
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

/// Type-II error rates of `test` against `alternative` at each alpha.
///
/// Critical values come from a null simulation with `seed`; the alternative
/// samples use an independent stream derived from the same seed.
inline std::vector<PowerRow> power_study(TestKind test, Family alternative, std::size_t n,
                                         std::span<const double> alphas, std::size_t reps,
                                         std::uint64_t seed, const SimulationOptions& sim = {}) {
    if (alternative != Family::Gumbel && alternative != Family::Logistic) {
        throw DomainError("power_study: alternative must be gumbel or logistic");
    }
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw DomainError("power_study: alphas must lie in (0,1)");
    detail::check_reps(reps);

    const StatisticEvaluator stat(test, n);
    const NullDistribution null(test, n, simulate_statistic(stat, Family::Normal, reps, seed, sim));
    const auto alt = simulate_statistic(stat, alternative, reps, derive_seed(seed, 0xa17e), sim);

    std::vector<PowerRow> rows;
    for (double a : alphas) {
        const double crit = null.critical_value(a);
        std::size_t accepted = 0;
        for (double s : alt)
            if (!null.rejects(s, crit)) ++accepted;
        rows.push_back({test, alternative, n, a, crit,
                        static_cast<double>(accepted) / static_cast<double>(reps), reps, seed});
    }
    return rows;
}

}  // namespace qqgof

#pragma once

// Normality test statistics computed from ordered samples. All of them are
// invariant under x -> a + b x with b > 0, so their null distributions do
// not depend on the normal's parameters.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"
#include "qqgof/order_stats.hpp"
#include "qqgof/qq_regression.hpp"

namespace qqgof {

enum class TestKind { CorrelationT, Lilliefors, ShapiroWilk, ShapiroFrancia };

inline std::string_view to_string(TestKind t) {
    switch (t) {
        case TestKind::CorrelationT: return "correlation";
        case TestKind::Lilliefors: return "lilliefors";
        case TestKind::ShapiroWilk: return "shapiro-wilk";
        case TestKind::ShapiroFrancia: return "shapiro-francia";
    }
    return "unknown";
}

inline TestKind parse_test_kind(std::string_view name) {
    if (name == "correlation" || name == "t") return TestKind::CorrelationT;
    if (name == "lilliefors") return TestKind::Lilliefors;
    if (name == "shapiro-wilk" || name == "sw") return TestKind::ShapiroWilk;
    if (name == "shapiro-francia" || name == "sf") return TestKind::ShapiroFrancia;
    throw DomainError("unknown test: " + std::string(name));
}

/// Small statistic values indicate misfit for these tests (reject in the left tail).
constexpr bool rejects_left(TestKind t) { return t != TestKind::Lilliefors; }

/// T = -ln(1 - rho). A perfectly linear plot (rho = 1) maps to +infinity.
inline double t_from_rho(double rho) {
    const double gap = 1.0 - rho;
    if (gap <= std::numeric_limits<double>::epsilon()) {
        return std::numeric_limits<double>::infinity();
    }
    return -std::log(gap);
}

struct TStatistic {
    double value = 0.0;
    bool perfect_fit = false;  ///< rho within machine epsilon of 1; value is +inf
};

inline TStatistic t_statistic(const QQFit& fit) {
    if (fit.degenerate || !fit.rho) throw DataError("t_statistic: degenerate Q-Q fit");
    const double t = t_from_rho(*fit.rho);
    return {t, std::isinf(t)};
}

/// Correlation statistic for ascending `sorted` against abscissae `q`.
inline double correlation_t(std::span<const double> sorted, std::span<const double> q) {
    const auto rho = plot_correlation(q, sorted);
    if (!rho) throw DataError("correlation statistic: zero sample variance");
    return t_from_rho(*rho);
}

/// Kolmogorov distance between the empirical CDF of the studentized sample
/// and Phi (Lilliefors' statistic), with s the n-1 standard deviation.
inline double lilliefors_statistic(std::span<const double> sorted) {
    const std::size_t n = sorted.size();
    if (n < 4) throw DomainError("lilliefors: need at least 4 observations");
    CompensatedSum s1;
    for (double v : sorted) s1.add(v);
    const double mean = s1.value() / static_cast<double>(n);
    CompensatedSum s2;
    for (double v : sorted) s2.add((v - mean) * (v - mean));
    const double var = s2.value() / static_cast<double>(n - 1);
    if (!(var > 0.0)) throw DataError("lilliefors: zero sample variance");
    const double sd = std::sqrt(var);

    const double nd = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = normal_cdf((sorted[k] - mean) / sd);
        const double above = static_cast<double>(k + 1) / nd - p;
        const double below = p - static_cast<double>(k) / nd;
        d = std::max({d, above, below});
    }
    return d;
}

inline double lilliefors_statistic(const Sample& s) { return lilliefors_statistic(s.sorted()); }

/// Shapiro-Wilk coefficients by Royston's approximation (Applied Statistics
/// AS R94): normalized Blom scores m_i = Phi^{-1}((i - 3/8)/(n + 1/4)) with
/// quintic corrections in u = 1/sqrt(n) for the one (n <= 5) or two (n > 5)
/// most extreme weights; the others are rescaled so that sum a_i^2 = 1.
/// For n = 3 the exact weights (-1/sqrt2, 0, 1/sqrt2) are used.
class ShapiroWilkWeights {
public:
    static constexpr std::size_t min_n = 3;
    static constexpr std::size_t max_n = 5000;

    explicit ShapiroWilkWeights(std::size_t n) : a_(n, 0.0) {
        if (n < min_n || n > max_n) {
            throw DomainError(fmt::format("shapiro-wilk: n = {} outside [{}, {}]", n, min_n, max_n));
        }
        if (n == 3) {
            a_[0] = -std::sqrt(0.5);
            a_[2] = std::sqrt(0.5);
            return;
        }
        const double nd = static_cast<double>(n);
        std::vector<double> m(n);
        double ssq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t mirror = n - 1 - i;
            m[i] = mirror < i ? -m[mirror]
                              : normal_quantile((static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
            ssq += m[i] * m[i];
        }
        const double u = 1.0 / std::sqrt(nd);
        const double norm = std::sqrt(ssq);
        static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
        static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};

        const double an = m[n - 1] / norm + detail::horner(c1, u);
        if (n <= 5) {
            const double phi = (ssq - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            const double scale = std::sqrt(phi);
            for (std::size_t i = 1; i + 1 < n; ++i) a_[i] = m[i] / scale;
            a_[n - 1] = an;
            a_[0] = -an;
        } else {
            const double an1 = m[n - 2] / norm + detail::horner(c2, u);
            const double phi = (ssq - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                               (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            const double scale = std::sqrt(phi);
            for (std::size_t i = 2; i + 2 < n; ++i) a_[i] = m[i] / scale;
            a_[n - 1] = an;
            a_[0] = -an;
            a_[n - 2] = an1;
            a_[1] = -an1;
        }
    }

    std::size_t size() const noexcept { return a_.size(); }
    std::span<const double> coefficients() const noexcept { return a_; }

private:
    std::vector<double> a_;
};

/// W = (sum a_i x_(i))^2 / sum (x_i - mean)^2.
inline double shapiro_wilk_statistic(std::span<const double> sorted, const ShapiroWilkWeights& w) {
    const std::size_t n = sorted.size();
    if (n != w.size()) throw DomainError("shapiro-wilk: weights built for a different n");
    CompensatedSum s1;
    for (double v : sorted) s1.add(v);
    const double mean = s1.value() / static_cast<double>(n);
    CompensatedSum ss, lin;
    const auto a = w.coefficients();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = sorted[i] - mean;
        ss.add(d * d);
        lin.add(a[i] * d);
    }
    if (!(ss.value() > 0.0)) throw DataError("shapiro-wilk: zero sample variance");
    return std::min(1.0, lin.value() * lin.value() / ss.value());
}

inline double shapiro_wilk_statistic(const Sample& s) {
    if (s.size() > 50) {
        throw RangeError("shapiro-wilk: supported for 3 <= n <= 50");
    }
    return shapiro_wilk_statistic(s.sorted(), ShapiroWilkWeights(s.size()));
}

/// Shapiro-Francia W' = squared plot correlation against exact expected
/// normal order statistics.
inline double shapiro_francia_statistic(std::span<const double> sorted,
                                        std::span<const double> expected_scores) {
    const auto rho = plot_correlation(expected_scores, sorted);
    if (!rho) throw DataError("shapiro-francia: zero sample variance");
    return *rho * *rho;
}

/// Evaluates one statistic repeatedly for a fixed n, with all n-dependent
/// constants (plotting positions, weights) computed once.
class StatisticEvaluator {
public:
    StatisticEvaluator(TestKind test, std::size_t n) : test_(test), n_(n) {
        switch (test) {
            case TestKind::CorrelationT:
                if (n < 3) throw DomainError("correlation test: need n >= 3");
                abscissae_ = plotting_positions(Family::Normal, n, PositionMethod::FittedAB).q;
                break;
            case TestKind::ShapiroFrancia:
                if (n < 3) throw DomainError("shapiro-francia: need n >= 3");
                abscissae_ =
                    plotting_positions(Family::Normal, n, PositionMethod::ExactExpectation).q;
                break;
            case TestKind::ShapiroWilk: weights_.emplace(n); break;
            case TestKind::Lilliefors:
                if (n < 4) throw DomainError("lilliefors: need n >= 4");
                break;
        }
    }

    TestKind test() const noexcept { return test_; }
    std::size_t n() const noexcept { return n_; }

    /// Statistic of an ascending sample of size n.
    double operator()(std::span<const double> sorted) const {
        switch (test_) {
            case TestKind::CorrelationT: return correlation_t(sorted, abscissae_);
            case TestKind::ShapiroFrancia: return shapiro_francia_statistic(sorted, abscissae_);
            case TestKind::ShapiroWilk: return shapiro_wilk_statistic(sorted, *weights_);
            case TestKind::Lilliefors: return lilliefors_statistic(sorted);
        }
        return 0.0;
    }

private:
    TestKind test_;
    std::size_t n_;
    std::vector<double> abscissae_;
    std::optional<ShapiroWilkWeights> weights_;
};

}  // namespace qqgof

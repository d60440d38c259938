#pragma once

// Goodness-of-fit tests with p-values: the Q-Q correlation test with its
// normal approximation of the null law, and Monte Carlo p-values for all
// statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"
#include "qqgof/gof_statistics.hpp"
#include "qqgof/order_stats.hpp"
#include "qqgof/qq_regression.hpp"
#include "qqgof/simulation.hpp"

namespace qqgof {

enum class PMethod { NormalApprox, MonteCarlo };

inline std::string_view to_string(PMethod m) {
    return m == PMethod::NormalApprox ? "normal-approx" : "monte-carlo";
}

inline constexpr std::array<double, 3> default_alphas = {0.01, 0.05, 0.10};
inline constexpr std::size_t min_mc_reps = 10'000;
inline constexpr std::size_t default_mc_reps = 100'000;
inline constexpr std::uint64_t default_seed = 20200105;

struct GofResult {
    TestKind test = TestKind::CorrelationT;
    double statistic = 0.0;
    double p_value = 0.0;
    PMethod p_method = PMethod::NormalApprox;
    std::size_t n = 0;
    std::map<double, bool> reject_at;  ///< alpha -> (p_value < alpha)
};

template <class Alphas = decltype(default_alphas)>
GofResult make_result(TestKind test, double statistic, double p, PMethod method, std::size_t n,
                      const Alphas& alphas = default_alphas) {
    GofResult r{test, statistic, std::clamp(p, 0.0, 1.0), method, n, {}};
    for (double a : alphas) r.reject_at[a] = r.p_value < a;
    return r;
}

// ---------------------------------------------------------------------------
// Null distribution of T_n = -ln(1 - rho_n): normal approximation parameters.

enum class NullSource { Published, Interpolation, MonteCarlo };

inline std::string_view to_string(NullSource s) {
    switch (s) {
        case NullSource::Published: return "table";
        case NullSource::Interpolation: return "interpolation";
        case NullSource::MonteCarlo: return "monte-carlo";
    }
    return "unknown";
}

struct NullParams {
    std::size_t n = 0;
    double mu_n = 0.0;
    double sigma_n = 0.0;
    NullSource source = NullSource::Published;
};

/// Published simulated null parameters of T_n (10^6 replications each) next
/// to the values of the rational interpolation at the same n.
struct NullTableRow {
    std::size_t n;
    double mu;
    double mu_interp;
    double sigma;
    double sigma_interp;
};

inline constexpr std::array<NullTableRow, 13> null_table = {{
    {10, 3.5221, 3.5233, 0.6323, 0.6312},
    {11, 3.5727, 3.5741, 0.6201, 0.6200},
    {12, 3.6219, 3.6226, 0.6103, 0.6103},
    {13, 3.6696, 3.6692, 0.6005, 0.6019},
    {14, 3.7152, 3.7139, 0.5935, 0.5945},
    {15, 3.7584, 3.7568, 0.5873, 0.5879},
    {16, 3.7998, 3.7980, 0.5813, 0.5820},
    {17, 3.8385, 3.8377, 0.5767, 0.5768},
    {18, 3.8773, 3.8759, 0.5730, 0.5720},
    {19, 3.9119, 3.9126, 0.5679, 0.5676},
    {20, 3.9475, 3.9481, 0.5645, 0.5637},
    {26, 4.1328, 4.1364, 0.5473, 0.5458},
    {50, 4.6259, 4.6250, 0.5138, 0.5148},
}};

/// Rational curve (p n + q) / (n + r).
struct RationalCurve {
    double p = 0.0;
    double q = 0.0;
    double r = 0.0;
    double operator()(double n) const { return (p * n + q) / (n + r); }
};

inline constexpr RationalCurve null_mu_curve{5.87383, 101.011, 35.3404};
inline constexpr RationalCurve null_sigma_curve{0.477812, 3.25495, 2.72721};
inline constexpr std::size_t interpolation_min_n = 10;
inline constexpr std::size_t interpolation_max_n = 50;

inline std::optional<NullTableRow> null_table_row(std::size_t n) {
    for (const auto& row : null_table)
        if (row.n == n) return row;
    return std::nullopt;
}

struct McSettings {
    std::size_t reps = default_mc_reps;
    std::uint64_t seed = default_seed;
    SimulationOptions sim{};
};

namespace detail {

inline void check_reps(std::size_t reps) {
    if (reps < min_mc_reps) {
        throw DomainError(
            fmt::format("Monte Carlo needs at least {} replications, got {}", min_mc_reps, reps));
    }
}

inline std::pair<double, double> mean_and_sd(std::span<const double> v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    const double mean = s.value() / static_cast<double>(v.size());
    CompensatedSum ss;
    for (double x : v) ss.add((x - mean) * (x - mean));
    return {mean, std::sqrt(ss.value() / static_cast<double>(v.size() - 1))};
}

}  // namespace detail

/// Parameters (mu_n, sigma_n) of the normal approximation to the null law of T_n.
inline NullParams null_params(std::size_t n, NullSource source, const McSettings& mc = {}) {
    switch (source) {
        case NullSource::Published: {
            const auto row = null_table_row(n);
            if (!row) {
                throw RangeError(fmt::format(
                    "no tabulated null parameters for n = {} (available: 10-20, 26, 50)", n));
            }
            return {n, row->mu, row->sigma, source};
        }
        case NullSource::Interpolation: {
            if (n < interpolation_min_n || n > interpolation_max_n) {
                throw RangeError(fmt::format("null-parameter interpolation covers {} <= n <= {}",
                                             interpolation_min_n, interpolation_max_n));
            }
            const double nd = static_cast<double>(n);
            return {n, null_mu_curve(nd), null_sigma_curve(nd), source};
        }
        case NullSource::MonteCarlo: {
            if (n < 5) throw RangeError("Monte Carlo null parameters need n >= 5");
            detail::check_reps(mc.reps);
            const auto t = simulate_statistic(TestKind::CorrelationT, Family::Normal, n, mc.reps,
                                              mc.seed, mc.sim);
            const auto [mean, sd] = detail::mean_and_sd(t);
            return {n, mean, sd, source};
        }
    }
    throw DomainError("unknown null source");
}

/// Tabulated values where available, otherwise the interpolation.
inline NullParams default_null_params(std::size_t n) {
    if (null_table_row(n)) return null_params(n, NullSource::Published);
    if (n >= interpolation_min_n && n <= interpolation_max_n)
        return null_params(n, NullSource::Interpolation);
    throw RangeError(fmt::format(
        "normal approximation of the correlation test is calibrated for 10 <= n <= 50 only "
        "(n = {}); use Monte Carlo p-values",
        n));
}

/// Left-tail p-value Phi((T - mu_n) / sigma_n): small correlation, small T, small p.
inline double correlation_p_value(double t, const NullParams& params) {
    if (!(params.sigma_n > 0.0)) throw DomainError("null sigma must be positive");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    return normal_cdf((t - params.mu_n) / params.sigma_n);
}

// ---------------------------------------------------------------------------
// Monte Carlo null distributions.

/// Sorted simulated null statistics of one test at one n.
class NullDistribution {
public:
    NullDistribution(TestKind test, std::size_t n, std::vector<double> statistics)
        : test_(test), n_(n), sorted_(std::move(statistics)) {
        std::sort(sorted_.begin(), sorted_.end());
    }

    static NullDistribution simulate(TestKind test, std::size_t n, const McSettings& mc = {}) {
        detail::check_reps(mc.reps);
        return {test, n, simulate_statistic(test, Family::Normal, n, mc.reps, mc.seed, mc.sim)};
    }

    TestKind test() const noexcept { return test_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t reps() const noexcept { return sorted_.size(); }
    std::span<const double> sorted() const noexcept { return sorted_; }

    /// (r + 1) / (reps + 1) with r the count of simulated values at least as
    /// extreme as `statistic` in the rejecting tail.
    double p_value(double statistic) const {
        std::size_t r;
        if (rejects_left(test_)) {
            r = static_cast<std::size_t>(
                std::upper_bound(sorted_.begin(), sorted_.end(), statistic) - sorted_.begin());
        } else {
            r = static_cast<std::size_t>(
                sorted_.end() - std::lower_bound(sorted_.begin(), sorted_.end(), statistic));
        }
        return static_cast<double>(r + 1) / static_cast<double>(sorted_.size() + 1);
    }

    /// Critical value for level alpha: the ceil(alpha reps)-th smallest
    /// value for left-tailed tests, the ceil(alpha reps)-th largest otherwise.
    double critical_value(double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
        const std::size_t reps = sorted_.size();
        auto rank = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(reps)));
        rank = std::clamp<std::size_t>(rank, 1, reps);
        return rejects_left(test_) ? sorted_[rank - 1] : sorted_[reps - rank];
    }

    /// Whether `statistic` falls in the rejection region bounded by `critical`.
    bool rejects(double statistic, double critical) const {
        return rejects_left(test_) ? statistic <= critical : statistic >= critical;
    }

    /// Empirical quantile at probability p (order statistic ceil(p reps)).
    double quantile(double p) const {
        const std::size_t reps = sorted_.size();
        auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(reps)));
        return sorted_[std::clamp<std::size_t>(rank, 1, reps) - 1];
    }

private:
    TestKind test_;
    std::size_t n_;
    std::vector<double> sorted_;
};

/// Monte Carlo p-value of an observed statistic against `reps` simulated
/// standard-normal samples of size n.
inline double mc_p_value(TestKind test, double statistic, std::size_t n, std::size_t reps,
                         std::uint64_t seed, const SimulationOptions& sim = {}) {
    return NullDistribution::simulate(test, n, {reps, seed, sim}).p_value(statistic);
}

// ---------------------------------------------------------------------------
// Tests on samples.

struct CorrelationTestOptions {
    PMethod method = PMethod::NormalApprox;
    std::optional<NullSource> source;  ///< normal-approx parameters; default: table, else interpolation
    McSettings mc{};
};

/// Correlation test of normality: fit the Q-Q plot with fitted-offset
/// positions, T = -ln(1 - rho), left-tail p-value.
inline GofResult correlation_test(const Sample& sample, const CorrelationTestOptions& opts = {}) {
    const std::size_t n = sample.size();
    const auto positions = plotting_positions(Family::Normal, n, PositionMethod::FittedAB);
    const auto f = fit(sample, positions);
    const double t = t_statistic(f).value;

    if (opts.method == PMethod::MonteCarlo) {
        const double p = mc_p_value(TestKind::CorrelationT, t, n, opts.mc.reps, opts.mc.seed,
                                    opts.mc.sim);
        return make_result(TestKind::CorrelationT, t, p, PMethod::MonteCarlo, n);
    }
    if (n < interpolation_min_n) {
        throw RangeError(fmt::format(
            "normal-approximation p-values need n >= 10 (n = {}); use Monte Carlo", n));
    }
    const auto params = opts.source ? null_params(n, *opts.source, opts.mc) : default_null_params(n);
    return make_result(TestKind::CorrelationT, t, correlation_p_value(t, params),
                       PMethod::NormalApprox, n);
}

/// Lilliefors or Shapiro-Wilk (or Shapiro-Francia) with a Monte Carlo p-value.
inline GofResult mc_test(TestKind test, const Sample& sample, const McSettings& mc = {}) {
    if (test == TestKind::ShapiroWilk && sample.size() > 50) {
        throw RangeError(fmt::format("Shapiro-Wilk is limited to n <= 50 (n = {})", sample.size()));
    }
    const StatisticEvaluator stat(test, sample.size());
    const double s = stat(sample.sorted());
    const double p = mc_p_value(test, s, sample.size(), mc.reps, mc.seed, mc.sim);
    return make_result(test, s, p, PMethod::MonteCarlo, sample.size());
}

}  // namespace qqgof

#pragma once

// Least-squares line through a Q-Q plot: location/scale estimates, the plot
// correlation, and value-at-risk read off the fitted line.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"
#include "qqgof/order_stats.hpp"

namespace qqgof {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

enum class Transform { Identity, Log };

inline std::string_view to_string(Transform t) {
    return t == Transform::Log ? "log" : "identity";
}

/// Observations of one risk, kept together with their transformed order statistics.
class Sample {
public:
    static constexpr std::size_t min_size = 3;

    explicit Sample(std::vector<double> values, Transform transform = Transform::Identity)
        : values_(std::move(values)), transform_(transform) {
        if (values_.size() < min_size) {
            throw DomainError(fmt::format("sample needs at least {} observations, got {}",
                                          min_size, values_.size()));
        }
        sorted_.reserve(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double v = values_[i];
            if (!std::isfinite(v)) {
                throw DataError(fmt::format("observation {} is not finite", i + 1));
            }
            if (transform_ == Transform::Log) {
                if (v <= 0.0) {
                    throw DataError(fmt::format(
                        "observation {} = {} is not positive; log transform impossible", i + 1, v));
                }
                sorted_.push_back(std::log(v));
            } else {
                sorted_.push_back(v);
            }
        }
        std::stable_sort(sorted_.begin(), sorted_.end());
    }

    std::size_t size() const noexcept { return values_.size(); }
    Transform transform() const noexcept { return transform_; }
    std::span<const double> values() const noexcept { return values_; }
    /// Transformed values in ascending order: X_(1) <= ... <= X_(n).
    std::span<const double> sorted() const noexcept { return sorted_; }

private:
    std::vector<double> values_;
    Transform transform_;
    std::vector<double> sorted_;
};

/// Centered cross moments of the (q_k, x_k) pairs.
struct PairMoments {
    double mean_q = 0.0;
    double mean_x = 0.0;
    double sqq = 0.0;
    double sxx = 0.0;
    double sqx = 0.0;
};

inline PairMoments pair_moments(std::span<const double> q, std::span<const double> x) {
    const std::size_t n = q.size();
    CompensatedSum sq, sx;
    for (std::size_t k = 0; k < n; ++k) {
        sq.add(q[k]);
        sx.add(x[k]);
    }
    PairMoments m;
    m.mean_q = sq.value() / static_cast<double>(n);
    m.mean_x = sx.value() / static_cast<double>(n);
    CompensatedSum cqq, cxx, cqx;
    for (std::size_t k = 0; k < n; ++k) {
        const double dq = q[k] - m.mean_q;
        const double dx = x[k] - m.mean_x;
        cqq.add(dq * dq);
        cxx.add(dx * dx);
        cqx.add(dq * dx);
    }
    m.sqq = cqq.value();
    m.sxx = cxx.value();
    m.sqx = cqx.value();
    return m;
}

/// Pearson correlation of sorted observations against plot abscissae.
/// Returns nullopt if either coordinate has zero spread.
inline std::optional<double> plot_correlation(std::span<const double> q,
                                              std::span<const double> sorted) {
    const auto m = pair_moments(q, sorted);
    if (!(m.sqq > 0.0) || !(m.sxx > 0.0)) return std::nullopt;
    return std::clamp(m.sqx / std::sqrt(m.sqq * m.sxx), -1.0, 1.0);
}

struct QQFit {
    double mu_hat = 0.0;          ///< intercept: location estimate
    double sigma_hat = 0.0;       ///< slope: scale estimate
    std::optional<double> rho;    ///< plot correlation; empty when degenerate
    bool degenerate = false;      ///< zero spread in the observations
    bool scale_only = false;      ///< fitted through the origin
    PlottingPositions positions;
    std::vector<double> sorted;   ///< ordinates X_(k)
    std::size_t n = 0;

    /// Observation minus fitted line at each plot point.
    std::vector<double> residuals() const {
        std::vector<double> r(n);
        for (std::size_t k = 0; k < n; ++k)
            r[k] = sorted[k] - (mu_hat + sigma_hat * positions.q[k]);
        return r;
    }
};

namespace detail {

inline void check_fit_inputs(const Sample& sample, const PlottingPositions& positions) {
    if (sample.size() != positions.n || positions.q.size() != positions.n) {
        throw DomainError(fmt::format("sample size {} does not match {} plotting positions",
                                      sample.size(), positions.n));
    }
}

}  // namespace detail

/// Ordinary least squares of X_(k) on Q_Z(u_k).
///
/// With u_k = F_Z(E(Z_(k))) both estimates are unbiased for the location and
/// scale of X = mu + sigma Z. A sample without spread yields a degenerate fit
/// with sigma_hat = 0 and no correlation.
inline QQFit fit(const Sample& sample, const PlottingPositions& positions) {
    detail::check_fit_inputs(sample, positions);
    const auto x = sample.sorted();
    const auto m = pair_moments(positions.q, x);
    if (!(m.sqq > 0.0)) throw DomainError("fit: plotting positions have zero spread");

    QQFit f;
    f.n = sample.size();
    f.positions = positions;
    f.sorted.assign(x.begin(), x.end());
    f.sigma_hat = m.sqx / m.sqq;
    f.mu_hat = m.mean_x - f.sigma_hat * m.mean_q;
    if (m.sxx > 0.0) {
        f.rho = std::clamp(m.sqx / std::sqrt(m.sqq * m.sxx), -1.0, 1.0);
    } else {
        f.degenerate = true;
        f.sigma_hat = 0.0;
        f.mu_hat = m.mean_x;
    }
    return f;
}

/// Least squares through the origin, for pure scale families (mu = 0).
inline QQFit fit_scale_only(const Sample& sample, const PlottingPositions& positions) {
    detail::check_fit_inputs(sample, positions);
    const auto x = sample.sorted();
    CompensatedSum sqx, sqq;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sqx.add(x[k] * positions.q[k]);
        sqq.add(positions.q[k] * positions.q[k]);
    }
    if (!(sqq.value() > 0.0)) throw DomainError("fit_scale_only: all plot abscissae are zero");

    QQFit f;
    f.n = sample.size();
    f.positions = positions;
    f.sorted.assign(x.begin(), x.end());
    f.scale_only = true;
    f.sigma_hat = sqx.value() / sqq.value();
    f.mu_hat = 0.0;
    f.rho = plot_correlation(positions.q, x);
    f.degenerate = !f.rho.has_value();
    return f;
}

struct VarEstimate {
    double value = 0.0;
    double alpha = 0.0;
    bool exponentiated = false;
    /// exp of an unbiased estimate overstates the lognormal quantile on
    /// average (Jensen); flagged, not corrected.
    bool biased_upward = false;
};

/// Value at risk at level alpha from the fitted line: mu_hat + sigma_hat Q_Z(1 - alpha),
/// optionally mapped back through exp for log-transformed data.
inline VarEstimate var_estimate(const QQFit& f, double alpha, bool exponentiate = false) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("var_estimate: alpha must lie in (0,1)");
    if (f.degenerate) throw DataError("var_estimate: degenerate fit");
    const double v = f.mu_hat + f.sigma_hat * quantile(f.positions.family, 1.0 - alpha);
    if (exponentiate) return {std::exp(v), alpha, true, true};
    return {v, alpha, false, false};
}

}  // namespace qqgof

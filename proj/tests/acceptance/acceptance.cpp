// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qqgof/cli.hpp"
#include "qqgof/mc_calibration.hpp"

using namespace qqgof;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, std::string what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "" : "!! ") + std::move(what));
    }
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

Outcome null_calibration() {
    Outcome o;
    for (std::size_t n : {10u, 14u, 18u, 20u, 50u}) {
        const auto row = *null_table_row(n);
        const auto start = std::chrono::steady_clock::now();
        const auto t = calibrate_null(n, 100000, derive_seed(default_seed, n));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.check(std::abs(t.mu_n - row.mu) <= 0.01 && std::abs(t.sigma_n - row.sigma) <= 0.01 && secs < 120.0,
                fmt::format("n={}: mu {:.4f} (ref {:.4f}), sigma {:.4f} (ref {:.4f}), {:.1f}s", n, t.mu_n,
                            row.mu, t.sigma_n, row.sigma, secs));
    }
    return o;
}

Outcome interpolation() {
    Outcome o;
    std::size_t bad = 0;
    for (const auto& row : null_table) {
        const double nd = static_cast<double>(row.n);
        const bool ok = std::round(null_mu_curve(nd) * 1e4) == std::round(row.mu_interp * 1e4) &&
                        std::round(null_sigma_curve(nd) * 1e4) == std::round(row.sigma_interp * 1e4);
        if (!ok) {
            ++bad;
            o.check(false, fmt::format("n={}: {:.4f}/{:.4f} vs {:.4f}/{:.4f}", row.n, null_mu_curve(nd),
                                       null_sigma_curve(nd), row.mu_interp, row.sigma_interp));
        }
    }
    o.check(bad == 0, fmt::format("{} of {} rows match to 4 decimals", null_table.size() - bad, null_table.size()));
    return o;
}

Outcome p_value_mapping() {
    Outcome o;
    struct Case {
        double t;
        std::size_t n;
        double p;
    };
    for (const auto& c : {Case{3.9443, 14, 0.6496}, Case{4.6539, 18, 0.9130}, Case{3.3515, 18, 0.1795},
                          Case{2.1064, 18, 0.0009}}) {
        const double p = correlation_p_value(c.t, null_params(c.n, NullSource::Published));
        o.check(std::abs(p - c.p) <= 0.01, fmt::format("T={} n={}: {:.2f}% (ref {:.2f}%)", c.t, c.n,
                                                     100 * p, 100 * c.p));
    }
    return o;
}

Outcome power_tables() {
    Outcome o;
    const std::vector<double> alphas{0.01, 0.05, 0.10};
    const auto start = std::chrono::steady_clock::now();
    const auto corr = power_study(TestKind::CorrelationT, Family::Gumbel, 20, alphas, 100000, default_seed);
    const auto lill = power_study(TestKind::Lilliefors, Family::Gumbel, 20, alphas, 100000, default_seed);
    const auto sw = power_study(TestKind::ShapiroWilk, Family::Gumbel, 20, alphas, 100000, default_seed);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double corr_beta[] = {0.8470, 0.6931, 0.5911};
    const double lill_beta[] = {0.9215, 0.7960, 0.6984};
    const double lill_crit[] = {0.2230, 0.1918, 0.1762};
    const double sw_crit[] = {0.8672, 0.9042, 0.9199};
    const double sw_beta[] = {0.8409, 0.6876, 0.5850};
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const double a = 100 * alphas[i];
        o.check(std::abs(corr[i].beta - corr_beta[i]) <= 0.01,
                fmt::format("correlation a={}%: beta {:.2f}% (ref {:.2f}%)", a, 100 * corr[i].beta, 100 * corr_beta[i]));
        o.check(std::abs(lill[i].beta - lill_beta[i]) <= 0.01,
                fmt::format("lilliefors a={}%: beta {:.2f}% (ref {:.2f}%)", a, 100 * lill[i].beta, 100 * lill_beta[i]));
        o.check(std::abs(lill[i].critical_value - lill_crit[i]) <= 0.003,
                fmt::format("lilliefors a={}%: crit {:.4f} (ref {:.4f})", a, lill[i].critical_value, lill_crit[i]));
        o.check(std::abs(sw[i].critical_value - sw_crit[i]) <= 0.005,
                fmt::format("shapiro-wilk a={}%: crit {:.4f} (ref {:.4f})", a, sw[i].critical_value, sw_crit[i]));
        o.check(std::abs(sw[i].beta - sw_beta[i]) <= 0.015,
                fmt::format("shapiro-wilk a={}%: beta {:.2f}% (ref {:.2f}%)", a, 100 * sw[i].beta, 100 * sw_beta[i]));
    }
    o.check(secs < 600.0, fmt::format("runtime {:.1f}s", secs));
    return o;
}

Outcome order_statistic_oracle() {
    Outcome o;
    double sym = 0.0, zero_sum = 0.0, fitted_gap = 0.0;
    std::size_t worst_n = 0;
    for (std::size_t n = 2; n <= 100; ++n) {
        double sum = 0.0;
        std::vector<double> e(n);
        for (std::size_t k = 1; k <= n; ++k) {
            e[k - 1] = expected_normal_order_stat(n, k);
            sum += e[k - 1];
        }
        for (std::size_t k = 0; k < n; ++k) sym = std::max(sym, std::abs(e[k] + e[n - 1 - k]));
        zero_sum = std::max(zero_sum, std::abs(sum));
        if (n >= 3) {
            const auto pp = plotting_positions(Family::Normal, n, PositionMethod::FittedAB);
            for (std::size_t k = 0; k < n; ++k) {
                const double gap = std::abs(pp.q[k] - e[k]);
                if (gap > fitted_gap) {
                    fitted_gap = gap;
                    worst_n = n;
                }
            }
        }
    }
    o.check(sym <= 2e-6, fmt::format("max symmetry defect {:.2e}", sym));
    o.check(zero_sum <= 2e-6, fmt::format("max |sum| {:.2e}", zero_sum));
    const double e22 = expected_normal_order_stat(2, 2);
    o.check(std::abs(e22 - 1.0 / std::sqrt(std::numbers::pi)) <= 1e-6, fmt::format("E(Z(2)), n=2: {:.9f}", e22));
    o.check(fitted_gap <= 0.01, fmt::format("fitted positions vs quadrature: max gap {:.5f} (n={})", fitted_gap, worst_n));
    return o;
}

Outcome unbiasedness() {
    Outcome o;
    constexpr double mu = 1.0, sigma = 2.0, alpha = 0.10;
    constexpr std::size_t reps = 100000;
    const double var_true = mu + sigma * normal_quantile(1.0 - alpha);
    for (std::size_t n : {5u, 10u, 20u}) {
        const auto pp = plotting_positions(Family::Normal, n, PositionMethod::ExactExpectation);
        std::vector<double> mus(reps), sigmas(reps), vars(reps), exp_vars(reps);
        for_each_block(reps, derive_seed(default_seed, 600 + n), default_thread_count(),
                       [&](std::size_t, std::size_t first, std::size_t last, SeededGenerator& rng) {
                           std::vector<double> x(n);
                           for (std::size_t i = first; i < last; ++i) {
                               for (auto& v : x) v = mu + sigma * draw(Family::Normal, rng);
                               const auto f = fit(Sample(x), pp);
                               mus[i] = f.mu_hat;
                               sigmas[i] = f.sigma_hat;
                               vars[i] = var_estimate(f, alpha).value;
                               exp_vars[i] = var_estimate(f, alpha, true).value;
                           }
                       });
        const auto within = [&](const std::vector<double>& v, double truth, const char* name) {
            const double m = mean_of(v), se = se_of(v);
            o.check(std::abs(m - truth) <= 3.0 * se,
                    fmt::format("n={} {}: mean {:.5f}, truth {:.5f}, {:.2f} SE", n, name, m, truth,
                                std::abs(m - truth) / se));
        };
        within(mus, mu, "mu_hat");
        within(sigmas, sigma, "sigma_hat");
        within(vars, var_true, "VaR");
        const double bias = mean_of(exp_vars) - std::exp(var_true);
        o.check(bias > 3.0 * se_of(exp_vars),
                fmt::format("n={} exp(VaR): bias {:.4f} = {:.1f} SE", n, bias, bias / se_of(exp_vars)));
    }
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome properties() {
    Outcome o;

    // Affine equivariance of the regression fit.
    {
        SeededGenerator rng(314);
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 3 + trial % 40;
            std::vector<double> x(n), y(n);
            for (auto& v : x) v = draw(Family::Logistic, rng);
            const double a = 20.0 * rng.uniform() - 10.0, b = std::exp(6.0 * rng.uniform() - 3.0);
            for (std::size_t i = 0; i < n; ++i) y[i] = a + b * x[i];
            const auto pp = plotting_positions(Family::Normal, n, PositionMethod::FittedAB);
            const auto f = fit(Sample(x), pp), g = fit(Sample(y), pp);
            const double mu_ref = a + b * f.mu_hat, sigma_ref = b * f.sigma_hat;
            worst = std::max({worst, std::abs(g.mu_hat - mu_ref) / std::max(std::abs(mu_ref), sigma_ref),
                              std::abs(g.sigma_hat - sigma_ref) / sigma_ref, std::abs(*g.rho - *f.rho)});
        }
        o.check(worst <= 1e-10, fmt::format("affine equivariance: max relative error {:.2e}", worst));
    }

    // Statistic invariance under positive affine maps.
    {
        SeededGenerator rng(2718);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t n = 10 + trial % 30;
            std::vector<double> x(n);
            for (auto& v : x) v = draw(Family::Gumbel, rng);
            std::sort(x.begin(), x.end());
            std::vector<double> y(x);
            const double a = 100.0 * rng.uniform() - 50.0, b = std::exp(8.0 * rng.uniform() - 4.0);
            for (auto& v : y) v = a + b * v;
            for (auto kind : {TestKind::CorrelationT, TestKind::Lilliefors, TestKind::ShapiroWilk}) {
                const StatisticEvaluator s(kind, n);
                worst = std::max(worst, std::abs(s(x) - s(y)) / std::max(1.0, std::abs(s(x))));
            }
        }
        o.check(worst <= 1e-10, fmt::format("statistic invariance: max relative change {:.2e}", worst));
    }

    // Null p-value uniformity.
    for (auto kind : {TestKind::CorrelationT, TestKind::Lilliefors, TestKind::ShapiroWilk}) {
        constexpr std::size_t checks = 10000, n = 18;
        const auto null = NullDistribution::simulate(kind, n, {100000, default_seed, {}});
        const auto fresh = simulate_statistic(kind, Family::Normal, n, checks, 4242);
        std::vector<double> p;
        for (double s : fresh) p.push_back(null.p_value(s));
        std::sort(p.begin(), p.end());
        double d = 0.0;
        for (std::size_t i = 0; i < checks; ++i)
            d = std::max({d, (i + 1.0) / checks - p[i], p[i] - static_cast<double>(i) / checks});
        o.check(d <= 0.02, fmt::format("{} null p-values: Kolmogorov distance {:.4f}", to_string(kind), d));
    }

    // End-to-end CLI determinism.
    {
        const auto base = fs::temp_directory_path() / "qqgof-acceptance";
        fs::remove_all(base);
        const fs::path input = fs::path(QQGOF_TEST_DATA_DIR) / "case_study.csv";
        auto run = [&](const fs::path& out, int threads) {
            const std::string cmd = fmt::format("{} test --input {} --p-method mc --reps 20000 --seed 99 "
                                                "--threads {} --out {} > /dev/null 2>&1",
                                                QQGOF_CLI_PATH, input.string(), threads, out.string());
            const int status = std::system(cmd.c_str());
            return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        };
        const int ra = run(base / "a", 1), rb = run(base / "b", 4);
        std::size_t files = 0, same = 0;
        if (ra == 0 && rb == 0) {
            for (const auto& e : fs::directory_iterator(base / "a")) {
                ++files;
                if (slurp(e.path()) == slurp(base / "b" / e.path().filename())) ++same;
            }
        }
        o.check(ra == 0 && rb == 0 && files > 0 && files == same,
                fmt::format("CLI determinism: exit {}/{}, {} of {} artifacts byte-identical", ra, rb, same, files));
    }
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "null calibration", null_calibration},
        {2, "interpolation of null moments", interpolation},
        {3, "p-value mapping of published statistics", p_value_mapping},
        {4, "power tables at n = 20", power_tables},
        {5, "expected normal order statistics", order_statistic_oracle},
        {6, "unbiasedness of Q-Q regression", unbiasedness},
        {7, "property suites", properties},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failures;
        std::cout << fmt::format("criterion {} [{}]: {}\n", c.id, c.name, o.pass ? "PASS" : "FAIL");
        for (const auto& note : o.notes) std::cout << "    " << note << "\n";
        std::cout.flush();
    }
    std::cout << fmt::format("{} of {} criteria passed\n", std::size(criteria) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}

// Writes the synthetic combined-ratio fixtures used by the test suite.
//
// Usage: make_fixtures <output-dir>
//
// case_study.csv holds one dataset per column:
//   liability_like      n = 14, log values with correlation statistic T = 3.9443
//   property_like       n = 18, log values with T = 2.8831
//   synthetic_lognormal n = 18, seeded lognormal draws around 0.95
// with_zero.csv contains a zero ratio and must be rejected under the log transform.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <fmt/format.h>

#include "qqgof/gof_statistics.hpp"
#include "qqgof/order_stats.hpp"
#include "qqgof/rng.hpp"

namespace {

using namespace qqgof;

/// Increasing log values x_k = (1 - c b) q_k + c q_k^3 whose plot correlation
/// against fitted positions gives T exactly `target`.
std::vector<double> with_statistic(std::size_t n, double target) {
    const auto q = plotting_positions(Family::Normal, n, PositionMethod::FittedAB).q;
    double qq = 0.0, q4 = 0.0;
    for (double v : q) {
        qq += v * v;
        q4 += v * v * v * v;
    }
    const double b = q4 / qq;
    auto build = [&](double c) {
        std::vector<double> x(n);
        for (std::size_t k = 0; k < n; ++k) x[k] = (1.0 - c * b) * q[k] + c * q[k] * q[k] * q[k];
        return x;
    };
    double lo = 0.0, hi = 1.0 / b;
    if (correlation_t(build(hi), q) > target) throw std::runtime_error("target T unreachable");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (correlation_t(build(mid), q) > target ? lo : hi) = mid;
    }
    return build(0.5 * (lo + hi));
}

std::vector<double> to_ratios(const std::vector<double>& x, double location, double scale) {
    std::vector<double> r;
    for (double v : x) r.push_back(std::exp(location + scale * v));
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output-dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);

    const auto liability = to_ratios(with_statistic(14, 3.9443), std::log(0.93), 0.045);
    const auto property = to_ratios(with_statistic(18, 2.8831), std::log(0.97), 0.08);
    SeededGenerator rng(2018);
    std::vector<double> lognormal;
    for (int i = 0; i < 18; ++i) lognormal.push_back(std::exp(std::log(0.95) + 0.06 * draw(Family::Normal, rng)));

    // Shuffle-free but not sorted: reverse alternate entries so readers must sort.
    auto interleave = [](std::vector<double> v) {
        std::vector<double> out;
        for (std::size_t i = 0, j = v.size(); i < j; ++i) {
            out.push_back(v[i]);
            if (i < --j) out.push_back(v[j]);
        }
        return out;
    };

    const std::vector<std::vector<double>> cols = {interleave(liability), interleave(property), lognormal};
    std::ofstream os(dir / "case_study.csv");
    os << "liability_like,property_like,synthetic_lognormal\n";
    for (std::size_t row = 0; row < 18; ++row) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) os << ',';
            if (row < cols[c].size()) os << fmt::format("{:.17g}", cols[c][row]);
        }
        os << '\n';
    }

    std::ofstream bad(dir / "with_zero.csv");
    bad << "ratio\n0.91\n0.97\n0\n1.02\n0.95\n0.99\n0.93\n0.96\n1.05\n0.94\n0.98\n";
    std::cout << "wrote " << (dir / "case_study.csv").string() << " and "
              << (dir / "with_zero.csv").string() << "\n";
    return 0;
}

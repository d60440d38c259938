#pragma once

// Command implementations behind the qqgof executable: CSV ingestion, the
// test battery per dataset, calibration and power runs, artifact output.
// Commands return process exit codes: 0 ok, 1 internal error, 2 data or
// usage error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qqgof/distributions.hpp"
#include "qqgof/errors.hpp"
#include "qqgof/gof_statistics.hpp"
#include "qqgof/gof_tests.hpp"
#include "qqgof/mc_calibration.hpp"
#include "qqgof/order_stats.hpp"
#include "qqgof/qq_regression.hpp"
#include "qqgof/report.hpp"

namespace qqgof::cli {

enum ExitCode : int { ok = 0, internal_error = 1, data_error = 2 };

struct Column {
    std::string name;
    std::vector<double> values;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == sep && !quoted) {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.emplace_back(trim(cur));
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

inline std::string file_stem_for(std::string_view dataset) {
    std::string out;
    for (char c : dataset) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '_';
        out += keep ? c : '_';
    }
    return out.empty() ? "dataset" : out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

}  // namespace detail

/// Reads one dataset per column from a CSV stream with a header row.
///
/// The separator is ';' if the header contains one, ',' otherwise. With
/// `decimal_comma`, ',' inside ';'-separated cells is read as the decimal
/// point. Empty cells are skipped, so columns may differ in length.
inline std::vector<Column> read_columns(std::istream& in, const std::string& source,
                                        bool decimal_comma = false) {
    std::string header;
    if (!std::getline(in, header)) throw DataError(source + ": empty input");
    if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
    const char sep = header.find(';') != std::string::npos ? ';' : ',';
    if (decimal_comma && sep != ';') {
        throw DataError(source + ": decimal commas require ';' as the field separator");
    }
    std::vector<Column> cols;
    for (auto& name : detail::split(header, sep)) cols.push_back({name, {}});

    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, sep);
        if (cells.size() > cols.size()) {
            throw DataError(fmt::format("{}:{}: {} fields but header has {}", source, line_no,
                                        cells.size(), cols.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::string cell = cells[c];
            if (cell.empty()) continue;
            if (decimal_comma) std::replace(cell.begin(), cell.end(), ',', '.');
            const auto v = detail::parse_number(cell);
            if (!v || !std::isfinite(*v)) {
                throw DataError(fmt::format("{}:{}: column '{}': '{}' is not a number", source,
                                            line_no, cols[c].name, cells[c]));
            }
            cols[c].values.push_back(*v);
        }
    }
    return cols;
}

inline std::vector<Column> read_columns(const std::filesystem::path& path, bool decimal_comma = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file " + path.string());
    return read_columns(in, path.string(), decimal_comma);
}

struct RunConfig {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::string> columns;  ///< empty: all columns
    Transform transform = Transform::Log;
    PositionMethod positions = PositionMethod::FittedAB;
    std::vector<double> alphas{default_alphas.begin(), default_alphas.end()};
    PMethod p_method = PMethod::NormalApprox;
    std::size_t reps = default_mc_reps;
    std::uint64_t seed = default_seed;
    std::size_t threads = default_thread_count();
    std::filesystem::path out_dir = "qqgof-out";
    std::set<std::string> formats{"text", "csv", "json", "svg"};
    bool decimal_comma = false;
    std::vector<std::pair<double, std::size_t>> published;  ///< (T_n, n) pairs
};

inline void validate(const RunConfig& cfg) {
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a < 1.0)) throw DomainError(fmt::format("alpha {} outside (0,1)", a));
    if (cfg.reps < min_mc_reps)
        throw DomainError(fmt::format("--reps must be at least {}", min_mc_reps));
    for (const auto& f : cfg.formats) {
        if (f != "text" && f != "csv" && f != "json" && f != "svg")
            throw DomainError("unknown output format: " + f);
    }
}

/// Runs `body` and maps exceptions to exit codes, reporting on `err`.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    } catch (const RangeError& e) {
        err << "error: " << e.what() << "\n";
        return data_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return internal_error;
    }
}

struct Dataset {
    std::string name;
    Sample sample;
};

/// Loads the selected columns; under the log transform every nonpositive
/// value in every dataset is listed before failing.
inline std::vector<Dataset> load_datasets(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw DomainError("no --input given");
    std::vector<Column> all;
    for (const auto& path : cfg.inputs) {
        for (auto& c : read_columns(path, cfg.decimal_comma)) all.push_back(std::move(c));
    }
    std::vector<Column> selected;
    if (cfg.columns.empty()) {
        selected = std::move(all);
    } else {
        for (const auto& name : cfg.columns) {
            auto it = std::find_if(all.begin(), all.end(), [&](auto& c) { return c.name == name; });
            if (it == all.end()) throw DataError("no column named '" + name + "'");
            selected.push_back(*it);
        }
    }
    if (cfg.transform == Transform::Log) {
        std::string offenders;
        for (const auto& c : selected)
            for (std::size_t i = 0; i < c.values.size(); ++i)
                if (c.values[i] <= 0.0)
                    offenders += fmt::format("\n  {}[{}] = {}", c.name, i + 1, c.values[i]);
        if (!offenders.empty()) {
            throw DataError("log transform needs positive values; offending entries:" + offenders);
        }
    }
    std::vector<Dataset> out;
    for (auto& c : selected) {
        if (c.values.size() < Sample::min_size)
            throw DataError(fmt::format("column '{}' has only {} values", c.name, c.values.size()));
        out.push_back({c.name, Sample(std::move(c.values), cfg.transform)});
    }
    return out;
}

namespace detail {

inline void write_tables(const RunConfig& cfg, const std::vector<DatasetResults>& rows,
                         const std::string& stem) {
    if (cfg.formats.count("text"))
        write_file(cfg.out_dir / (stem + ".txt"), render_table(rows, TableFormat::Text));
    if (cfg.formats.count("csv"))
        write_file(cfg.out_dir / (stem + ".csv"), render_table(rows, TableFormat::Csv));
    if (cfg.formats.count("json"))
        write_file(cfg.out_dir / (stem + ".json"), render_table(rows, TableFormat::Json));
}

}  // namespace detail

/// p-values of published (T_n, n) pairs under the normal approximation.
inline int cmd_published(const RunConfig& cfg, std::ostream& out) {
    std::vector<DatasetResults> rows;
    for (std::size_t i = 0; i < cfg.published.size(); ++i) {
        const auto [t, n] = cfg.published[i];
        const double p = correlation_p_value(t, default_null_params(n));
        rows.push_back({fmt::format("published_{}", i + 1), n,
                        {make_result(TestKind::CorrelationT, t, p, PMethod::NormalApprox, n, cfg.alphas)},
                        std::nullopt, std::nullopt});
    }
    out << render_table(rows, TableFormat::Text);
    if (!cfg.out_dir.empty() && (cfg.formats.count("csv") || cfg.formats.count("json") ||
                                 cfg.formats.count("text"))) {
        std::filesystem::create_directories(cfg.out_dir);
        detail::write_tables(cfg, rows, "published");
    }
    return ok;
}

/// Correlation, Lilliefors and Shapiro-Wilk tests for every dataset, with
/// Q-Q plots and result tables written to the output directory.
inline int cmd_test(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(cfg);
        if (!cfg.published.empty()) return cmd_published(cfg, out);
        const auto datasets = load_datasets(cfg);
        if (cfg.transform == Transform::Log) {
            out << "note: testing log-transformed values (lognormality of the raw data); "
                   "use --transform identity to test the values as given\n";
        }
        std::filesystem::create_directories(cfg.out_dir);

        const McSettings mc{cfg.reps, cfg.seed, {cfg.threads}};
        std::map<std::pair<TestKind, std::size_t>, NullDistribution> nulls;
        auto null_for = [&](TestKind t, std::size_t n) -> const NullDistribution& {
            auto key = std::pair{t, n};
            auto it = nulls.find(key);
            if (it == nulls.end()) it = nulls.emplace(key, NullDistribution::simulate(t, n, mc)).first;
            return it->second;
        };

        std::vector<DatasetResults> rows;
        std::string estimates;
        for (const auto& ds : datasets) {
            const std::size_t n = ds.sample.size();
            const auto pos = plotting_positions(Family::Normal, n, cfg.positions);
            const auto qq = fit(ds.sample, pos);
            if (qq.degenerate) throw DataError("dataset '" + ds.name + "' has zero variance");

            DatasetResults row{ds.name, n, {}, qq.mu_hat, qq.sigma_hat};
            const auto fitted = plotting_positions(Family::Normal, n, PositionMethod::FittedAB);
            const double t = t_statistic(fit(ds.sample, fitted)).value;
            GofResult corr;
            if (cfg.p_method == PMethod::MonteCarlo) {
                corr = make_result(TestKind::CorrelationT, t,
                                   null_for(TestKind::CorrelationT, n).p_value(t),
                                   PMethod::MonteCarlo, n, cfg.alphas);
            } else {
                if (n < interpolation_min_n) {
                    throw DataError(fmt::format(
                        "dataset '{}' has n = {} < 10: normal-approximation p-values are not "
                        "calibrated; rerun with --p-method mc",
                        ds.name, n));
                }
                corr = make_result(TestKind::CorrelationT, t,
                                   correlation_p_value(t, default_null_params(n)),
                                   PMethod::NormalApprox, n, cfg.alphas);
            }
            row.tests.push_back(corr);
            if (n >= 4) {
                const double d = lilliefors_statistic(ds.sample.sorted());
                row.tests.push_back(make_result(TestKind::Lilliefors, d,
                                                null_for(TestKind::Lilliefors, n).p_value(d),
                                                PMethod::MonteCarlo, n, cfg.alphas));
            }
            if (n <= 50) {
                const double w = shapiro_wilk_statistic(ds.sample);
                row.tests.push_back(make_result(TestKind::ShapiroWilk, w,
                                                null_for(TestKind::ShapiroWilk, n).p_value(w),
                                                PMethod::MonteCarlo, n, cfg.alphas));
            }

            estimates += fmt::format("{}: mu_hat = {:.6f}, sigma_hat = {:.6f}", ds.name,
                                     qq.mu_hat, qq.sigma_hat);
            if (cfg.transform == Transform::Log) {
                const auto var = var_estimate(qq, 0.005, true);
                estimates += fmt::format(", VaR(99.5%) = {:.6f} (exp of log-scale estimate, "
                                         "biased upward)",
                                         var.value);
            }
            estimates += "\n";

            if (cfg.formats.count("svg")) {
                QQPlotOptions opts;
                opts.title = fmt::format("Q-Q plot: {}", ds.name);
                opts.y_label = cfg.transform == Transform::Log ? "ordered log value" : "ordered value";
                opts.x_label = fmt::format("normal quantile ({} positions)", to_string(cfg.positions));
                opts.correlation = corr;
                detail::write_file(cfg.out_dir / (detail::file_stem_for(ds.name) + "_qq.svg"),
                                   render_qq_svg(qq, opts));
            }
            rows.push_back(std::move(row));
        }

        out << render_table(rows, TableFormat::Text) << estimates;
        detail::write_tables(cfg, rows, "results");
        return static_cast<int>(ok);
    });
}

/// Q-Q plots only.
inline int cmd_plot(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto datasets = load_datasets(cfg);
        std::filesystem::create_directories(cfg.out_dir);
        for (const auto& ds : datasets) {
            const auto pos = plotting_positions(Family::Normal, ds.sample.size(), cfg.positions);
            const auto qq = fit(ds.sample, pos);
            QQPlotOptions opts;
            opts.title = fmt::format("Q-Q plot: {}", ds.name);
            opts.x_label = fmt::format("normal quantile ({} positions)", to_string(cfg.positions));
            const auto path = cfg.out_dir / (detail::file_stem_for(ds.name) + "_qq.svg");
            detail::write_file(path, render_qq_svg(qq, opts));
            out << path.string() << "\n";
        }
        return static_cast<int>(ok);
    });
}

struct CalibrateConfig {
    std::size_t n_min = 10;
    std::size_t n_max = 20;
    std::size_t reps = default_mc_reps;
    std::uint64_t seed = default_seed;
    std::size_t threads = default_thread_count();
    std::filesystem::path out_dir = "qqgof-out";
};

inline nlohmann::json to_json(const CalibrationTable& t) {
    nlohmann::json q = nlohmann::json::object();
    for (const auto& [p, v] : t.quantiles) q[fmt::format("{:g}", p)] = v;
    return {{"n", t.n},
            {"reps", t.reps},
            {"seed", t.seed},
            {"mu_n", t.mu_n},
            {"sigma_n", t.sigma_n},
            {"quantiles", q},
            {"histogram",
             {{"lo", t.histogram.lo}, {"width", t.histogram.width}, {"counts", t.histogram.counts}}}};
}

/// Null calibration of T_n for every n in [n_min, n_max]; each n uses the
/// stream derive_seed(seed, n).
inline int cmd_calibrate(const CalibrateConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (cfg.reps < min_mc_reps)
            throw DomainError(fmt::format("--reps must be at least {}", min_mc_reps));
        if (cfg.n_min < 5 || cfg.n_max < cfg.n_min)
            throw DomainError("need 5 <= n-min <= n-max");
        std::filesystem::create_directories(cfg.out_dir);

        std::vector<CalibrationTable> tables;
        auto doc = nlohmann::json::object();
        std::string csv = "n,reps,seed,mu_n,sigma_n";
        for (double p : calibration_probabilities) csv += fmt::format(",q{:g}", p);
        csv += "\n";
        for (std::size_t n = cfg.n_min; n <= cfg.n_max; ++n) {
            auto t = calibrate_null(n, cfg.reps, derive_seed(cfg.seed, n), {cfg.threads});
            out << fmt::format("n = {:3}: mu_n = {:.4f}, sigma_n = {:.4f}\n", n, t.mu_n, t.sigma_n);
            csv += fmt::format("{},{},{},{:.17g},{:.17g}", t.n, t.reps, t.seed, t.mu_n, t.sigma_n);
            for (const auto& [p, v] : t.quantiles) csv += fmt::format(",{:.17g}", v);
            csv += "\n";
            detail::write_file(cfg.out_dir / fmt::format("hist_n{}.svg", n), render_histogram_svg(t));
            tables.push_back(std::move(t));
        }
        doc["master_seed"] = cfg.seed;
        doc["tables"] = nlohmann::json::array();
        for (const auto& t : tables) doc["tables"].push_back(to_json(t));
        if (tables.size() >= 4) {
            const auto fitc = fit_interpolation(tables);
            doc["interpolation"] = {{"mu", {fitc.mu.p, fitc.mu.q, fitc.mu.r}},
                                    {"sigma", {fitc.sigma.p, fitc.sigma.q, fitc.sigma.r}}};
            out << fmt::format("mu_n    ~ ({:.6g} n + {:.6g}) / (n + {:.6g})\n", fitc.mu.p,
                               fitc.mu.q, fitc.mu.r);
            out << fmt::format("sigma_n ~ ({:.6g} n + {:.6g}) / (n + {:.6g})\n", fitc.sigma.p,
                               fitc.sigma.q, fitc.sigma.r);
        }
        detail::write_file(cfg.out_dir / "calibration.json", doc.dump(2) + "\n");
        detail::write_file(cfg.out_dir / "calibration.csv", csv);
        return static_cast<int>(ok);
    });
}

struct PowerConfig {
    TestKind test = TestKind::CorrelationT;
    Family alternative = Family::Gumbel;
    std::size_t n = 20;
    std::vector<double> alphas{default_alphas.begin(), default_alphas.end()};
    std::size_t reps = default_mc_reps;
    std::uint64_t seed = default_seed;
    std::size_t threads = default_thread_count();
    std::filesystem::path out_dir = "qqgof-out";
};

inline int cmd_power(const PowerConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        for (double a : cfg.alphas)
            if (!(a > 0.0 && a < 1.0)) throw DomainError(fmt::format("alpha {} outside (0,1)", a));
        const auto rows = power_study(cfg.test, cfg.alternative, cfg.n, cfg.alphas, cfg.reps,
                                      cfg.seed, {cfg.threads});
        std::filesystem::create_directories(cfg.out_dir);
        std::string csv = "test,alternative,n,alpha,critical_value,beta,reps,seed\n";
        auto doc = nlohmann::json::array();
        for (const auto& r : rows) {
            csv += fmt::format("{},{},{},{:g},{:.17g},{:.17g},{},{}\n", to_string(r.test),
                               to_string(r.alternative), r.n, r.alpha, r.critical_value, r.beta,
                               r.reps, r.seed);
            doc.push_back({{"test", to_string(r.test)},
                           {"alternative", to_string(r.alternative)},
                           {"n", r.n},
                           {"alpha", r.alpha},
                           {"critical_value", r.critical_value},
                           {"beta", r.beta},
                           {"reps", r.reps},
                           {"seed", r.seed}});
            out << fmt::format("{} vs {} (n = {}): alpha = {:>5.1f}%  critical = {:.4f}  beta = {:.2f}%\n",
                               to_string(r.test), to_string(r.alternative), r.n, 100 * r.alpha,
                               r.critical_value, 100 * r.beta);
        }
        const auto stem = fmt::format("power_{}_{}_n{}", to_string(cfg.test),
                                      to_string(cfg.alternative), cfg.n);
        detail::write_file(cfg.out_dir / (stem + ".csv"), csv);
        detail::write_file(cfg.out_dir / (stem + ".json"), doc.dump(2) + "\n");
        return static_cast<int>(ok);
    });
}

}  // namespace qqgof::cli

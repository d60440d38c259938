// qqgof: Q-Q regression estimates and normality tests for loss or combined
// ratios, plus regeneration of the calibration and power tables.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qqgof/cli.hpp"

namespace {

const std::map<std::string, qqgof::Transform> transforms{{"log", qqgof::Transform::Log},
                                                         {"identity", qqgof::Transform::Identity}};
const std::map<std::string, qqgof::PMethod> p_methods{{"approx", qqgof::PMethod::NormalApprox},
                                                      {"mc", qqgof::PMethod::MonteCarlo}};

std::vector<std::pair<double, std::size_t>> parse_published(const std::vector<std::string>& specs) {
    std::vector<std::pair<double, std::size_t>> out;
    for (const auto& s : specs) {
        const auto at = s.find(':');
        if (at == std::string::npos) throw qqgof::DomainError("--published expects T:n, got " + s);
        try {
            out.emplace_back(std::stod(s.substr(0, at)), std::stoul(s.substr(at + 1)));
        } catch (const std::exception&) {
            throw qqgof::DomainError("--published expects T:n, got " + s);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace qqgof;
    CLI::App app{"Q-Q plot regression and goodness-of-fit tests for (log)normality"};
    app.require_subcommand(1);

    cli::RunConfig run;
    std::string positions = "fitted";
    std::vector<std::string> formats;
    std::vector<std::string> published;
    bool full_scale = false;
    std::string transform_name = "log", p_method_name = "approx";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--input", run.inputs, "CSV file(s), one dataset per column")->check(CLI::ExistingFile);
        cmd->add_option("--column", run.columns, "dataset column(s) to use (default: all)");
        cmd->add_option("--transform", transform_name, "log or identity")
            ->check(CLI::IsMember({"log", "identity"}, CLI::ignore_case));
        cmd->add_option("--positions", positions,
                        "plotting positions: fitted, compact, exact, weibull, blom, hazen, "
                        "hazen-table, beard, benard, tukey, gringorten");
        cmd->add_option("--out", run.out_dir, "output directory");
        cmd->add_flag("--decimal-comma", run.decimal_comma, "read ',' as decimal point in ';'-separated files");
    };

    auto* test = app.add_subcommand("test", "run the test battery on each dataset");
    add_common(test);
    test->add_option("--p-method", p_method_name, "approx (normal approximation) or mc")
        ->check(CLI::IsMember({"approx", "mc"}, CLI::ignore_case));
    test->add_option("--reps", run.reps, "Monte Carlo replications");
    test->add_option("--seed", run.seed, "Monte Carlo seed");
    test->add_option("--alphas", run.alphas, "significance levels")->delimiter(',');
    test->add_option("--format", formats, "outputs: text, csv, json, svg")->delimiter(',');
    test->add_option("--published", published, "published statistic T:n (no input needed)");
    test->add_option("--threads", run.threads, "worker threads");
    test->add_flag("--full-scale", full_scale, "use 10^6 Monte Carlo replications");

    auto* plot = app.add_subcommand("plot", "write Q-Q plots only");
    add_common(plot);

    cli::CalibrateConfig cal;
    std::size_t cal_n = 0;
    auto* calibrate = app.add_subcommand("calibrate", "simulate the null law of T_n");
    calibrate->add_option("--n-min", cal.n_min, "smallest sample size");
    calibrate->add_option("--n-max", cal.n_max, "largest sample size");
    calibrate->add_option("--n", cal_n, "single sample size");
    calibrate->add_option("--reps", cal.reps, "replications per n");
    calibrate->add_option("--seed", cal.seed, "master seed");
    calibrate->add_option("--threads", cal.threads, "worker threads");
    calibrate->add_option("--out", cal.out_dir, "output directory");
    calibrate->add_flag("--full-scale", full_scale, "use 10^6 replications");

    cli::PowerConfig pow;
    std::string test_name = "correlation", alt_name = "gumbel";
    auto* power = app.add_subcommand("power", "type-II error rates against an alternative");
    power->add_option("--test", test_name, "correlation, lilliefors or shapiro-wilk");
    power->add_option("--alternative", alt_name, "gumbel or logistic");
    power->add_option("--n", pow.n, "sample size");
    power->add_option("--alphas", pow.alphas, "significance levels")->delimiter(',');
    power->add_option("--reps", pow.reps, "replications");
    power->add_option("--seed", pow.seed, "seed");
    power->add_option("--threads", pow.threads, "worker threads");
    power->add_option("--out", pow.out_dir, "output directory");
    power->add_flag("--full-scale", full_scale, "use 10^6 replications");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::data_error;
    }

    return cli::guarded(std::cerr, [&]() -> int {
        if (*test || *plot) {
            run.positions = parse_position_method(positions);
            run.transform = transforms.at(CLI::detail::to_lower(transform_name));
            run.p_method = p_methods.at(CLI::detail::to_lower(p_method_name));
            if (!formats.empty()) run.formats = {formats.begin(), formats.end()};
            if (full_scale) run.reps = 1'000'000;
            run.published = parse_published(published);
        }
        if (*test) return cli::cmd_test(run, std::cout, std::cerr);
        if (*plot) return cli::cmd_plot(run, std::cout, std::cerr);
        if (*calibrate) {
            if (cal_n != 0) cal.n_min = cal.n_max = cal_n;
            if (full_scale) cal.reps = 1'000'000;
            return cli::cmd_calibrate(cal, std::cout, std::cerr);
        }
        pow.test = parse_test_kind(test_name);
        pow.alternative = parse_family(alt_name);
        if (full_scale) pow.reps = 1'000'000;
        return cli::cmd_power(pow, std::cout, std::cerr);
    });
}

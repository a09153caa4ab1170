#include "flexlens/pipeline.hpp"
#include "flexlens/plots.hpp"
#include "flexlens/report.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

using namespace flexlens;

namespace {

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("flexlens");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("FLEXLENS_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

struct Options {
    std::string manifest;
    std::string window = "auto";
    std::string threshold = "kneedle";
    std::string quadrant = "mean";
    std::string out;
    std::string spec;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
};

void run_synth(const Options& o) {
    auto j = read_json(o.spec);
    if (o.seed) j["seed"] = *o.seed;
    const auto fleet = fleet_spec_from_json(j);
    write_synthetic_fleet(fleet, o.out, o.jobs);
    spdlog::info("wrote {} facilities and {} grids to {}", fleet.facilities.size(), fleet.grids.size(), o.out);
}

void run_analyze(const Options& o) {
    RunConfig cfg;
    cfg.manifest = o.manifest;
    cfg.window = WindowSpec::parse(o.window);
    cfg.threshold = ThresholdMode::parse(o.threshold);
    cfg.quadrant = parse_quadrant_mode(o.quadrant);
    cfg.out = o.out;
    cfg.jobs = std::max(1u, o.jobs);
    cfg.seed = o.seed.value_or(0);
    const auto report = analyze_fleet(cfg);
    write_artifacts(report, cfg.out);
    emit_plots(report, cfg.out);
    write_report(cfg.out);
    spdlog::info("analyzed {} facilities into {}", report.facilities.size(), o.out);
}

void run_regress(const Options& o) {
    const fs::path out = o.out;
    const auto metrics = parse_metrics_csv(read_file(out / "metrics.csv"));
    RegressionReport rep;
    if (metrics.size() < 2)
        rep.notices.push_back("regression skipped: n too small (" + std::to_string(metrics.size()) + " facility)");
    else
        rep = run_regression(metrics);
    write_file(out / "regression.json", regression_json(rep).dump(2) + "\n");
    for (const auto& n : rep.notices) spdlog::info("{}", n);
}

void run_classify(const Options& o) {
    const fs::path out = o.out;
    const auto metrics = parse_metrics_csv(read_file(out / "metrics.csv"));
    const auto q = quadrant_classify(metrics, parse_quadrant_mode(o.quadrant));
    write_file(out / "quadrants.csv", quadrants_csv(q));
    write_file(out / "plots" / "fleet_scatter.csv", scatter_csv(q));
    write_file(out / "plots" / "fleet_scatter.svg", scatter_svg(q));
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"flexlens: curtailment detection and marginal emissions analytics for flexible loads"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "generate a synthetic fleet with ground truth");
    synth->add_option("--spec", o.spec, "fleet config (JSON)")->required();
    synth->add_option("--out", o.out, "output directory")->required();
    synth->add_option("--seed", o.seed, "override the config seed");
    synth->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

    auto* analyze = app.add_subcommand("analyze", "run the full pipeline over a manifest");
    analyze->add_option("--manifest", o.manifest, "fleet manifest (JSON)")->required();
    analyze->add_option("--window", o.window, "auto or YYYY-MM-DD..YYYY-MM-DD");
    analyze->add_option("--threshold-mode", o.threshold, "kneedle, kneedle-fleet or fixed:<v>");
    analyze->add_option("--quadrant-mode", o.quadrant, "mean or p75");
    analyze->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    analyze->add_option("--seed", o.seed, "recorded in summary.json");
    analyze->add_option("--out", o.out, "output directory")->required();

    auto* regress = app.add_subcommand("regress", "refit regressions from <out>/metrics.csv");
    regress->add_option("--out", o.out, "analyze output directory")->required();

    auto* classify = app.add_subcommand("classify", "recompute quadrants from <out>/metrics.csv");
    classify->add_option("--out", o.out, "analyze output directory")->required();
    classify->add_option("--quadrant-mode", o.quadrant, "mean or p75");

    auto* report = app.add_subcommand("report", "rebuild <out>/report.md from stage outputs");
    report->add_option("--out", o.out, "analyze output directory")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (synth->parsed()) run_synth(o);
        if (analyze->parsed()) run_analyze(o);
        if (regress->parsed()) run_regress(o);
        if (classify->parsed()) run_classify(o);
        if (report->parsed()) write_report(o.out);
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const InvariantError& e) {
        spdlog::error("internal invariant violated: {}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 2;
    }
    return 0;
}

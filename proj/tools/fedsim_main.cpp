#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/harness.hpp"

namespace {

// 0 lets the parallel layer fall back to FEDSIM_THREADS / hardware.
size_t g_threads = 0;

int cmd_run(const std::string& spec_path, const std::string& scenario,
            const std::string& out_dir) {
    fedsim::ExperimentSpec spec;
    if (!spec_path.empty()) {
        spec = fedsim::load_spec(spec_path);
    } else {
        spec = fedsim::default_spec(fedsim::scenario_from_name(scenario));
    }
    const fedsim::Summary summary = fedsim::run_and_write(spec, out_dir, g_threads);
    std::cout << fedsim::format_summary(summary);
    std::cout << "wrote " << out_dir << "/rows.csv and " << out_dir << "/summary.txt\n";
    return 0;
}

int cmd_sweep(const std::string& user, size_t max_centers, const std::string& out_dir) {
    fedsim::ExperimentSpec spec = fedsim::default_spec(fedsim::Scenario::sweep_centers);
    spec.user = user;
    spec.max_centers = max_centers;
    const fedsim::Summary summary = fedsim::run_and_write(spec, out_dir, g_threads);
    std::cout << fedsim::format_summary(summary);
    std::cout << "wrote " << out_dir << "/rows.csv and " << out_dir << "/summary.txt\n";
    return 0;
}

int cmd_report(const std::string& in_dir) {
    const auto path = std::filesystem::path(in_dir) / "rows.csv";
    std::ifstream f(path, std::ios::binary);
    if (!f) throw fedsim::DatasetFormatError("cannot open " + path.string());
    const auto rows = fedsim::read_rows_csv(f);
    std::cout << fedsim::format_summary(fedsim::summarize(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedsim: federated anti-spoofing training simulator"};
    app.require_subcommand(1);
    app.add_option("--threads", g_threads,
                   "worker thread cap (default: FEDSIM_THREADS or hardware)");

    std::string spec_path;
    std::string scenario = "table2";
    std::string out_dir;
    auto* run = app.add_subcommand("run", "run an experiment and write results");
    run->add_option("--spec", spec_path, "JSON experiment spec file")
        ->check(CLI::ExistingFile);
    run->add_option("--scenario", scenario,
                    "built-in scenario when no --spec is given "
                    "(table2|sweep-centers|2d-split|3d-holdout)");
    run->add_option("--out", out_dir, "output directory")->required();

    std::string user = "E";
    size_t max_centers = 4;
    std::string sweep_out = "sweep-out";
    auto* sweep = app.add_subcommand("sweep", "federated runs for K=2..max-centers");
    sweep->add_option("--user", user, "held-out user domain id");
    sweep->add_option("--max-centers", max_centers, "largest center count")
        ->check(CLI::Range(size_t{2}, size_t{64}));
    sweep->add_option("--out", sweep_out, "output directory");

    std::string in_dir;
    auto* report = app.add_subcommand("report", "summarize a written rows.csv");
    report->add_option("--in", in_dir, "directory holding rows.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "fedsim: error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (run->parsed()) return cmd_run(spec_path, scenario, out_dir);
        if (sweep->parsed()) return cmd_sweep(user, max_centers, sweep_out);
        if (report->parsed()) return cmd_report(in_dir);
    } catch (const std::exception& e) {
        std::cerr << "fedsim: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

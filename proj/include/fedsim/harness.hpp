#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/data.hpp"

namespace fedsim {

enum class Scenario : uint8_t { table2, sweep_centers, split_2d, holdout_3d, custom };

const char* scenario_name(Scenario s);
Scenario scenario_from_name(std::string_view name);

// One experiment: which comparison to run, on which synthetic domains, with
// which training config, replicated over seeds. Each seed redraws the data
// and the training randomness.
struct ExperimentSpec {
    Scenario scenario = Scenario::table2;
    std::vector<DomainSpec> domains;
    FederationConfig config;
    std::vector<uint64_t> seeds;
    // User domain for the scenarios with a fixed user (sweep, 2d, 3d).
    std::string user;
    // Largest center count for the sweep scenario.
    size_t max_centers = 4;

    void validate() const;
};

struct ResultRow {
    std::string method;   // single | fused | federated | all
    std::string centers;  // ids joined with '+'
    std::string user;
    uint64_t seed = 0;
    double hter = 0.0;
    double eer = 0.0;
    double auc = 0.0;
};

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, size_t max_threads = 0);

struct SummaryRow {
    std::string method;
    std::string centers;  // empty for per-method average rows
    size_t n = 0;
    double mean_hter = 0.0;
    double mean_eer = 0.0;
    double mean_auc = 0.0;
};

struct Summary {
    std::vector<SummaryRow> rows;        // per (method, centers), input order
    std::vector<SummaryRow> method_avg;  // per method over all its rows
    std::vector<std::string> orderings;  // pairwise mean-AUC comparisons
};

Summary summarize(std::span<const ResultRow> rows);
std::string format_summary(const Summary& s);

// rows.csv: header method,centers,user,seed,hter,eer,auc; shortest
// round-trip float formatting, so identical rows give identical bytes.
void write_rows_csv(std::ostream& os, std::span<const ResultRow> rows);
std::vector<ResultRow> read_rows_csv(std::istream& is);

// JSON experiment spec (see README for the schema). Omitted domains fall back
// to the scenario's built-in benchmark.
ExperimentSpec load_spec(const std::filesystem::path& path);
ExperimentSpec spec_from_json_text(const std::string& text);

// Built-in synthetic benchmarks.
std::vector<DomainSpec> default_table2_domains();
std::vector<DomainSpec> default_sweep_domains();
std::vector<DomainSpec> default_2d_split_domains();
std::vector<DomainSpec> default_3d_holdout_domains();
ExperimentSpec default_spec(Scenario scenario);

// Runs the experiment and writes rows.csv + summary.txt under out_dir.
Summary run_and_write(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                      size_t max_threads = 0);

}  // namespace fedsim

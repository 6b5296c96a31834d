#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "fedchain/dataset.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/simnet.hpp"

namespace fedchain::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a command needs: the experiment plan plus dataset source,
/// output location, and price points for gas reporting. When the IDX
/// paths are empty the synthetic spec is used instead.
struct RunConfig {
    sim::ExperimentPlan plan;

    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::size_t class_count = 10;
    data::SyntheticSpec synthetic;

    std::string output_dir = "out";
    ledger::GasPrices gas_prices;
    bool include_wall_time = false;
    std::string scenario_file;  // optional script for auction-demo

    bool uses_idx() const { return !train_images.empty(); }
};

/// Flat `key = value` lines, `#` comments. Unknown keys and malformed
/// values are errors (the latter cite the line number).
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// The configured output directory, unless FEDCHAIN_OUT is set.
std::string resolve_output_dir(const RunConfig& cfg);

/// Runs the configured experiment and writes trace.csv, summary.txt and
/// ledger.txt to the output directory. Nothing is written on failure.
int cmd_run(const RunConfig& cfg, std::ostream& diag);

/// Per-op CKKS timings plus the encrypted/plaintext aggregation time
/// ratio for a 10-client round at the given parameter preset.
int cmd_bench_ckks(const std::string& preset, std::ostream& out);

/// Writes gas_report.csv (all metered ops at min/avg prices) to the
/// output directory and echoes it to `out`.
int cmd_gas_report(const RunConfig& cfg, std::ostream& out);

/// Contracts-only lifecycle replay. Uses cfg.scenario_file when set,
/// otherwise synthesizes a scenario from the plan.
int cmd_auction_demo(const RunConfig& cfg, std::ostream& out);

/// The script fed to replay_scenario when no scenario_file is given.
std::string demo_scenario_script(const RunConfig& cfg);

}  // namespace fedchain::cli

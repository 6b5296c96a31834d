#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedchain/contracts.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/flcore.hpp"
#include "fedchain/ledger.hpp"

namespace fedchain::sim {

using contracts::TaskRequirements;
using ledger::Address;
using ledger::Digest;
using ledger::Gwei;

struct ClientProfile {
    Address address;
    double compute_rate = 1;   // KB/sec processed
    double bandwidth = 1;      // KB/sec
    double data_size_kb = 1;   // payload handled per round
    std::size_t data_samples = 1;
    std::string data_type = "image";
    double dropout_prob = 0;
    Gwei bid_price = 0;
    double bid_margin = 1.0;   // fraction of true capability offered
    bool reliable = true;
};

enum class SelectionMode { Optimized, Random };
const char* to_string(SelectionMode m);

struct ExperimentPlan {
    std::size_t n_clients = 30;
    std::size_t rounds = 10;
    SelectionMode selection_mode = SelectionMode::Optimized;
    std::size_t selection_count = 5;  // the k of k·N selection
    bool encryption = false;
    std::uint64_t seed = 0;
    fl::TrainConfig train_config;
    TaskRequirements requirements;
    std::vector<std::size_t> hidden_dims;
    double eta_global = 1.0;
    double unreliable_fraction = 0.3;
    std::string ckks_preset = "test";
    double gas_price = 23.49;
    double fixed_overhead_s = 1.0;
    bool early_stop = false;

    void validate() const;
};

struct RoundTrace {
    std::size_t round_index = 0;
    std::vector<Address> selected;
    std::vector<Address> dropouts;  // newly dropped this round
    std::map<Address, double> completion_times;
    double wall_time_s = 0;     // measured
    double virtual_time_s = 0;  // clock value after the round
    double accuracy = 0;
    Digest model_digest{};
    Gwei gas_spent = 0;
};

struct ExperimentSummary {
    double final_accuracy = 0;
    double total_wall_time_s = 0;
    double total_virtual_time_s = 0;
    Gwei total_gas_gwei = 0;
    std::size_t rounds_run = 0;
    std::optional<contracts::SettlementRecord> settlement;
};

struct ExperimentResult {
    std::vector<RoundTrace> traces;
    ExperimentSummary summary;
};

struct AllDroppedOut : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// t = data/compute + model/bandwidth + fixed overhead, in virtual seconds.
double completion_time(const ClientProfile& p, std::size_t model_bytes,
                       double fixed_overhead_s = 1.0);

/// Uniform sample of `count` clients without replacement.
std::vector<std::size_t> random_selection(std::size_t population,
                                          std::size_t count,
                                          std::uint64_t seed);

/// Heterogeneous population: a reliable stratum meeting the default
/// requirements and an unreliable one (slow, dropout-prone, short on
/// data) that only Random mode can pick.
std::vector<ClientProfile> make_profiles(const ExperimentPlan& plan,
                                         ledger::Ledger& led);

/// Requirements calibrated to exclude the unreliable stratum.
TaskRequirements default_requirements();

class Simulation {
public:
    Simulation(const ExperimentPlan& plan, fl::DatasetShard train,
               fl::DatasetShard test);

    /// Registration + auction (Optimized) or uniform pick (Random).
    std::vector<std::size_t> run_auction_phase();
    RoundTrace run_round();
    ExperimentResult run_experiment();

    const std::vector<ClientProfile>& profiles() const { return profiles_; }
    const ledger::Ledger& chain() const { return ledger_; }
    const contracts::ContractSystem& contracts_sys() const { return contracts_; }
    const fl::ModelWeights& model() const { return model_; }
    double clock() const { return clock_; }

private:
    fl::ClientUpdate train_client(std::size_t idx, std::size_t round);

    ExperimentPlan plan_;
    ckks::CkksParams ckks_params_;
    ckks::KeyPair keys_;  // held by the key authority; server side uses pk only
    ledger::Ledger ledger_;
    contracts::ContractSystem contracts_;
    Address publisher_;
    std::vector<ClientProfile> profiles_;
    std::vector<fl::DatasetShard> shards_;
    fl::DatasetShard test_;
    fl::ModelWeights model_;
    std::vector<std::size_t> selected_;
    std::vector<bool> dropped_;
    double clock_ = 0;
    std::size_t round_ = 0;
    Gwei fee_sink_seen_ = 0;
};

/// Comma-separated trace with the pinned header. Wall times are included
/// only when `include_wall_time` is set, keeping default output
/// byte-deterministic.
std::string trace_csv(const std::vector<RoundTrace>& traces,
                      SelectionMode mode, bool encrypted,
                      bool include_wall_time);
std::string summary_text(const ExperimentSummary& s, SelectionMode mode,
                         bool encrypted, bool include_wall_time);

}  // namespace fedchain::sim

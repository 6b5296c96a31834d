#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedchain/ledger.hpp"

namespace fedchain::contracts {

using ledger::Address;
using ledger::Digest;
using ledger::Gwei;
using ledger::Revert;

struct TaskRequirements {
    double min_compute = 1;        // abstract compute units / sec
    double min_bandwidth = 1;      // KB / sec
    std::string data_type = "image";
    double min_data_size = 1;      // sample count
    std::uint64_t iterations = 1;
    Gwei budget = 1;
    Gwei security_deposit = 1;     // the "rate" each bidder must have locked
    double closing_time = 1;       // virtual seconds
    std::uint64_t top_x = 1;

    void validate() const;
};

enum class Phase { Created, Open, Closed, Training, Settled };
enum class ClientStatus { Idle, Bidding, Winner, Training, DroppedOut, Paid };

const char* to_string(Phase p);

struct ClientRecord {
    Address address;
    bool registered = false;
    Gwei deposit_held = 0;
    ClientStatus status = ClientStatus::Idle;
};

struct Bid {
    Address bidder;
    double offered_compute = 0;
    double offered_bandwidth = 0;
    double offered_data_size = 0;
    std::string offered_data_type;
    Gwei price = 0;
    double timestamp = 0;
    double score = 0;  // filled in at acceptance
};

/// Composite bid score: weighted requirement-normalized resources minus a
/// budget-normalized price term.
struct ScoreWeights {
    double compute = 0.4;
    double bandwidth = 0.2;
    double data_size = 0.3;
    double price = 0.1;
};

struct AuctionState {
    Phase phase = Phase::Created;
    TaskRequirements requirements;
    std::vector<Bid> bid_book;
    std::vector<Address> winners;
    Address publisher;
    std::optional<Digest> model_digest;
    bool training_complete = false;
    std::map<Address, Gwei> winner_prices;
};

struct SettlementRecord {
    std::map<Address, Gwei> service_fees;  // per non-dropout winner
    Gwei fees_total = 0;
    Gwei deposits_refunded = 0;
    Gwei deposits_forfeited = 0;
    Gwei publisher_refund = 0;
    Digest model_digest{};
};

/// SC1 (registration), SC2 (forward bidding), SC3 (settlement) over one
/// auction. Every mutating call is gas-metered through the ledger and all
/// failures revert with no state change.
class ContractSystem {
public:
    ContractSystem(ledger::Ledger& l, double gas_price,
                   ScoreWeights weights = {});

    void register_publisher(const Address& addr);
    void register_client(const Address& addr, Gwei deposit);
    void open_auction(const Address& publisher, const TaskRequirements& req);
    void place_bid(const Address& client, Bid bid, double now);
    std::vector<Address> select_top_x(double now, bool publisher_triggered = false);
    void begin_training();
    void mark_dropout(const Address& client);
    void add_model_hash(const Digest& digest);
    void set_training_complete() { auction_.training_complete = true; }
    SettlementRecord settle(double now);
    Digest get_reward(const Address& client);

    double bid_score(const Bid& bid) const;

    const AuctionState& auction() const { return auction_; }
    const ClientRecord& client(const Address& addr) const;
    bool is_registered_client(const Address& addr) const;
    const std::vector<std::string>& events() const { return events_; }
    const std::optional<SettlementRecord>& settlement() const {
        return settlement_;
    }
    Gwei gas_fee(const std::string& op) const;

private:
    void charge(const Address& caller, const std::string& op,
                const std::vector<std::uint8_t>& payload = {});
    void require(bool cond, const std::string& msg) const;

    ledger::Ledger& ledger_;
    double gas_price_;
    ScoreWeights weights_;
    AuctionState auction_;
    std::map<Address, ClientRecord> clients_;
    std::map<Address, bool> publishers_;
    Address pool_;  // contract-held payout pool
    std::optional<SettlementRecord> settlement_;
    std::vector<std::string> events_;
};

/// Replays a scenario script (one call per line:
/// `<virtual_time> <caller> <op> <args...>`) against a fresh contract
/// system. Identical scripts reproduce identical final state.
struct ScenarioResult {
    std::string ledger_snapshot;
    std::optional<SettlementRecord> settlement;
    Phase final_phase = Phase::Created;
    std::vector<std::string> log;
};
ScenarioResult replay_scenario(std::istream& script, double gas_price = 0.0);

}  // namespace fedchain::contracts

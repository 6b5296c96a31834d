#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedchain::ledger {

/// Thrown on any failed state transition; the ledger is unchanged.
struct Revert : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::vector<std::uint8_t>& bytes);
std::string hex(const Digest& d);
Digest digest_from_hex(const std::string& s);

struct Address {
    std::array<std::uint8_t, 20> id{};
    auto operator<=>(const Address&) const = default;
    std::string hex() const;
};

using Gwei = std::uint64_t;

struct Account {
    Address address;
    Gwei balance = 0;
    Gwei escrow = 0;
};

/// Gas units per contract operation name.
using GasTable = std::map<std::string, std::uint64_t>;

/// Calibrated so add_model_hash costs 8,962,515.54 gwei at the 23.49
/// gwei/gas average price, with the highest gas on add_model_hash and
/// get_rewards and the lowest on the registration-style operations.
GasTable default_gas_table();

struct GasPrices {
    double min_price = 11.27;
    double avg_price = 23.49;
};

struct Transaction {
    Address caller;
    std::string op_name;
    Digest payload_digest{};
    std::uint64_t gas_used = 0;
    std::uint64_t block_height = 0;
};

struct Block {
    std::uint64_t height = 0;
    Digest parent_digest{};
    std::vector<Transaction> transactions;
    Digest digest{};
};

struct GasCostRow {
    std::string op;
    std::uint64_t gas_used;
    double cost_min_gwei;
    double cost_avg_gwei;
};

class Ledger {
public:
    explicit Ledger(GasTable gas_table = default_gas_table());

    Address create_account(Gwei initial_balance);
    void transfer(const Address& from, const Address& to, Gwei amount);
    void escrow_lock(const Address& addr, Gwei amount);
    /// Moves escrowed funds to `to`'s balance (`to` may equal `addr`).
    void escrow_release(const Address& addr, Gwei amount, const Address& to);

    Transaction submit(const Address& caller, const std::string& op_name,
                       const std::vector<std::uint8_t>& payload,
                       double gas_price);
    Block seal_block();
    bool chain_verify() const;

    Digest content_put(const std::vector<std::uint8_t>& bytes);
    const std::vector<std::uint8_t>& content_get(const Digest& d) const;
    bool content_has(const Digest& d) const;

    const Account& account(const Address& addr) const;
    const GasTable& gas_table() const { return gas_table_; }
    Address fee_sink() const { return fee_sink_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Transaction>& open_transactions() const { return open_; }
    const std::map<Address, Account>& accounts() const { return accounts_; }

    /// Σ (balance + escrow) over all accounts including the fee sink.
    Gwei total_supply() const;

    /// Line-oriented dump: accounts, then one section per sealed block.
    std::string snapshot() const;

    // test hook: mutate a sealed transaction in place
    void tamper_transaction(std::size_t block_idx, std::size_t tx_idx,
                            std::uint64_t new_gas);

private:
    Account& account_mut(const Address& addr);

    GasTable gas_table_;
    std::map<Address, Account> accounts_;
    std::map<Digest, std::vector<std::uint8_t>> content_;
    std::vector<Block> blocks_;
    std::vector<Transaction> open_;
    Address fee_sink_;
    std::uint64_t next_account_ = 0;
};

std::vector<GasCostRow> gas_cost_report(const GasTable& table,
                                        const GasPrices& prices);
std::string gas_report_csv(const std::vector<GasCostRow>& rows);

}  // namespace fedchain::ledger

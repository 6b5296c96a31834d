#include "fedchain/ledger.hpp"

#include <openssl/sha.h>

#include <cmath>
#include <sstream>

namespace fedchain::ledger {

Digest sha256(const std::vector<std::uint8_t>& bytes) {
    Digest d;
    SHA256(bytes.data(), bytes.size(), d.data());
    return d;
}

namespace {

const char* kHexDigits = "0123456789abcdef";

std::string to_hex(const std::uint8_t* data, std::size_t len) {
    std::string s;
    s.reserve(2 * len);
    for (std::size_t i = 0; i < len; ++i) {
        s.push_back(kHexDigits[data[i] >> 4]);
        s.push_back(kHexDigits[data[i] & 0xf]);
    }
    return s;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void serialize_tx(std::vector<std::uint8_t>& out, const Transaction& tx) {
    out.insert(out.end(), tx.caller.id.begin(), tx.caller.id.end());
    put_u64(out, tx.op_name.size());
    out.insert(out.end(), tx.op_name.begin(), tx.op_name.end());
    out.insert(out.end(), tx.payload_digest.begin(), tx.payload_digest.end());
    put_u64(out, tx.gas_used);
    put_u64(out, tx.block_height);
}

Digest block_digest(std::uint64_t height, const Digest& parent,
                    const std::vector<Transaction>& txs) {
    std::vector<std::uint8_t> buf;
    put_u64(buf, height);
    buf.insert(buf.end(), parent.begin(), parent.end());
    put_u64(buf, txs.size());
    for (const auto& tx : txs) serialize_tx(buf, tx);
    return sha256(buf);
}

}  // namespace

std::string hex(const Digest& d) { return to_hex(d.data(), d.size()); }

Digest digest_from_hex(const std::string& s) {
    if (s.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
    Digest d;
    for (std::size_t i = 0; i < 32; ++i)
        d[i] = static_cast<std::uint8_t>(std::stoul(s.substr(2 * i, 2), nullptr, 16));
    return d;
}

std::string Address::hex() const { return to_hex(id.data(), id.size()); }

GasTable default_gas_table() {
    return {
        {"task_publisher_registration", 48000},
        {"client_registration", 52000},
        {"start_forward_bidding", 56000},
        {"select_top_x", 60000},
        {"place_bid", 120000},
        {"mark_dropout", 95000},
        {"settle", 150000},
        {"close_auction", 170000},
        {"start_auction", 180000},
        {"get_rewards", 360000},
        {"add_model_hash", 381546},
    };
}

Ledger::Ledger(GasTable gas_table) : gas_table_(std::move(gas_table)) {
    fee_sink_ = create_account(0);
}

Address Ledger::create_account(Gwei initial_balance) {
    std::vector<std::uint8_t> seed;
    put_u64(seed, next_account_++);
    const Digest d = sha256(seed);
    Address addr;
    std::copy_n(d.begin(), addr.id.size(), addr.id.begin());
    accounts_[addr] = Account{addr, initial_balance, 0};
    return addr;
}

Account& Ledger::account_mut(const Address& addr) {
    auto it = accounts_.find(addr);
    if (it == accounts_.end()) throw NotFound("unknown account " + addr.hex());
    return it->second;
}

const Account& Ledger::account(const Address& addr) const {
    auto it = accounts_.find(addr);
    if (it == accounts_.end()) throw NotFound("unknown account " + addr.hex());
    return it->second;
}

void Ledger::transfer(const Address& from, const Address& to, Gwei amount) {
    Account& src = account_mut(from);
    Account& dst = account_mut(to);
    if (src.balance < amount) throw Revert("transfer: insufficient balance");
    src.balance -= amount;
    dst.balance += amount;
}

void Ledger::escrow_lock(const Address& addr, Gwei amount) {
    Account& acc = account_mut(addr);
    if (acc.balance < amount) throw Revert("escrow_lock: insufficient balance");
    acc.balance -= amount;
    acc.escrow += amount;
}

void Ledger::escrow_release(const Address& addr, Gwei amount, const Address& to) {
    Account& acc = account_mut(addr);
    Account& dst = account_mut(to);
    if (acc.escrow < amount) throw Revert("escrow_release: insufficient escrow");
    acc.escrow -= amount;
    dst.balance += amount;
}

Transaction Ledger::submit(const Address& caller, const std::string& op_name,
                           const std::vector<std::uint8_t>& payload,
                           double gas_price) {
    auto it = gas_table_.find(op_name);
    if (it == gas_table_.end()) throw NotFound("unknown op " + op_name);
    if (gas_price < 0) throw Revert("submit: negative gas price");
    const std::uint64_t gas_used = it->second;
    const Gwei fee = static_cast<Gwei>(
        std::ceil(static_cast<double>(gas_used) * gas_price));
    Account& acc = account_mut(caller);
    if (acc.balance < fee) throw Revert("submit: insufficient gas funds");
    acc.balance -= fee;
    account_mut(fee_sink_).balance += fee;

    Transaction tx{caller, op_name, sha256(payload), gas_used, blocks_.size()};
    open_.push_back(tx);
    return tx;
}

Block Ledger::seal_block() {
    Block b;
    b.height = blocks_.size();
    b.parent_digest = blocks_.empty() ? Digest{} : blocks_.back().digest;
    b.transactions = std::move(open_);
    open_.clear();
    b.digest = block_digest(b.height, b.parent_digest, b.transactions);
    blocks_.push_back(b);
    return b;
}

bool Ledger::chain_verify() const {
    Digest parent{};
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        if (b.height != i) return false;
        if (b.parent_digest != parent) return false;
        if (block_digest(b.height, b.parent_digest, b.transactions) != b.digest)
            return false;
        parent = b.digest;
    }
    return true;
}

Digest Ledger::content_put(const std::vector<std::uint8_t>& bytes) {
    const Digest d = sha256(bytes);
    content_.emplace(d, bytes);
    return d;
}

const std::vector<std::uint8_t>& Ledger::content_get(const Digest& d) const {
    auto it = content_.find(d);
    if (it == content_.end()) throw NotFound("unknown content digest " + hex(d));
    return it->second;
}

bool Ledger::content_has(const Digest& d) const { return content_.contains(d); }

Gwei Ledger::total_supply() const {
    Gwei total = 0;
    for (const auto& [addr, acc] : accounts_) total += acc.balance + acc.escrow;
    return total;
}

std::string Ledger::snapshot() const {
    std::ostringstream out;
    out << "accounts\n";
    for (const auto& [addr, acc] : accounts_)
        out << addr.hex() << ' ' << acc.balance << ' ' << acc.escrow << '\n';
    for (const auto& b : blocks_) {
        out << "block " << b.height << ' ' << hex(b.digest) << ' '
            << hex(b.parent_digest) << '\n';
        for (const auto& tx : b.transactions)
            out << "  " << tx.caller.hex() << ' ' << tx.op_name << ' '
                << hex(tx.payload_digest) << ' ' << tx.gas_used << '\n';
    }
    return out.str();
}

void Ledger::tamper_transaction(std::size_t block_idx, std::size_t tx_idx,
                                std::uint64_t new_gas) {
    blocks_.at(block_idx).transactions.at(tx_idx).gas_used = new_gas;
}

std::vector<GasCostRow> gas_cost_report(const GasTable& table,
                                        const GasPrices& prices) {
    std::vector<GasCostRow> rows;
    rows.reserve(table.size());
    for (const auto& [op, gas] : table) {
        rows.push_back({op, gas, static_cast<double>(gas) * prices.min_price,
                        static_cast<double>(gas) * prices.avg_price});
    }
    return rows;
}

std::string gas_report_csv(const std::vector<GasCostRow>& rows) {
    std::ostringstream out;
    out << "op,gas_used,cost_min_gwei,cost_avg_gwei\n";
    out.setf(std::ios::fixed);
    out.precision(2);
    for (const auto& r : rows)
        out << r.op << ',' << r.gas_used << ',' << r.cost_min_gwei << ','
            << r.cost_avg_gwei << '\n';
    return out.str();
}

}  // namespace fedchain::ledger

#include "fedchain/contracts.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fedchain::contracts {

void TaskRequirements::validate() const {
    if (min_compute <= 0 || min_bandwidth <= 0 || min_data_size <= 0 ||
        iterations == 0 || budget == 0 || security_deposit == 0 ||
        closing_time <= 0 || top_x == 0)
        throw std::invalid_argument("task requirements must all be positive");
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Created: return "Created";
        case Phase::Open: return "Open";
        case Phase::Closed: return "Closed";
        case Phase::Training: return "Training";
        case Phase::Settled: return "Settled";
    }
    return "?";
}

ContractSystem::ContractSystem(ledger::Ledger& l, double gas_price,
                               ScoreWeights weights)
    : ledger_(l), gas_price_(gas_price), weights_(weights) {
    pool_ = ledger_.create_account(0);
}

Gwei ContractSystem::gas_fee(const std::string& op) const {
    const auto& table = ledger_.gas_table();
    return static_cast<Gwei>(
        std::ceil(static_cast<double>(table.at(op)) * gas_price_));
}

void ContractSystem::charge(const Address& caller, const std::string& op,
                            const std::vector<std::uint8_t>& payload) {
    ledger_.submit(caller, op, payload, gas_price_);
}

void ContractSystem::require(bool cond, const std::string& msg) const {
    if (!cond) throw Revert(msg);
}

const ClientRecord& ContractSystem::client(const Address& addr) const {
    auto it = clients_.find(addr);
    if (it == clients_.end()) throw ledger::NotFound("unknown client");
    return it->second;
}

bool ContractSystem::is_registered_client(const Address& addr) const {
    auto it = clients_.find(addr);
    return it != clients_.end() && it->second.registered;
}

void ContractSystem::register_publisher(const Address& addr) {
    require(!publishers_.contains(addr), "publisher already registered");
    require(ledger_.account(addr).balance >=
                gas_fee("task_publisher_registration"),
            "insufficient funds for registration gas");
    charge(addr, "task_publisher_registration");
    publishers_[addr] = true;
}

void ContractSystem::register_client(const Address& addr, Gwei deposit) {
    require(!is_registered_client(addr), "client already registered");
    require(deposit > 0, "deposit must be positive");
    require(ledger_.account(addr).balance >=
                deposit + gas_fee("client_registration"),
            "insufficient funds for deposit plus gas");
    charge(addr, "client_registration");
    ledger_.escrow_lock(addr, deposit);
    clients_[addr] = ClientRecord{addr, true, deposit, ClientStatus::Idle};
}

void ContractSystem::open_auction(const Address& publisher,
                                  const TaskRequirements& req) {
    req.validate();
    require(publishers_.contains(publisher), "publisher not registered");
    require(auction_.phase == Phase::Created, "auction already opened");
    const Gwei fees = gas_fee("start_auction") + gas_fee("start_forward_bidding");
    require(ledger_.account(publisher).balance >= req.budget + fees,
            "insufficient funds for budget plus gas");
    charge(publisher, "start_auction");
    charge(publisher, "start_forward_bidding");
    ledger_.escrow_lock(publisher, req.budget);
    auction_.publisher = publisher;
    auction_.requirements = req;
    auction_.phase = Phase::Open;
    events_.push_back("auction_open");
}

double ContractSystem::bid_score(const Bid& bid) const {
    const auto& req = auction_.requirements;
    return weights_.compute * (bid.offered_compute / req.min_compute) +
           weights_.bandwidth * (bid.offered_bandwidth / req.min_bandwidth) +
           weights_.data_size * (bid.offered_data_size / req.min_data_size) -
           weights_.price * (static_cast<double>(bid.price) /
                             static_cast<double>(req.budget));
}

void ContractSystem::place_bid(const Address& clientAddr, Bid bid, double now) {
    const auto& req = auction_.requirements;
    require(is_registered_client(clientAddr), "bidder not registered");
    require(auction_.phase == Phase::Open, "bidding is not open");
    require(now < req.closing_time, "bidding window has closed");
    const ClientRecord& rec = client(clientAddr);
    require(rec.deposit_held == req.security_deposit,
            "deposit does not equal the required rate");
    require(bid.offered_compute >= req.min_compute, "insufficient compute offer");
    require(bid.offered_bandwidth >= req.min_bandwidth,
            "insufficient bandwidth offer");
    require(bid.offered_data_size >= req.min_data_size,
            "insufficient data size offer");
    require(bid.offered_data_type == req.data_type, "wrong data type offer");
    require(bid.price <= req.budget, "bid price exceeds budget");
    require(ledger_.account(clientAddr).balance >= gas_fee("place_bid"),
            "insufficient funds for bid gas");

    bid.bidder = clientAddr;
    bid.timestamp = now;
    bid.score = bid_score(bid);
    if (!auction_.bid_book.empty()) {
        // only strict improvements over the best standing bid are accepted
        double best = auction_.bid_book.front().score;
        for (const auto& b : auction_.bid_book) best = std::max(best, b.score);
        require(bid.score > best, "bid does not improve on the standing best");
    }
    charge(clientAddr, "place_bid");
    auction_.bid_book.push_back(bid);
    clients_[clientAddr].status = ClientStatus::Bidding;
    events_.push_back("bid_broadcast " + clientAddr.hex());
}

std::vector<Address> ContractSystem::select_top_x(double now,
                                                  bool publisher_triggered) {
    require(auction_.phase == Phase::Open, "auction is not open");
    require(publisher_triggered || now >= auction_.requirements.closing_time,
            "bidding window still open");
    require(!auction_.bid_book.empty(), "no bids to select from");
    require(ledger_.account(auction_.publisher).balance >=
                gas_fee("select_top_x"),
            "insufficient funds for selection gas");

    std::vector<Bid> sorted = auction_.bid_book;
    std::sort(sorted.begin(), sorted.end(), [](const Bid& a, const Bid& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.bidder < b.bidder;
    });

    std::vector<Bid> winning;
    for (const auto& b : sorted) {
        if (winning.size() == auction_.requirements.top_x) break;
        const bool seen = std::any_of(
            winning.begin(), winning.end(),
            [&](const Bid& w) { return w.bidder == b.bidder; });
        if (!seen) winning.push_back(b);
    }
    Gwei payout = 0;
    for (const auto& b : winning) payout += b.price;
    require(payout <= auction_.requirements.budget,
            "winner prices exceed escrowed budget");

    charge(auction_.publisher, "select_top_x");
    ledger_.escrow_release(auction_.publisher, payout, pool_);
    auction_.winners.clear();
    auction_.winner_prices.clear();
    for (const auto& b : winning) {
        auction_.winners.push_back(b.bidder);
        auction_.winner_prices[b.bidder] = b.price;
        clients_[b.bidder].status = ClientStatus::Winner;
    }
    auction_.phase = Phase::Closed;
    events_.push_back("auction_closed");
    return auction_.winners;
}

void ContractSystem::begin_training() {
    require(auction_.phase == Phase::Closed, "auction is not closed");
    require(ledger_.account(auction_.publisher).balance >=
                gas_fee("close_auction"),
            "insufficient funds for close gas");
    charge(auction_.publisher, "close_auction");
    auction_.phase = Phase::Training;
    for (const auto& w : auction_.winners)
        clients_[w].status = ClientStatus::Training;
}

void ContractSystem::mark_dropout(const Address& clientAddr) {
    require(auction_.phase == Phase::Training, "training is not active");
    require(std::find(auction_.winners.begin(), auction_.winners.end(),
                      clientAddr) != auction_.winners.end(),
            "dropout is not a winner");
    require(clients_[clientAddr].status != ClientStatus::DroppedOut,
            "client already marked as dropped out");
    require(ledger_.account(auction_.publisher).balance >=
                gas_fee("mark_dropout"),
            "insufficient funds for dropout gas");
    charge(auction_.publisher, "mark_dropout");
    clients_[clientAddr].status = ClientStatus::DroppedOut;
    events_.push_back("dropout " + clientAddr.hex());
}

void ContractSystem::add_model_hash(const Digest& digest) {
    require(auction_.phase == Phase::Training, "training is not active");
    require(ledger_.content_has(digest), "digest not present in content store");
    require(ledger_.account(auction_.publisher).balance >=
                gas_fee("add_model_hash"),
            "insufficient funds for model hash gas");
    charge(auction_.publisher, "add_model_hash",
           {digest.begin(), digest.end()});
    auction_.model_digest = digest;
}

SettlementRecord ContractSystem::settle(double now) {
    require(auction_.phase == Phase::Training, "not in training phase");
    require(auction_.training_complete, "model training not completed");
    require(auction_.model_digest.has_value(), "no model digest recorded");
    require(now >= auction_.requirements.closing_time,
            "closing time has not passed");
    require(ledger_.account(auction_.publisher).balance >= gas_fee("settle"),
            "insufficient funds for settlement gas");
    charge(auction_.publisher, "settle");

    SettlementRecord rec;
    rec.model_digest = *auction_.model_digest;
    Gwei pool_spent = 0;
    for (const auto& w : auction_.winners) {
        ClientRecord& cr = clients_[w];
        const Gwei price = auction_.winner_prices.at(w);
        if (cr.status == ClientStatus::DroppedOut) {
            // forfeited deposit and unspent service fee go to the publisher
            ledger_.transfer(pool_, auction_.publisher, price);
            rec.publisher_refund += price;
            ledger_.escrow_release(w, cr.deposit_held, auction_.publisher);
            rec.deposits_forfeited += cr.deposit_held;
            cr.deposit_held = 0;
        } else {
            ledger_.transfer(pool_, w, price);
            rec.service_fees[w] = price;
            rec.fees_total += price;
            pool_spent += price;
            ledger_.escrow_release(w, cr.deposit_held, w);
            rec.deposits_refunded += cr.deposit_held;
            cr.deposit_held = 0;
            cr.status = ClientStatus::Paid;
        }
    }
    // residual budget never moved to the pool
    const Gwei residual =
        auction_.requirements.budget -
        static_cast<Gwei>([&] {
            Gwei p = 0;
            for (const auto& [addr, price] : auction_.winner_prices) p += price;
            return p;
        }());
    ledger_.escrow_release(auction_.publisher, residual, auction_.publisher);
    rec.publisher_refund += residual;

    auction_.phase = Phase::Settled;
    settlement_ = rec;
    events_.push_back("settled");
    return rec;
}

Digest ContractSystem::get_reward(const Address& clientAddr) {
    require(auction_.phase == Phase::Settled, "auction not settled");
    auto it = clients_.find(clientAddr);
    require(it != clients_.end() && it->second.status == ClientStatus::Paid,
            "reward available only to paid, non-dropout winners");
    require(ledger_.account(clientAddr).balance >= gas_fee("get_rewards"),
            "insufficient funds for reward gas");
    charge(clientAddr, "get_rewards");
    return settlement_->model_digest;
}

ScenarioResult replay_scenario(std::istream& script, double gas_price) {
    ledger::Ledger led;
    ContractSystem sys(led, gas_price);
    std::map<std::string, Address> names;
    ScenarioResult result;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(script, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream in(line);
        double t;
        std::string caller, op;
        if (!(in >> t >> caller >> op))
            throw std::invalid_argument("scenario line " +
                                        std::to_string(lineno) + ": malformed");
        try {
            if (op == "create") {
                Gwei balance;
                in >> balance;
                names[caller] = led.create_account(balance);
            } else if (op == "register_publisher") {
                sys.register_publisher(names.at(caller));
            } else if (op == "register_client") {
                Gwei deposit;
                in >> deposit;
                sys.register_client(names.at(caller), deposit);
            } else if (op == "open_auction") {
                TaskRequirements req;
                in >> req.budget >> req.security_deposit >> req.closing_time >>
                    req.top_x >> req.min_compute >> req.min_bandwidth >>
                    req.min_data_size >> req.data_type >> req.iterations;
                sys.open_auction(names.at(caller), req);
            } else if (op == "place_bid") {
                Bid bid;
                in >> bid.offered_compute >> bid.offered_bandwidth >>
                    bid.offered_data_size >> bid.offered_data_type >> bid.price;
                sys.place_bid(names.at(caller), bid, t);
            } else if (op == "select_top_x") {
                sys.select_top_x(t, true);
            } else if (op == "begin_training") {
                sys.begin_training();
            } else if (op == "training_complete") {
                sys.set_training_complete();
            } else if (op == "mark_dropout") {
                std::string who;
                in >> who;
                sys.mark_dropout(names.at(who));
            } else if (op == "add_model_hash") {
                std::string content;
                in >> content;
                auto digest = led.content_put(
                    std::vector<std::uint8_t>(content.begin(), content.end()));
                sys.add_model_hash(digest);
            } else if (op == "settle") {
                sys.settle(t);
            } else if (op == "get_reward") {
                sys.get_reward(names.at(caller));
            } else {
                throw std::invalid_argument("scenario line " +
                                            std::to_string(lineno) +
                                            ": unknown op " + op);
            }
            result.log.push_back("ok " + op + " " + caller);
        } catch (const Revert& e) {
            result.log.push_back("revert " + op + " " + caller + ": " +
                                 e.what());
        }
    }
    led.seal_block();
    result.ledger_snapshot = led.snapshot();
    result.settlement = sys.settlement();
    result.final_phase = sys.auction().phase;
    return result;
}

}  // namespace fedchain::contracts

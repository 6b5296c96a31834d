#include "fedchain/simnet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fedchain/rng.hpp"

namespace fedchain::sim {

namespace {

constexpr Gwei kPublisherFunds = 200'000'000'000ULL;
constexpr Gwei kClientFunds = 1'000'000'000ULL;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

const char* to_string(SelectionMode m) {
    return m == SelectionMode::Optimized ? "optimized" : "random";
}

void ExperimentPlan::validate() const {
    if (n_clients == 0) throw std::invalid_argument("n_clients == 0");
    if (selection_count == 0 || selection_count > n_clients)
        throw std::invalid_argument("selection_count outside (0, n_clients]");
    if (unreliable_fraction < 0 || unreliable_fraction > 1)
        throw std::invalid_argument("unreliable_fraction outside [0,1]");
    train_config.validate();
    requirements.validate();
}

double completion_time(const ClientProfile& p, std::size_t model_bytes,
                       double fixed_overhead_s) {
    return p.data_size_kb / p.compute_rate +
           (static_cast<double>(model_bytes) / 1024.0) / p.bandwidth +
           fixed_overhead_s;
}

std::vector<std::size_t> random_selection(std::size_t population,
                                          std::size_t count,
                                          std::uint64_t seed) {
    if (count > population)
        throw std::invalid_argument("selection count exceeds population");
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = Rng(seed).fork(0x73656c65);  // "sele"
    for (std::size_t i = 0; i < count; ++i)
        std::swap(idx[i], idx[i + rng.next_below(population - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

TaskRequirements default_requirements() {
    TaskRequirements req;
    req.min_compute = 250;     // KB/sec: above the unreliable stratum
    req.min_bandwidth = 400;   // KB/sec
    req.data_type = "image";
    req.min_data_size = 300;   // samples
    req.iterations = 1;
    req.budget = 1'000'000;
    req.security_deposit = 100'000;
    req.closing_time = 50;
    req.top_x = 5;
    return req;
}

std::vector<ClientProfile> make_profiles(const ExperimentPlan& plan,
                                         ledger::Ledger& led) {
    Rng rng = Rng(plan.seed).fork(0x70726f66);  // "prof"
    const std::size_t n_unreliable = static_cast<std::size_t>(
        std::llround(plan.unreliable_fraction * static_cast<double>(plan.n_clients)));

    std::vector<bool> unreliable(plan.n_clients, false);
    std::fill(unreliable.begin(),
              unreliable.begin() + static_cast<std::ptrdiff_t>(
                                       std::min(n_unreliable, plan.n_clients)),
              true);
    for (std::size_t i = unreliable.size(); i > 1; --i)
        std::swap(unreliable[i - 1], unreliable[rng.next_below(i)]);

    std::vector<ClientProfile> out;
    out.reserve(plan.n_clients);
    for (std::size_t i = 0; i < plan.n_clients; ++i) {
        ClientProfile p;
        p.address = led.create_account(kClientFunds);
        p.reliable = !unreliable[i];
        p.data_type = plan.requirements.data_type;
        p.data_size_kb = rng.uniform(3000, 4000);
        if (p.reliable) {
            p.compute_rate = rng.uniform(300, 500);
            p.bandwidth = rng.uniform(500, 1000);
            p.data_samples = 400 + rng.next_below(201);
            p.dropout_prob = rng.uniform(0.0, 0.02);
        } else {
            p.compute_rate = rng.uniform(105, 160);
            p.bandwidth = rng.uniform(50, 150);
            p.data_samples = 60 + rng.next_below(91);
            p.dropout_prob = rng.uniform(0.15, 0.30);
        }
        p.bid_price = 500 + rng.next_below(1500);
        p.bid_margin = rng.uniform(0.8, 1.0);
        out.push_back(p);
    }
    return out;
}

Simulation::Simulation(const ExperimentPlan& plan, fl::DatasetShard train,
                       fl::DatasetShard test)
    : plan_(plan),
      ckks_params_(plan.encryption ? ckks::preset_params(plan.ckks_preset)
                                   : ckks::make_params(16)),
      keys_(plan.encryption
                ? ckks::keygen(ckks_params_, Rng(plan.seed).fork(1).next_u64())
                : ckks::KeyPair{}),
      contracts_(ledger_, plan.gas_price),
      test_(std::move(test)) {
    plan_.validate();
    publisher_ = ledger_.create_account(kPublisherFunds);
    profiles_ = make_profiles(plan_, ledger_);

    // shard sizes follow each profile's data holdings, capped by the pool
    std::vector<std::size_t> sizes;
    sizes.reserve(profiles_.size());
    std::size_t budgeted = 0;
    for (const auto& p : profiles_) {
        std::size_t want = p.data_samples;
        if (budgeted + want > train.size()) want = train.size() - budgeted;
        sizes.push_back(want);
        budgeted += want;
    }
    shards_ = data::partition_iid(train, sizes, Rng(plan_.seed).fork(2).next_u64());
    for (std::size_t i = 0; i < profiles_.size(); ++i)
        profiles_[i].data_samples = shards_[i].size();

    fl::ModelShape shape{train.feature_dim, plan_.hidden_dims,
                         train.class_count};
    model_ = fl::init_model(shape, Rng(plan_.seed).fork(3).next_u64());
    dropped_.assign(profiles_.size(), false);
    fee_sink_seen_ = ledger_.account(ledger_.fee_sink()).balance;
}

std::vector<std::size_t> Simulation::run_auction_phase() {
    if (plan_.selection_mode == SelectionMode::Random) {
        selected_ = random_selection(profiles_.size(), plan_.selection_count,
                                     Rng(plan_.seed).fork(4).next_u64());
        return selected_;
    }

    contracts_.register_publisher(publisher_);
    const auto& req = plan_.requirements;
    for (const auto& p : profiles_)
        contracts_.register_client(p.address, req.security_deposit);
    contracts_.open_auction(publisher_, req);

    std::vector<std::pair<std::size_t, contracts::Bid>> eligible;
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
        const auto& p = profiles_[i];
        contracts::Bid bid;
        bid.offered_compute = p.compute_rate * p.bid_margin;
        bid.offered_bandwidth = p.bandwidth * p.bid_margin;
        bid.offered_data_size = static_cast<double>(p.data_samples);
        bid.offered_data_type = p.data_type;
        bid.price = p.bid_price;
        if (bid.offered_compute < req.min_compute ||
            bid.offered_bandwidth < req.min_bandwidth ||
            bid.offered_data_size < req.min_data_size)
            continue;  // under-resourced clients abstain
        eligible.emplace_back(i, bid);
    }
    // bidders watch the book and enter weakest first, so every bid
    // improves the standing best and all eligible clients get on record
    std::sort(eligible.begin(), eligible.end(),
              [&](const auto& a, const auto& b) {
                  const double sa = contracts_.bid_score(a.second);
                  const double sb = contracts_.bid_score(b.second);
                  if (sa != sb) return sa < sb;
                  return a.first < b.first;
              });
    double t = 1.0;
    for (auto& [i, bid] : eligible) {
        try {
            contracts_.place_bid(profiles_[i].address, bid, t);
        } catch (const contracts::Revert&) {
            // tied score: still outbid under the strict-improvement rule
        }
        t += 1.0;
    }
    auto winners = contracts_.select_top_x(req.closing_time);
    contracts_.begin_training();
    clock_ = std::max(clock_, req.closing_time);

    selected_.clear();
    for (const auto& w : winners) {
        for (std::size_t i = 0; i < profiles_.size(); ++i)
            if (profiles_[i].address == w) selected_.push_back(i);
    }
    std::sort(selected_.begin(), selected_.end());
    return selected_;
}

fl::ClientUpdate Simulation::train_client(std::size_t idx, std::size_t round) {
    fl::TrainConfig cfg = plan_.train_config;
    cfg.seed = Rng(plan_.seed).fork(1000 + round).fork(idx).next_u64();
    return fl::local_train(model_, shards_[idx], cfg);
}

RoundTrace Simulation::run_round() {
    if (selected_.empty())
        throw std::logic_error("run_round before selection");
    const double wall_start = now_seconds();
    const bool on_chain = plan_.selection_mode == SelectionMode::Optimized;

    RoundTrace trace;
    trace.round_index = round_;
    for (std::size_t i : selected_) trace.selected.push_back(profiles_[i].address);

    // dropout decisions, sampled once per client per round
    Rng drop_rng = Rng(plan_.seed).fork(2000 + round_);
    std::vector<std::size_t> survivors;
    for (std::size_t i : selected_) {
        if (dropped_[i]) continue;
        if (drop_rng.next_double() < profiles_[i].dropout_prob) {
            dropped_[i] = true;
            trace.dropouts.push_back(profiles_[i].address);
            if (on_chain) contracts_.mark_dropout(profiles_[i].address);
            continue;
        }
        if (shards_[i].size() > 0) survivors.push_back(i);
    }
    if (survivors.empty())
        throw AllDroppedOut("every selected client dropped out in round " +
                            std::to_string(round_));

    // local training (decrypt-train-encrypt realization)
    std::vector<fl::ClientUpdate> updates;
    for (std::size_t i : survivors) updates.push_back(train_client(i, round_));

    if (plan_.encryption) {
        std::vector<fl::EncryptedUpdate> enc;
        Rng enc_rng = Rng(plan_.seed).fork(3000 + round_);
        for (const auto& u : updates)
            enc.push_back(fl::encrypt_update(u, keys_.public_key, ckks_params_,
                                             enc_rng.next_u64()));
        auto agg = fl::encrypted_fedavg(model_, enc, {plan_.eta_global},
                                        ckks_params_);
        // clients hold the secret key; the harness decrypts on their behalf
        model_ = fl::decrypt_model(agg, keys_.secret_key, ckks_params_,
                                   model_.shape);
    } else {
        model_ = fl::fedavg(model_, updates, {plan_.eta_global});
    }

    const auto ckpt = fl::checkpoint_bytes(model_);
    trace.model_digest = ledger_.content_put(ckpt);
    if (on_chain) contracts_.add_model_hash(trace.model_digest);

    trace.accuracy = fl::evaluate(model_, test_);

    double round_virtual = 0;
    for (std::size_t i : survivors) {
        const double t = completion_time(profiles_[i], ckpt.size(),
                                         plan_.fixed_overhead_s);
        trace.completion_times[profiles_[i].address] = t;
        round_virtual = std::max(round_virtual, t);
    }
    clock_ += round_virtual;
    trace.virtual_time_s = clock_;

    ledger_.seal_block();
    const Gwei sink = ledger_.account(ledger_.fee_sink()).balance;
    trace.gas_spent = sink - fee_sink_seen_;
    fee_sink_seen_ = sink;

    trace.wall_time_s = now_seconds() - wall_start;
    ++round_;
    return trace;
}

ExperimentResult Simulation::run_experiment() {
    ExperimentResult result;
    run_auction_phase();

    for (std::size_t r = 0; r < plan_.rounds; ++r) {
        result.traces.push_back(run_round());
        if (plan_.early_stop && result.traces.size() >= 4) {
            const auto& t = result.traces;
            const double delta =
                std::abs(t.back().accuracy - t[t.size() - 4].accuracy);
            if (delta < 0.001) break;
        }
    }

    auto& s = result.summary;
    if (plan_.selection_mode == SelectionMode::Optimized) {
        contracts_.set_training_complete();
        if (!contracts_.auction().model_digest.has_value()) {
            // zero-round run: record the initial model so settlement can fire
            auto d = ledger_.content_put(fl::checkpoint_bytes(model_));
            contracts_.add_model_hash(d);
        }
        s.settlement = contracts_.settle(
            std::max(clock_, plan_.requirements.closing_time));
        for (std::size_t i : selected_)
            if (!dropped_[i]) contracts_.get_reward(profiles_[i].address);
        ledger_.seal_block();
        const Gwei sink = ledger_.account(ledger_.fee_sink()).balance;
        fee_sink_seen_ = sink;
    }

    s.rounds_run = result.traces.size();
    s.final_accuracy = result.traces.empty()
                           ? fl::evaluate(model_, test_)
                           : result.traces.back().accuracy;
    s.total_virtual_time_s = clock_;
    s.total_gas_gwei = ledger_.account(ledger_.fee_sink()).balance;
    for (const auto& t : result.traces) s.total_wall_time_s += t.wall_time_s;
    return result;
}

namespace {

std::string join_addresses(const std::vector<Address>& addrs) {
    std::string out;
    for (std::size_t i = 0; i < addrs.size(); ++i) {
        if (i) out.push_back(';');
        out += addrs[i].hex();
    }
    return out;
}

std::string fmt(double v, int prec) {
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(prec);
    o << v;
    return o.str();
}

}  // namespace

std::string trace_csv(const std::vector<RoundTrace>& traces,
                      SelectionMode mode, bool encrypted,
                      bool include_wall_time) {
    std::ostringstream out;
    out << "round,mode,encrypted,selected,dropouts,accuracy,wall_time_s,"
           "virtual_time_s,gas_gwei,model_digest\n";
    for (const auto& t : traces) {
        out << t.round_index << ',' << to_string(mode) << ','
            << (encrypted ? 1 : 0) << ',' << join_addresses(t.selected) << ','
            << join_addresses(t.dropouts) << ',' << fmt(t.accuracy, 6) << ','
            << fmt(include_wall_time ? t.wall_time_s : 0.0, 3) << ','
            << fmt(t.virtual_time_s, 3) << ',' << t.gas_spent << ','
            << ledger::hex(t.model_digest) << '\n';
    }
    return out.str();
}

std::string summary_text(const ExperimentSummary& s, SelectionMode mode,
                         bool encrypted, bool include_wall_time) {
    std::ostringstream out;
    out << "mode = " << to_string(mode) << '\n';
    out << "encrypted = " << (encrypted ? "true" : "false") << '\n';
    out << "rounds_run = " << s.rounds_run << '\n';
    out << "final_accuracy = " << fmt(s.final_accuracy, 6) << '\n';
    out << "total_wall_time_s = "
        << fmt(include_wall_time ? s.total_wall_time_s : 0.0, 3) << '\n';
    out << "total_virtual_time_s = " << fmt(s.total_virtual_time_s, 3) << '\n';
    out << "total_gas_gwei = " << s.total_gas_gwei << '\n';
    if (s.settlement) {
        out << "settlement_fees_total = " << s.settlement->fees_total << '\n';
        out << "settlement_deposits_refunded = "
            << s.settlement->deposits_refunded << '\n';
        out << "settlement_deposits_forfeited = "
            << s.settlement->deposits_forfeited << '\n';
        out << "settlement_publisher_refund = "
            << s.settlement->publisher_refund << '\n';
    }
    return out.str();
}

}  // namespace fedchain::sim

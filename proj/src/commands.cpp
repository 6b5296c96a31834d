#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fedchain/cli.hpp"
#include "fedchain/contracts.hpp"
#include "fedchain/flcore.hpp"
#include "fedchain/rng.hpp"

namespace fedchain::cli {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

data::TrainTest load_dataset(const RunConfig& cfg) {
    if (cfg.uses_idx()) {
        data::TrainTest tt;
        tt.train = data::load_idx_shard(cfg.train_images, cfg.train_labels,
                                        cfg.class_count);
        tt.test = data::load_idx_shard(cfg.test_images, cfg.test_labels,
                                       cfg.class_count);
        return tt;
    }
    return data::gen_synthetic(cfg.synthetic);
}

}  // namespace

int cmd_run(const RunConfig& cfg, std::ostream& diag) {
    std::string trace, summary, snapshot;
    try {
        auto tt = load_dataset(cfg);
        sim::Simulation s(cfg.plan, std::move(tt.train), std::move(tt.test));
        auto result = s.run_experiment();
        trace = sim::trace_csv(result.traces, cfg.plan.selection_mode,
                               cfg.plan.encryption, cfg.include_wall_time);
        summary = sim::summary_text(result.summary, cfg.plan.selection_mode,
                                    cfg.plan.encryption, cfg.include_wall_time);
        snapshot = s.chain().snapshot();
    } catch (const std::exception& e) {
        diag << "run failed: " << e.what() << '\n';
        return 1;
    }
    try {
        const fs::path dir = resolve_output_dir(cfg);
        fs::create_directories(dir);
        write_text(dir / "trace.csv", trace);
        write_text(dir / "summary.txt", summary);
        write_text(dir / "ledger.txt", snapshot);
        diag << "wrote trace.csv, summary.txt, ledger.txt to " << dir.string()
             << '\n';
    } catch (const std::exception& e) {
        diag << "run failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_bench_ckks(const std::string& preset, std::ostream& out) {
    ckks::CkksParams params;
    try {
        params = ckks::preset_params(preset);
    } catch (const std::exception& e) {
        out << "bench failed: " << e.what() << '\n';
        return 1;
    }

    Rng rng(7);
    auto keys = ckks::keygen(params, rng.next_u64());
    std::vector<double> values(params.slot_count());
    for (auto& v : values) v = rng.uniform(-1, 1);

    const int reps = 5;
    auto timed = [&](auto&& fn) {
        fn();  // warm-up
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i) fn();
        return seconds_since(start) / reps;
    };

    auto pt = ckks::encode(values, params, params.modulus_chain.size() - 1);
    auto ct = ckks::encrypt(pt, keys.public_key, params, rng.next_u64());
    const double t_encode =
        timed([&] { ckks::encode(values, params, pt.level); });
    const double t_encrypt = timed(
        [&] { ckks::encrypt(pt, keys.public_key, params, rng.next_u64()); });
    const double t_add = timed([&] { ckks::add(ct, ct, params); });
    const double t_mul = timed([&] { ckks::mul_plain(ct, pt, params); });
    auto prod = ckks::mul_plain(ct, pt, params);
    const double t_rescale = timed([&] { ckks::rescale(prod, params); });
    const double t_decrypt =
        timed([&] { ckks::decrypt(ct, keys.secret_key, params); });

    // 10-client aggregation round, encrypted vs plaintext
    const std::size_t n_params = std::min<std::size_t>(params.slot_count(), 256);
    fl::ModelShape shape{n_params - 1, {}, 1};
    auto model = fl::init_model(shape, rng.next_u64());
    std::vector<fl::ClientUpdate> updates(10);
    for (auto& u : updates) {
        u.n_samples = 50 + rng.next_below(100);
        u.delta.resize(model.values.size());
        for (auto& d : u.delta) d = rng.uniform(-0.1, 0.1);
    }

    const auto plain_start = std::chrono::steady_clock::now();
    fl::fedavg(model, updates, {1.0});
    const double t_plain = seconds_since(plain_start);

    const auto enc_start = std::chrono::steady_clock::now();
    std::vector<fl::EncryptedUpdate> enc;
    for (const auto& u : updates)
        enc.push_back(
            fl::encrypt_update(u, keys.public_key, params, rng.next_u64()));
    auto agg = fl::encrypted_fedavg(model, enc, {1.0}, params);
    fl::decrypt_model(agg, keys.secret_key, params, shape);
    const double t_enc = seconds_since(enc_start);

    out << "op,seconds\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    out << "encode," << t_encode << '\n';
    out << "encrypt," << t_encrypt << '\n';
    out << "add," << t_add << '\n';
    out << "mul_plain," << t_mul << '\n';
    out << "rescale," << t_rescale << '\n';
    out << "decrypt," << t_decrypt << '\n';
    out << "encrypted_plaintext_ratio," << (t_enc / t_plain) << '\n';
    return 0;
}

int cmd_gas_report(const RunConfig& cfg, std::ostream& out) {
    const auto rows =
        ledger::gas_cost_report(ledger::default_gas_table(), cfg.gas_prices);
    const std::string csv = ledger::gas_report_csv(rows);
    try {
        const fs::path dir = resolve_output_dir(cfg);
        fs::create_directories(dir);
        write_text(dir / "gas_report.csv", csv);
    } catch (const std::exception& e) {
        out << "gas-report failed: " << e.what() << '\n';
        return 1;
    }
    out << csv;
    return 0;
}

std::string demo_scenario_script(const RunConfig& cfg) {
    const auto& plan = cfg.plan;
    const auto& req = plan.requirements;
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);

    // funding covers the escrow amounts plus gas at the configured price
    const ledger::Gwei gas_reserve = 1'000'000'000;
    s << "# generated forward-auction walkthrough, seed " << plan.seed << '\n';
    s << "0 pub create " << req.budget * 2 + gas_reserve << '\n';
    s << "0 pub register_publisher\n";
    for (std::size_t i = 0; i < plan.n_clients; ++i) {
        s << "0 c" << i << " create " << req.security_deposit * 2 + gas_reserve
          << '\n';
        s << "0 c" << i << " register_client " << req.security_deposit << '\n';
    }
    s << "0 pub open_auction " << req.budget << ' ' << req.security_deposit
      << ' ' << req.closing_time << ' ' << req.top_x << ' ' << req.min_compute
      << ' ' << req.min_bandwidth << ' ' << req.min_data_size << ' '
      << req.data_type << ' ' << req.iterations << '\n';

    // each bid strictly improves on the last, so all of them stand
    const ledger::Gwei price =
        std::max<ledger::Gwei>(1, req.budget / (req.top_x * 4));
    double t = 1.0;
    for (std::size_t i = 0; i < plan.n_clients; ++i) {
        const double boost = 1.0 + 0.05 * static_cast<double>(i);
        s << t << " c" << i << " place_bid " << req.min_compute * boost << ' '
          << req.min_bandwidth * boost << ' ' << req.min_data_size * boost
          << ' ' << req.data_type << ' ' << price << '\n';
        t += 1.0;
    }
    // a lowball bid after a stronger one: rejected, logged as a revert
    s << t << " c0 place_bid " << req.min_compute << ' ' << req.min_bandwidth
      << ' ' << req.min_data_size << ' ' << req.data_type << ' ' << price
      << '\n';

    const double closed = req.closing_time;
    s << closed << " pub select_top_x\n";
    s << closed << " pub begin_training\n";
    if (plan.n_clients > 1)
        s << closed + 1 << " pub mark_dropout c" << plan.n_clients - 1 << '\n';
    s << closed + 2 << " pub add_model_hash converged-global-model\n";
    s << closed + 2 << " pub training_complete\n";
    s << closed + 3 << " pub settle\n";
    for (std::size_t i = 0; i < plan.n_clients; ++i)
        s << closed + 4 << " c" << i << " get_reward\n";
    return s.str();
}

int cmd_auction_demo(const RunConfig& cfg, std::ostream& out) {
    std::string script;
    if (!cfg.scenario_file.empty()) {
        std::ifstream in(cfg.scenario_file);
        if (!in) {
            out << "auction-demo failed: cannot open scenario file: "
                << cfg.scenario_file << '\n';
            return 1;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        script = buf.str();
    } else {
        script = demo_scenario_script(cfg);
    }

    contracts::ScenarioResult result;
    try {
        std::istringstream in(script);
        result = contracts::replay_scenario(in, cfg.plan.gas_price);
    } catch (const std::exception& e) {
        out << "auction-demo failed: " << e.what() << '\n';
        return 1;
    }

    for (const auto& line : result.log) out << line << '\n';
    out << "final_phase = " << contracts::to_string(result.final_phase) << '\n';
    if (result.settlement) {
        out << "fees_total = " << result.settlement->fees_total << '\n';
        out << "deposits_refunded = " << result.settlement->deposits_refunded
            << '\n';
        out << "deposits_forfeited = " << result.settlement->deposits_forfeited
            << '\n';
        out << "publisher_refund = " << result.settlement->publisher_refund
            << '\n';
    }
    return 0;
}

}  // namespace fedchain::cli

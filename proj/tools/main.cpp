#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fedchain/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fedchain: blockchain-coordinated federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, preset;

    auto* run = app.add_subcommand("run", "run the configured experiment");
    run->add_option("config", config_path, "key = value config file")
        ->required();

    auto* bench = app.add_subcommand("bench-ckks", "time the encryption ops");
    bench->add_option("preset", preset, "parameter preset, e.g. paper or test")
        ->required();

    auto* gas = app.add_subcommand("gas-report", "emit the gas cost table");
    gas->add_option("config", config_path, "key = value config file")
        ->required();

    auto* demo =
        app.add_subcommand("auction-demo", "replay a contract-only scenario");
    demo->add_option("config", config_path, "key = value config file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (bench->parsed())
            return fedchain::cli::cmd_bench_ckks(preset, std::cout);
        auto cfg = fedchain::cli::load_config(config_path);
        if (run->parsed()) return fedchain::cli::cmd_run(cfg, std::cout);
        if (gas->parsed()) return fedchain::cli::cmd_gas_report(cfg, std::cout);
        return fedchain::cli::cmd_auction_demo(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

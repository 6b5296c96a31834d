#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fedchain/cli.hpp"

namespace fedchain::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void type_error(std::size_t line, const std::string& key,
                             const std::string& want) {
    throw ConfigError("line " + std::to_string(line) + ": value for '" + key +
                      "' is not " + want);
}

double as_double(std::size_t line, const std::string& key,
                 const std::string& v) {
    std::size_t used = 0;
    double out;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        type_error(line, key, "a number");
    }
    if (used != v.size()) type_error(line, key, "a number");
    return out;
}

std::uint64_t as_u64(std::size_t line, const std::string& key,
                     const std::string& v) {
    std::size_t used = 0;
    std::uint64_t out;
    try {
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        type_error(line, key, "a non-negative integer");
    }
    if (used != v.size() || v[0] == '-')
        type_error(line, key, "a non-negative integer");
    return out;
}

bool as_bool(std::size_t line, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    type_error(line, key, "a boolean (true/false)");
}

std::vector<std::size_t> as_size_list(std::size_t line, const std::string& key,
                                      const std::string& v) {
    std::vector<std::size_t> out;
    std::istringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(as_u64(line, key, item));
    }
    return out;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    cfg.plan.requirements = sim::default_requirements();
    cfg.plan.requirements.top_x = cfg.plan.selection_count;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value'");

        auto& plan = cfg.plan;
        auto& req = plan.requirements;
        if (key == "n_clients") {
            plan.n_clients = as_u64(lineno, key, val);
        } else if (key == "rounds") {
            plan.rounds = as_u64(lineno, key, val);
        } else if (key == "selection_mode") {
            if (val == "optimized")
                plan.selection_mode = sim::SelectionMode::Optimized;
            else if (val == "random")
                plan.selection_mode = sim::SelectionMode::Random;
            else
                type_error(lineno, key, "one of optimized/random");
        } else if (key == "selection_count") {
            plan.selection_count = as_u64(lineno, key, val);
            req.top_x = plan.selection_count;
        } else if (key == "encryption") {
            plan.encryption = as_bool(lineno, key, val);
        } else if (key == "seed") {
            plan.seed = as_u64(lineno, key, val);
            cfg.synthetic.seed = plan.seed;
        } else if (key == "lr") {
            plan.train_config.learning_rate = as_double(lineno, key, val);
        } else if (key == "batch") {
            plan.train_config.batch_size = as_u64(lineno, key, val);
        } else if (key == "momentum") {
            plan.train_config.momentum = as_double(lineno, key, val);
        } else if (key == "local_epochs") {
            plan.train_config.local_epochs = as_u64(lineno, key, val);
        } else if (key == "hidden_dims") {
            plan.hidden_dims = as_size_list(lineno, key, val);
        } else if (key == "eta_global") {
            plan.eta_global = as_double(lineno, key, val);
        } else if (key == "unreliable_fraction") {
            plan.unreliable_fraction = as_double(lineno, key, val);
        } else if (key == "ckks_preset") {
            plan.ckks_preset = val;
        } else if (key == "fixed_overhead_s") {
            plan.fixed_overhead_s = as_double(lineno, key, val);
        } else if (key == "early_stop") {
            plan.early_stop = as_bool(lineno, key, val);
        } else if (key == "min_compute") {
            req.min_compute = as_double(lineno, key, val);
        } else if (key == "min_bandwidth") {
            req.min_bandwidth = as_double(lineno, key, val);
        } else if (key == "min_data_size") {
            req.min_data_size = as_double(lineno, key, val);
        } else if (key == "data_type") {
            req.data_type = val;
        } else if (key == "iterations") {
            req.iterations = as_u64(lineno, key, val);
        } else if (key == "budget") {
            req.budget = as_u64(lineno, key, val);
        } else if (key == "security_deposit") {
            req.security_deposit = as_u64(lineno, key, val);
        } else if (key == "closing_time") {
            req.closing_time = as_double(lineno, key, val);
        } else if (key == "train_images") {
            cfg.train_images = val;
        } else if (key == "train_labels") {
            cfg.train_labels = val;
        } else if (key == "test_images") {
            cfg.test_images = val;
        } else if (key == "test_labels") {
            cfg.test_labels = val;
        } else if (key == "class_count") {
            cfg.class_count = as_u64(lineno, key, val);
        } else if (key == "synthetic_classes") {
            cfg.synthetic.classes = as_u64(lineno, key, val);
        } else if (key == "synthetic_train") {
            cfg.synthetic.train_samples = as_u64(lineno, key, val);
        } else if (key == "synthetic_test") {
            cfg.synthetic.test_samples = as_u64(lineno, key, val);
        } else if (key == "synthetic_dim") {
            cfg.synthetic.feature_dim = as_u64(lineno, key, val);
        } else if (key == "synthetic_separation") {
            cfg.synthetic.separation = as_double(lineno, key, val);
        } else if (key == "output_dir") {
            cfg.output_dir = val;
        } else if (key == "gas_price_min") {
            cfg.gas_prices.min_price = as_double(lineno, key, val);
        } else if (key == "gas_price_avg") {
            cfg.gas_prices.avg_price = as_double(lineno, key, val);
            cfg.plan.gas_price = cfg.gas_prices.avg_price;
        } else if (key == "include_wall_time") {
            cfg.include_wall_time = as_bool(lineno, key, val);
        } else if (key == "scenario_file") {
            cfg.scenario_file = val;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

std::string resolve_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("FEDCHAIN_OUT"); env && *env)
        return env;
    return cfg.output_dir;
}

}  // namespace fedchain::cli

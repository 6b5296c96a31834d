#include <algorithm>
#include <set>

#include "doctest.h"
#include "fedchain/rng.hpp"
#include "fedchain/simnet.hpp"

using namespace fedchain;
using namespace fedchain::sim;

namespace {

data::TrainTest small_data(std::uint64_t seed, std::size_t train = 2000,
                           std::size_t test = 400) {
    data::SyntheticSpec spec;
    spec.classes = 4;
    spec.train_samples = train;
    spec.test_samples = test;
    spec.feature_dim = 16;
    spec.separation = 3.0;
    spec.seed = seed;
    return data::gen_synthetic(spec);
}

ExperimentPlan small_plan(std::uint64_t seed) {
    ExperimentPlan plan;
    plan.n_clients = 6;
    plan.rounds = 3;
    plan.selection_count = 3;
    plan.seed = seed;
    plan.requirements = default_requirements();
    plan.requirements.top_x = 3;
    plan.train_config.local_epochs = 1;
    plan.train_config.learning_rate = 0.1;
    return plan;
}

}  // namespace

TEST_CASE("partition_iid") {
    auto ds = small_data(1).train;

    SUBCASE("single full-size shard equals the dataset") {
        auto shards = data::partition_iid(ds, {ds.size()}, 3);
        REQUIRE(shards.size() == 1);
        std::multiset<double> a(ds.features.begin(), ds.features.end());
        std::multiset<double> b(shards[0].features.begin(),
                                shards[0].features.end());
        CHECK(a == b);
    }
    SUBCASE("shards are pairwise disjoint") {
        auto shards = data::partition_iid(ds, {300, 300, 300}, 4);
        // feature rows are continuous draws, so identical rows mean reuse
        std::set<std::vector<double>> seen;
        for (const auto& s : shards) {
            for (std::size_t r = 0; r < s.size(); ++r) {
                std::vector<double> row(
                    s.features.begin() + r * s.feature_dim,
                    s.features.begin() + (r + 1) * s.feature_dim);
                CHECK(seen.insert(row).second);
            }
        }
    }
    SUBCASE("large shards track the global label distribution") {
        auto shards = data::partition_iid(ds, {600, 600}, 5);
        for (const auto& s : shards) {
            for (std::size_t c = 0; c < s.class_count; ++c) {
                const double global =
                    static_cast<double>(std::count(ds.labels.begin(),
                                                   ds.labels.end(),
                                                   static_cast<int>(c))) /
                    static_cast<double>(ds.size());
                const double local =
                    static_cast<double>(std::count(s.labels.begin(),
                                                   s.labels.end(),
                                                   static_cast<int>(c))) /
                    static_cast<double>(s.size());
                CHECK(std::abs(local - global) < 0.05);
            }
        }
    }
    SUBCASE("oversubscription is an error") {
        CHECK_THROWS(data::partition_iid(ds, {ds.size(), 1}, 6));
    }
}

TEST_CASE("completion_time formula") {
    ClientProfile p;
    p.compute_rate = 100;
    p.bandwidth = 50;
    p.data_size_kb = 3000;

    SUBCASE("doubling compute halves the compute term") {
        const double t1 = completion_time(p, 0, 0.0);
        p.compute_rate *= 2;
        const double t2 = completion_time(p, 0, 0.0);
        CHECK(t2 == doctest::Approx(t1 / 2));
    }
    SUBCASE("zero model bytes zeroes the bandwidth term") {
        CHECK(completion_time(p, 0, 1.0) ==
              doctest::Approx(3000.0 / 100.0 + 1.0));
    }
    SUBCASE("population calibration: optimal ~14s vs random ~38s max") {
        ExperimentPlan plan = small_plan(0);
        plan.n_clients = 40;
        plan.unreliable_fraction = 0.5;
        ledger::Ledger led;
        auto profiles = make_profiles(plan, led);
        const std::size_t model_bytes = 80 * 1024;
        double max_reliable = 0, max_any = 0;
        for (const auto& prof : profiles) {
            const double t = completion_time(prof, model_bytes);
            max_any = std::max(max_any, t);
            if (prof.reliable) max_reliable = std::max(max_reliable, t);
        }
        CHECK(max_reliable > 10);
        CHECK(max_reliable < 18);
        CHECK(max_any > 30);
        CHECK(max_any < 45);
    }
}

TEST_CASE("random_selection") {
    SUBCASE("full count returns everyone") {
        auto sel = random_selection(5, 5, 1);
        CHECK(sel == std::vector<std::size_t>{0, 1, 2, 3, 4});
    }
    SUBCASE("same seed reproduces the subset") {
        CHECK(random_selection(30, 7, 9) == random_selection(30, 7, 9));
    }
    SUBCASE("count above population is an error") {
        CHECK_THROWS(random_selection(3, 4, 1));
    }
    SUBCASE("inclusion frequency is uniform within 2%") {
        const std::size_t n = 10, k = 3, trials = 10000;
        std::vector<std::size_t> hits(n, 0);
        for (std::size_t t = 0; t < trials; ++t)
            for (auto i : random_selection(n, k, 50'000 + t)) ++hits[i];
        const double expect = static_cast<double>(k) / n;
        for (auto h : hits) {
            const double freq = static_cast<double>(h) / trials;
            CHECK(std::abs(freq - expect) < 0.02);
        }
    }
}

TEST_CASE("auction phase selection soundness") {
    auto tt = small_data(21);
    auto plan = small_plan(21);

    SUBCASE("optimized winners meet every requirement") {
        Simulation s(plan, tt.train, tt.test);
        auto winners = s.run_auction_phase();
        CHECK(!winners.empty());
        for (auto i : winners) {
            const auto& p = s.profiles()[i];
            CHECK(p.compute_rate * p.bid_margin >= plan.requirements.min_compute);
            CHECK(p.bandwidth * p.bid_margin >= plan.requirements.min_bandwidth);
        }
    }
    SUBCASE("random mode can pick under-resourced clients") {
        plan.selection_mode = SelectionMode::Random;
        plan.unreliable_fraction = 0.5;
        bool found_unreliable = false;
        for (std::uint64_t seed = 0; seed < 20 && !found_unreliable; ++seed) {
            plan.seed = seed;
            Simulation s(plan, tt.train, tt.test);
            for (auto i : s.run_auction_phase())
                if (!s.profiles()[i].reliable) found_unreliable = true;
        }
        CHECK(found_unreliable);
    }
    SUBCASE("all clients under-resourced reverts at selection") {
        plan.unreliable_fraction = 1.0;
        Simulation s(plan, tt.train, tt.test);
        CHECK_THROWS_AS(s.run_auction_phase(), contracts::Revert);
    }
}

TEST_CASE("experiment runs") {
    auto tt = small_data(31);

    SUBCASE("zero rounds leaves the initial model") {
        auto plan = small_plan(31);
        plan.rounds = 0;
        Simulation s(plan, tt.train, tt.test);
        auto result = s.run_experiment();
        CHECK(result.traces.empty());
        CHECK(result.summary.rounds_run == 0);
        CHECK(result.summary.settlement.has_value());
    }
    SUBCASE("fixed seed reproduces identical traces byte for byte") {
        auto plan = small_plan(32);
        auto run = [&] {
            Simulation s(plan, tt.train, tt.test);
            auto r = s.run_experiment();
            return trace_csv(r.traces, plan.selection_mode, plan.encryption,
                             false) +
                   summary_text(r.summary, plan.selection_mode, plan.encryption,
                                false);
        };
        CHECK(run() == run());
    }
    SUBCASE("virtual clock advances by the max survivor completion time") {
        auto plan = small_plan(33);
        Simulation s(plan, tt.train, tt.test);
        s.run_auction_phase();
        const double before = s.clock();
        auto t = s.run_round();
        double max_t = 0;
        for (const auto& [addr, ct] : t.completion_times)
            max_t = std::max(max_t, ct);
        CHECK(t.virtual_time_s == doctest::Approx(before + max_t));
        CHECK(t.virtual_time_s > before);
    }
    SUBCASE("dropouts are a subset of selected and forfeited at settlement") {
        auto plan = small_plan(34);
        plan.unreliable_fraction = 1.0;
        plan.rounds = 6;
        plan.requirements.min_compute = 50;  // let unreliable clients win
        plan.requirements.min_bandwidth = 20;
        plan.requirements.min_data_size = 30;
        bool saw_dropout = false;
        for (std::uint64_t seed = 0; seed < 12 && !saw_dropout; ++seed) {
            plan.seed = seed;
            Simulation s(plan, tt.train, tt.test);
            try {
                auto result = s.run_experiment();
                std::size_t n_drops = 0;
                for (const auto& t : result.traces) {
                    for (const auto& d : t.dropouts)
                        CHECK(std::find(t.selected.begin(), t.selected.end(),
                                        d) != t.selected.end());
                    n_drops += t.dropouts.size();
                }
                if (n_drops > 0) {
                    saw_dropout = true;
                    REQUIRE(result.summary.settlement.has_value());
                    CHECK(result.summary.settlement->deposits_forfeited ==
                          n_drops * plan.requirements.security_deposit);
                }
            } catch (const AllDroppedOut&) {
            }
        }
        CHECK(saw_dropout);
    }
    SUBCASE("encrypted run agrees with plaintext run within 2 points") {
        auto plan = small_plan(35);
        plan.rounds = 3;
        plan.unreliable_fraction = 0;  // zero dropouts
        plan.ckks_preset = "test-256";
        Simulation sp(plan, tt.train, tt.test);
        auto rp = sp.run_experiment();
        plan.encryption = true;
        Simulation se(plan, tt.train, tt.test);
        auto re = se.run_experiment();
        for (std::size_t r = 0; r < rp.traces.size(); ++r)
            CHECK(std::abs(rp.traces[r].accuracy - re.traces[r].accuracy) <=
                  0.02);
    }
}

TEST_CASE("trace csv header is pinned") {
    auto csv = trace_csv({}, SelectionMode::Optimized, false, false);
    CHECK(csv ==
          "round,mode,encrypted,selected,dropouts,accuracy,wall_time_s,"
          "virtual_time_s,gas_gwei,model_digest\n");
}

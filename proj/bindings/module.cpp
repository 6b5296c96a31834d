#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fedchain/ckks.hpp"
#include "fedchain/contracts.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/flcore.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/simnet.hpp"

namespace py = pybind11;
using namespace fedchain;

PYBIND11_MODULE(_core, m) {
    m.doc() = "simulator core: CKKS encryption, ledger, contracts, "
              "federated training";

    // ---- ckks
    auto ckks_m = m.def_submodule("ckks");
    py::class_<ckks::CkksParams>(ckks_m, "CkksParams")
        .def_readonly("ring_dim", &ckks::CkksParams::ring_dim)
        .def_readonly("modulus_chain", &ckks::CkksParams::modulus_chain)
        .def_readonly("scale", &ckks::CkksParams::scale)
        .def("slot_count", &ckks::CkksParams::slot_count);
    py::class_<ckks::Plaintext>(ckks_m, "Plaintext")
        .def_readonly("level", &ckks::Plaintext::level)
        .def_readonly("scale", &ckks::Plaintext::scale);
    py::class_<ckks::Ciphertext>(ckks_m, "Ciphertext")
        .def_readonly("level", &ckks::Ciphertext::level)
        .def_readonly("scale", &ckks::Ciphertext::scale);
    py::class_<ckks::PublicKey>(ckks_m, "PublicKey");
    py::class_<ckks::KeyPair>(ckks_m, "KeyPair")
        .def_readonly("public_key", &ckks::KeyPair::public_key);
    ckks_m.def("make_params", &ckks::make_params, py::arg("ring_dim"),
               py::arg("chain_len") = 3, py::arg("scale") = 0x1p40);
    ckks_m.def("preset_params", &ckks::preset_params);
    ckks_m.def("keygen", &ckks::keygen);
    ckks_m.def("encode", &ckks::encode, py::arg("values"), py::arg("params"),
               py::arg("level"), py::arg("scale") = 0);
    ckks_m.def("decode", &ckks::decode);
    ckks_m.def("encrypt", &ckks::encrypt);
    ckks_m.def("decrypt",
               [](const ckks::Ciphertext& ct, const ckks::KeyPair& kp,
                  const ckks::CkksParams& p) {
                   return ckks::decrypt(ct, kp.secret_key, p);
               });
    ckks_m.def("add", &ckks::add);
    ckks_m.def("add_plain", &ckks::add_plain);
    ckks_m.def("mul_plain", &ckks::mul_plain);
    ckks_m.def("rescale", &ckks::rescale);
    ckks_m.def("serialize", [](const ckks::Ciphertext& ct) {
        auto bytes = ckks::serialize(ct);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                         bytes.size());
    });
    ckks_m.def("deserialize_ciphertext", [](py::bytes b) {
        std::string s = b;
        return ckks::deserialize_ciphertext(
            std::vector<std::uint8_t>(s.begin(), s.end()));
    });

    // ---- datasets
    auto data_m = m.def_submodule("data");
    py::class_<fl::DatasetShard>(data_m, "DatasetShard")
        .def(py::init<>())
        .def_readwrite("features", &fl::DatasetShard::features)
        .def_readwrite("labels", &fl::DatasetShard::labels)
        .def_readwrite("feature_dim", &fl::DatasetShard::feature_dim)
        .def_readwrite("class_count", &fl::DatasetShard::class_count)
        .def("size", &fl::DatasetShard::size);
    py::class_<data::SyntheticSpec>(data_m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("classes", &data::SyntheticSpec::classes)
        .def_readwrite("train_samples", &data::SyntheticSpec::train_samples)
        .def_readwrite("test_samples", &data::SyntheticSpec::test_samples)
        .def_readwrite("feature_dim", &data::SyntheticSpec::feature_dim)
        .def_readwrite("separation", &data::SyntheticSpec::separation)
        .def_readwrite("seed", &data::SyntheticSpec::seed);
    py::class_<data::TrainTest>(data_m, "TrainTest")
        .def_readwrite("train", &data::TrainTest::train)
        .def_readwrite("test", &data::TrainTest::test);
    data_m.def("gen_synthetic", &data::gen_synthetic);
    data_m.def("partition_iid", &data::partition_iid);
    data_m.def("load_idx_shard", &data::load_idx_shard);

    // ---- federated training
    auto fl_m = m.def_submodule("fl");
    py::class_<fl::ModelShape>(fl_m, "ModelShape")
        .def(py::init([](std::size_t in, std::vector<std::size_t> hidden,
                         std::size_t out) {
                 return fl::ModelShape{in, std::move(hidden), out};
             }),
             py::arg("input_dim"), py::arg("hidden"), py::arg("output_dim"))
        .def_readwrite("input_dim", &fl::ModelShape::input_dim)
        .def_readwrite("hidden", &fl::ModelShape::hidden)
        .def_readwrite("output_dim", &fl::ModelShape::output_dim)
        .def("param_count", &fl::ModelShape::param_count);
    py::class_<fl::ModelWeights>(fl_m, "ModelWeights")
        .def_readwrite("values", &fl::ModelWeights::values)
        .def_readwrite("shape", &fl::ModelWeights::shape);
    py::class_<fl::TrainConfig>(fl_m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &fl::TrainConfig::learning_rate)
        .def_readwrite("batch_size", &fl::TrainConfig::batch_size)
        .def_readwrite("momentum", &fl::TrainConfig::momentum)
        .def_readwrite("local_epochs", &fl::TrainConfig::local_epochs)
        .def_readwrite("seed", &fl::TrainConfig::seed);
    py::class_<fl::ClientUpdate>(fl_m, "ClientUpdate")
        .def(py::init<>())
        .def_readwrite("delta", &fl::ClientUpdate::delta)
        .def_readwrite("n_samples", &fl::ClientUpdate::n_samples);
    py::class_<fl::EncryptedUpdate>(fl_m, "EncryptedUpdate")
        .def_readonly("n_samples", &fl::EncryptedUpdate::n_samples)
        .def_readonly("param_count", &fl::EncryptedUpdate::param_count);
    fl_m.def("init_model", &fl::init_model);
    fl_m.def("local_train", &fl::local_train);
    fl_m.def("loss", &fl::loss);
    fl_m.def("gradient_check", &fl::gradient_check, py::arg("w"),
             py::arg("shard"), py::arg("seed"), py::arg("n_coords") = 40);
    fl_m.def("fedavg",
             [](const fl::ModelWeights& w,
                const std::vector<fl::ClientUpdate>& updates, double eta) {
                 return fl::fedavg(w, updates, {eta});
             },
             py::arg("w"), py::arg("updates"), py::arg("eta") = 1.0);
    fl_m.def("encrypt_update", &fl::encrypt_update);
    fl_m.def("encrypted_fedavg",
             [](const fl::ModelWeights& w,
                const std::vector<fl::EncryptedUpdate>& updates, double eta,
                const ckks::CkksParams& params) {
                 return fl::encrypted_fedavg(w, updates, {eta}, params);
             },
             py::arg("w"), py::arg("updates"), py::arg("eta"),
             py::arg("params"));
    fl_m.def("decrypt_model",
             [](const std::vector<ckks::Ciphertext>& chunks,
                const ckks::KeyPair& kp, const ckks::CkksParams& params,
                const fl::ModelShape& shape) {
                 return fl::decrypt_model(chunks, kp.secret_key, params, shape);
             });
    fl_m.def("evaluate", &fl::evaluate);

    // ---- ledger / gas
    auto ledger_m = m.def_submodule("ledger");
    ledger_m.def("gas_report_csv", [](double min_price, double avg_price) {
        return ledger::gas_report_csv(ledger::gas_cost_report(
            ledger::default_gas_table(), {min_price, avg_price}));
    }, py::arg("min_price") = 11.27, py::arg("avg_price") = 23.49);

    // ---- simulation
    auto sim_m = m.def_submodule("sim");
    py::enum_<sim::SelectionMode>(sim_m, "SelectionMode")
        .value("Optimized", sim::SelectionMode::Optimized)
        .value("Random", sim::SelectionMode::Random);
    py::class_<contracts::TaskRequirements>(sim_m, "TaskRequirements")
        .def(py::init<>())
        .def_readwrite("min_compute", &contracts::TaskRequirements::min_compute)
        .def_readwrite("min_bandwidth",
                       &contracts::TaskRequirements::min_bandwidth)
        .def_readwrite("data_type", &contracts::TaskRequirements::data_type)
        .def_readwrite("min_data_size",
                       &contracts::TaskRequirements::min_data_size)
        .def_readwrite("iterations", &contracts::TaskRequirements::iterations)
        .def_readwrite("budget", &contracts::TaskRequirements::budget)
        .def_readwrite("security_deposit",
                       &contracts::TaskRequirements::security_deposit)
        .def_readwrite("closing_time",
                       &contracts::TaskRequirements::closing_time)
        .def_readwrite("top_x", &contracts::TaskRequirements::top_x);
    py::class_<sim::ExperimentPlan>(sim_m, "ExperimentPlan")
        .def(py::init<>())
        .def_readwrite("n_clients", &sim::ExperimentPlan::n_clients)
        .def_readwrite("rounds", &sim::ExperimentPlan::rounds)
        .def_readwrite("selection_mode", &sim::ExperimentPlan::selection_mode)
        .def_readwrite("selection_count",
                       &sim::ExperimentPlan::selection_count)
        .def_readwrite("encryption", &sim::ExperimentPlan::encryption)
        .def_readwrite("seed", &sim::ExperimentPlan::seed)
        .def_readwrite("train_config", &sim::ExperimentPlan::train_config)
        .def_readwrite("requirements", &sim::ExperimentPlan::requirements)
        .def_readwrite("hidden_dims", &sim::ExperimentPlan::hidden_dims)
        .def_readwrite("eta_global", &sim::ExperimentPlan::eta_global)
        .def_readwrite("unreliable_fraction",
                       &sim::ExperimentPlan::unreliable_fraction)
        .def_readwrite("ckks_preset", &sim::ExperimentPlan::ckks_preset)
        .def_readwrite("gas_price", &sim::ExperimentPlan::gas_price);
    sim_m.def("default_requirements", &sim::default_requirements);
    sim_m.def(
        "run_experiment",
        [](const sim::ExperimentPlan& plan, const fl::DatasetShard& train,
           const fl::DatasetShard& test, bool include_wall_time) {
            sim::Simulation s(plan, train, test);
            auto r = s.run_experiment();
            py::dict out;
            out["final_accuracy"] = r.summary.final_accuracy;
            out["rounds_run"] = r.summary.rounds_run;
            out["total_virtual_time_s"] = r.summary.total_virtual_time_s;
            out["total_gas_gwei"] = r.summary.total_gas_gwei;
            out["trace_csv"] =
                sim::trace_csv(r.traces, plan.selection_mode, plan.encryption,
                               include_wall_time);
            out["summary"] =
                sim::summary_text(r.summary, plan.selection_mode,
                                  plan.encryption, include_wall_time);
            std::vector<double> acc;
            for (const auto& t : r.traces) acc.push_back(t.accuracy);
            out["round_accuracy"] = acc;
            return out;
        },
        py::arg("plan"), py::arg("train"), py::arg("test"),
        py::arg("include_wall_time") = false);
}

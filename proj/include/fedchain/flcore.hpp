#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedchain/ckks.hpp"

namespace fedchain::fl {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Layer sizes of the classifier. An empty hidden list is multinomial
/// logistic regression; otherwise tanh hidden layers feed a softmax head.
struct ModelShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t output_dim = 0;

    std::size_t param_count() const;
    bool operator==(const ModelShape&) const = default;
};

struct ModelWeights {
    std::vector<double> values;
    ModelShape shape;
};

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 10;
    double momentum = 0.9;
    std::size_t local_epochs = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ClientUpdate {
    std::vector<double> delta;
    std::size_t n_samples = 0;
};

struct EncryptedUpdate {
    std::vector<ckks::Ciphertext> chunks;
    std::size_t n_samples = 0;
    std::size_t param_count = 0;
};

struct GlobalStep {
    double eta_global = 1.0;
};

struct DatasetShard {
    std::vector<double> features;  // row-major, rows × feature_dim
    std::vector<int> labels;
    std::size_t feature_dim = 0;
    std::size_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    void validate() const;
};

ModelWeights init_model(const ModelShape& shape, std::uint64_t seed);

ClientUpdate local_train(const ModelWeights& w, const DatasetShard& shard,
                         const TrainConfig& cfg);

/// Mean cross-entropy loss over the shard.
double loss(const ModelWeights& w, const DatasetShard& shard);

/// Max relative deviation between analytic and central finite-difference
/// gradients over a random sample of coordinates.
double gradient_check(const ModelWeights& w, const DatasetShard& shard,
                      std::uint64_t seed, std::size_t n_coords = 40);

ModelWeights fedavg(const ModelWeights& w_t,
                    const std::vector<ClientUpdate>& updates,
                    const GlobalStep& step);

EncryptedUpdate encrypt_update(const ClientUpdate& update,
                               const ckks::PublicKey& pk,
                               const ckks::CkksParams& params,
                               std::uint64_t seed);

/// Homomorphic FedAvg: per chunk, Σ_i mul_plain(E_i, η·n_i/Σn), one
/// rescale, then the matching w_t segment folded in as plaintext. The
/// caller never needs the secret key.
std::vector<ckks::Ciphertext> encrypted_fedavg(
    const ModelWeights& w_t, const std::vector<EncryptedUpdate>& enc_updates,
    const GlobalStep& step, const ckks::CkksParams& params);

ModelWeights decrypt_model(const std::vector<ckks::Ciphertext>& chunks,
                           const ckks::PolyRns& sk,
                           const ckks::CkksParams& params,
                           const ModelShape& shape);

double evaluate(const ModelWeights& w, const DatasetShard& test);

/// Binary checkpoint: "FLWT" magic, shape descriptor, little-endian
/// 64-bit floats. Its SHA-256 is what goes on the ledger.
std::vector<std::uint8_t> checkpoint_bytes(const ModelWeights& w);
ModelWeights checkpoint_parse(const std::vector<std::uint8_t>& bytes);

}  // namespace fedchain::fl

#include "fedchain/flcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "fedchain/rng.hpp"

namespace fedchain::fl {

namespace {

// Feed-forward network with tanh hidden layers and a softmax head.
// Weight layout per layer: W (out×in, row-major) then bias (out).
struct Net {
    const ModelShape& shape;
    const double* params;

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims{shape.input_dim};
        dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
        dims.push_back(shape.output_dim);
        return dims;
    }
};

void softmax(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (auto& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : z) v /= sum;
}

// Forward pass storing activations per layer; returns class probabilities.
std::vector<std::vector<double>> forward(const ModelShape& shape,
                                         const double* params,
                                         const double* x) {
    std::vector<std::size_t> dims{shape.input_dim};
    dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
    dims.push_back(shape.output_dim);

    std::vector<std::vector<double>> acts;
    acts.emplace_back(x, x + shape.input_dim);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l], out = dims[l + 1];
        const double* w = params + off;
        const double* b = params + off + in * out;
        std::vector<double> z(out);
        for (std::size_t o = 0; o < out; ++o) {
            double s = b[o];
            const double* row = w + o * in;
            const double* a = acts.back().data();
            for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
            z[o] = s;
        }
        const bool last = (l + 2 == dims.size());
        if (last) {
            softmax(z);
        } else {
            for (auto& v : z) v = std::tanh(v);
        }
        acts.push_back(std::move(z));
        off += in * out + out;
    }
    return acts;
}

// Accumulates d(mean CE loss)/d(params) for one sample into grad.
void backward(const ModelShape& shape, const double* params,
              const std::vector<std::vector<double>>& acts, int label,
              double weight, double* grad) {
    std::vector<std::size_t> dims{shape.input_dim};
    dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
    dims.push_back(shape.output_dim);
    const std::size_t n_layers = dims.size() - 1;

    std::vector<std::size_t> offs(n_layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        offs[l] = off;
        off += dims[l] * dims[l + 1] + dims[l + 1];
    }

    // softmax + cross-entropy: dL/dz = p - onehot
    std::vector<double> delta = acts.back();
    delta[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t in = dims[l], out = dims[l + 1];
        const double* w = params + offs[l];
        const double* a = acts[l].data();
        double* gw = grad + offs[l];
        double* gb = grad + offs[l] + in * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o] * weight;
            double* grow = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
            gb[o] += d;
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
            double s = 0;
            for (std::size_t o = 0; o < out; ++o) s += w[o * in + i] * delta[o];
            // tanh' = 1 - a²
            prev[i] = s * (1.0 - a[i] * a[i]);
        }
        delta = std::move(prev);
    }
}

void check_dims(const ModelWeights& w, const DatasetShard& shard) {
    if (shard.feature_dim != w.shape.input_dim)
        throw ShapeError("feature dim does not match model input dim");
    if (shard.class_count != w.shape.output_dim)
        throw ShapeError("class count does not match model output dim");
    if (w.values.size() != w.shape.param_count())
        throw ShapeError("weight vector length does not match shape");
}

}  // namespace

std::size_t ModelShape::param_count() const {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += dims[l] * dims[l + 1] + dims[l + 1];
    return n;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate <= 0");
    if (batch_size == 0) throw std::invalid_argument("batch_size == 0");
    if (momentum < 0 || momentum >= 1)
        throw std::invalid_argument("momentum outside [0, 1)");
}

void DatasetShard::validate() const {
    if (labels.size() * feature_dim != features.size())
        throw ShapeError("feature matrix size does not match label count");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= class_count)
            throw ShapeError("label out of class range");
}

ModelWeights init_model(const ModelShape& shape, std::uint64_t seed) {
    if (shape.input_dim == 0 || shape.output_dim == 0)
        throw ShapeError("model shape dims must be positive");
    ModelWeights w;
    w.shape = shape;
    w.values.resize(shape.param_count());
    Rng rng = Rng(seed).fork(0x696e6974);  // "init"

    std::vector<std::size_t> dims{shape.input_dim};
    dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
    dims.push_back(shape.output_dim);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (std::size_t i = 0; i < dims[l] * dims[l + 1]; ++i)
            w.values[off + i] = rng.uniform(-bound, bound);
        off += dims[l] * dims[l + 1] + dims[l + 1];  // biases stay zero
    }
    return w;
}

double loss(const ModelWeights& w, const DatasetShard& shard) {
    check_dims(w, shard);
    double total = 0;
    for (std::size_t r = 0; r < shard.size(); ++r) {
        auto acts = forward(w.shape, w.values.data(),
                            shard.features.data() + r * shard.feature_dim);
        const double p = acts.back()[static_cast<std::size_t>(shard.labels[r])];
        total += -std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(shard.size());
}

ClientUpdate local_train(const ModelWeights& w, const DatasetShard& shard,
                         const TrainConfig& cfg) {
    cfg.validate();
    shard.validate();
    check_dims(w, shard);
    if (shard.size() == 0) throw ShapeError("empty shard");

    std::vector<double> params = w.values;
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> grad(params.size());
    Rng rng = Rng(cfg.seed).fork(0x74726169);  // "trai"

    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        // Fisher-Yates with the counter rng keeps epochs reproducible
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        for (std::size_t start = 0; start < order.size();
             start += cfg.batch_size) {
            const std::size_t end =
                std::min(start + cfg.batch_size, order.size());
            const double inv = 1.0 / static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t r = order[k];
                auto acts =
                    forward(w.shape, params.data(),
                            shard.features.data() + r * shard.feature_dim);
                backward(w.shape, params.data(), acts, shard.labels[r], inv,
                         grad.data());
            }
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity[i] = cfg.momentum * velocity[i] + grad[i];
                params[i] -= cfg.learning_rate * velocity[i];
                if (!std::isfinite(params[i]))
                    throw DivergenceError("training diverged to non-finite");
            }
        }
    }

    ClientUpdate u;
    u.n_samples = shard.size();
    u.delta.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        u.delta[i] = params[i] - w.values[i];
    return u;
}

double gradient_check(const ModelWeights& w, const DatasetShard& shard,
                      std::uint64_t seed, std::size_t n_coords) {
    check_dims(w, shard);
    std::vector<double> grad(w.values.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(shard.size());
    for (std::size_t r = 0; r < shard.size(); ++r) {
        auto acts = forward(w.shape, w.values.data(),
                            shard.features.data() + r * shard.feature_dim);
        backward(w.shape, w.values.data(), acts, shard.labels[r], inv,
                 grad.data());
    }

    Rng rng = Rng(seed).fork(0x67726164);  // "grad"
    ModelWeights probe = w;
    const double h = 1e-5;
    double worst = 0;
    for (std::size_t k = 0; k < n_coords; ++k) {
        const std::size_t i = rng.next_below(w.values.size());
        const double orig = probe.values[i];
        probe.values[i] = orig + h;
        const double up = loss(probe, shard);
        probe.values[i] = orig - h;
        const double down = loss(probe, shard);
        probe.values[i] = orig;
        const double fd = (up - down) / (2 * h);
        const double rel = std::abs(grad[i] - fd) / (1.0 + std::abs(fd));
        worst = std::max(worst, rel);
    }
    return worst;
}

ModelWeights fedavg(const ModelWeights& w_t,
                    const std::vector<ClientUpdate>& updates,
                    const GlobalStep& step) {
    if (updates.empty()) throw std::invalid_argument("no updates to aggregate");
    if (step.eta_global <= 0) throw std::invalid_argument("eta_global <= 0");
    double n_total = 0;
    for (const auto& u : updates) {
        if (u.delta.size() != w_t.values.size())
            throw ShapeError("update length does not match model");
        if (u.n_samples == 0) throw std::invalid_argument("n_samples == 0");
        n_total += static_cast<double>(u.n_samples);
    }
    ModelWeights out = w_t;
    for (const auto& u : updates) {
        const double coef =
            step.eta_global * static_cast<double>(u.n_samples) / n_total;
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += coef * u.delta[i];
    }
    return out;
}

EncryptedUpdate encrypt_update(const ClientUpdate& update,
                               const ckks::PublicKey& pk,
                               const ckks::CkksParams& params,
                               std::uint64_t seed) {
    const std::size_t slots = params.slot_count();
    const std::size_t top = params.modulus_chain.size() - 1;
    EncryptedUpdate enc;
    enc.n_samples = update.n_samples;
    enc.param_count = update.delta.size();
    Rng rng = Rng(seed).fork(0x75706474);  // "updt"
    for (std::size_t start = 0; start < update.delta.size(); start += slots) {
        const std::size_t end = std::min(start + slots, update.delta.size());
        std::vector<double> seg(update.delta.begin() + start,
                                update.delta.begin() + end);
        auto pt = ckks::encode(seg, params, top);
        enc.chunks.push_back(ckks::encrypt(pt, pk, params, rng.next_u64()));
    }
    if (enc.chunks.empty()) throw ShapeError("empty update");
    return enc;
}

std::vector<ckks::Ciphertext> encrypted_fedavg(
    const ModelWeights& w_t, const std::vector<EncryptedUpdate>& enc_updates,
    const GlobalStep& step, const ckks::CkksParams& params) {
    if (enc_updates.empty())
        throw std::invalid_argument("no encrypted updates to aggregate");
    const std::size_t n_chunks = enc_updates.front().chunks.size();
    const std::size_t level = enc_updates.front().chunks.front().level;
    const double scale = enc_updates.front().chunks.front().scale;
    double n_total = 0;
    for (const auto& u : enc_updates) {
        if (u.chunks.size() != n_chunks ||
            u.param_count != enc_updates.front().param_count)
            throw ckks::AlignmentError("mismatched chunk structure");
        for (const auto& c : u.chunks)
            if (c.level != level || std::abs(c.scale - scale) / scale > 1e-9)
                throw ckks::AlignmentError("mixed levels or scales");
        n_total += static_cast<double>(u.n_samples);
    }

    const std::size_t slots = params.slot_count();
    std::vector<ckks::Ciphertext> out;
    out.reserve(n_chunks);
    for (std::size_t j = 0; j < n_chunks; ++j) {
        ckks::Ciphertext acc;
        bool first = true;
        for (const auto& u : enc_updates) {
            const double coef = step.eta_global *
                                static_cast<double>(u.n_samples) / n_total;
            auto weight =
                ckks::encode(std::vector<double>(slots, coef), params, level);
            auto term = ckks::mul_plain(u.chunks[j], weight, params);
            acc = first ? term : ckks::add(acc, term, params);
            first = false;
        }
        acc = ckks::rescale(acc, params);

        const std::size_t start = j * slots;
        const std::size_t end =
            std::min(start + slots, w_t.values.size());
        std::vector<double> seg(w_t.values.begin() + start,
                                w_t.values.begin() + end);
        auto base = ckks::encode(seg, params, acc.level, acc.scale);
        out.push_back(ckks::add_plain(acc, base, params));
    }
    return out;
}

ModelWeights decrypt_model(const std::vector<ckks::Ciphertext>& chunks,
                           const ckks::PolyRns& sk,
                           const ckks::CkksParams& params,
                           const ModelShape& shape) {
    const std::size_t count = shape.param_count();
    const std::size_t slots = params.slot_count();
    if (chunks.size() * slots < count)
        throw ShapeError("not enough ciphertext chunks for shape");
    ModelWeights w;
    w.shape = shape;
    w.values.reserve(count);
    for (std::size_t j = 0; j < chunks.size() && w.values.size() < count; ++j) {
        const std::size_t want = std::min(slots, count - w.values.size());
        auto pt = ckks::decrypt(chunks[j], sk, params);
        auto vals = ckks::decode(pt, params, want);
        w.values.insert(w.values.end(), vals.begin(), vals.end());
    }
    return w;
}

double evaluate(const ModelWeights& w, const DatasetShard& test) {
    check_dims(w, test);
    if (test.size() == 0) throw ShapeError("empty test shard");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < test.size(); ++r) {
        auto acts = forward(w.shape, w.values.data(),
                            test.features.data() + r * test.feature_dim);
        const auto& probs = acts.back();
        const auto best =
            std::max_element(probs.begin(), probs.end()) - probs.begin();
        if (best == test.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<std::uint8_t> checkpoint_bytes(const ModelWeights& w) {
    std::vector<std::uint8_t> out{'F', 'L', 'W', 'T'};
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
    };
    put_u32(static_cast<std::uint32_t>(w.shape.input_dim));
    put_u32(static_cast<std::uint32_t>(w.shape.hidden.size()));
    for (auto h : w.shape.hidden) put_u32(static_cast<std::uint32_t>(h));
    put_u32(static_cast<std::uint32_t>(w.shape.output_dim));
    for (double v : w.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back((bits >> (8 * i)) & 0xff);
    }
    return out;
}

ModelWeights checkpoint_parse(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto u8 = [&] {
        if (pos >= bytes.size()) throw std::runtime_error("checkpoint truncated");
        return bytes[pos++];
    };
    if (u8() != 'F' || u8() != 'L' || u8() != 'W' || u8() != 'T')
        throw std::runtime_error("bad checkpoint magic");
    auto u32 = [&] {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    };
    ModelWeights w;
    w.shape.input_dim = u32();
    const std::uint32_t nh = u32();
    for (std::uint32_t i = 0; i < nh; ++i) w.shape.hidden.push_back(u32());
    w.shape.output_dim = u32();
    const std::size_t count = w.shape.param_count();
    w.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(u8()) << (8 * b);
        double v;
        std::memcpy(&v, &bits, 8);
        w.values.push_back(v);
    }
    return w;
}

}  // namespace fedchain::fl

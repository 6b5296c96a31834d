#include "fedchain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fedchain/rng.hpp"

namespace fedchain::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t pos) {
    if (pos + 4 > b.size()) throw FormatError("IDX header truncated");
    return (static_cast<std::uint32_t>(b[pos]) << 24) |
           (static_cast<std::uint32_t>(b[pos + 1]) << 16) |
           (static_cast<std::uint32_t>(b[pos + 2]) << 8) |
           static_cast<std::uint32_t>(b[pos + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back((v >> 24) & 0xff);
    out.push_back((v >> 16) & 0xff);
    out.push_back((v >> 8) & 0xff);
    out.push_back(v & 0xff);
}

}  // namespace

IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (read_be32(bytes, 0) != kImagesMagic)
        throw FormatError("bad IDX image magic");
    IdxImages img;
    img.count = read_be32(bytes, 4);
    img.rows = read_be32(bytes, 8);
    img.cols = read_be32(bytes, 12);
    const std::size_t payload =
        static_cast<std::size_t>(img.count) * img.rows * img.cols;
    if (bytes.size() < 16 + payload)
        throw FormatError("IDX image payload truncated");
    if (bytes.size() > 16 + payload)
        throw FormatError("IDX image file has trailing bytes");
    img.pixels.resize(payload);
    for (std::size_t i = 0; i < payload; ++i)
        img.pixels[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return img;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    if (read_be32(bytes, 0) != kLabelsMagic)
        throw FormatError("bad IDX label magic");
    const std::uint32_t count = read_be32(bytes, 4);
    if (bytes.size() < 8 + count) throw FormatError("IDX label payload truncated");
    if (bytes.size() > 8 + count)
        throw FormatError("IDX label file has trailing bytes");
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i)
        labels[i] = static_cast<int>(bytes[8 + i]);
    return labels;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fl::DatasetShard load_idx_shard(const std::string& images_path,
                                const std::string& labels_path,
                                std::size_t class_count) {
    auto img = parse_idx_images(read_file(images_path));
    auto labels = parse_idx_labels(read_file(labels_path));
    if (labels.size() != img.count)
        throw FormatError("IDX image/label counts disagree");
    fl::DatasetShard shard;
    shard.features = std::move(img.pixels);
    shard.labels = std::move(labels);
    shard.feature_dim = static_cast<std::size_t>(img.rows) * img.cols;
    shard.class_count = class_count;
    shard.validate();
    return shard;
}

std::vector<std::uint8_t> write_idx_images(const IdxImages& images) {
    std::vector<std::uint8_t> out;
    write_be32(out, kImagesMagic);
    write_be32(out, images.count);
    write_be32(out, images.rows);
    write_be32(out, images.cols);
    for (double p : images.pixels)
        out.push_back(static_cast<std::uint8_t>(
            std::lround(std::clamp(p, 0.0, 1.0) * 255.0)));
    return out;
}

std::vector<std::uint8_t> write_idx_labels(const std::vector<int>& labels) {
    std::vector<std::uint8_t> out;
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
    return out;
}

TrainTest gen_synthetic(const SyntheticSpec& spec) {
    if (spec.classes == 0 || spec.feature_dim == 0 || spec.train_samples == 0 ||
        spec.test_samples == 0)
        throw std::invalid_argument("synthetic spec sizes must be positive");
    Rng rng = Rng(spec.seed).fork(0x73796e74);  // "synt"

    // unit-norm random class centers scaled by the separation knob
    std::vector<std::vector<double>> centers(spec.classes);
    for (auto& c : centers) {
        c.resize(spec.feature_dim);
        double norm = 0;
        for (auto& v : c) {
            v = rng.gaussian(1.0);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : c) v = v / norm * spec.separation;
    }

    auto fill = [&](fl::DatasetShard& shard, std::size_t count) {
        shard.feature_dim = spec.feature_dim;
        shard.class_count = spec.classes;
        shard.features.reserve(count * spec.feature_dim);
        shard.labels.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t cls = i % spec.classes;  // balanced
            shard.labels.push_back(static_cast<int>(cls));
            for (std::size_t d = 0; d < spec.feature_dim; ++d)
                shard.features.push_back(centers[cls][d] + rng.gaussian(1.0));
        }
    };
    TrainTest tt;
    fill(tt.train, spec.train_samples);
    fill(tt.test, spec.test_samples);
    return tt;
}

std::vector<fl::DatasetShard> partition_iid(
    const fl::DatasetShard& dataset, const std::vector<std::size_t>& sizes,
    std::uint64_t seed) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(),
                                              static_cast<std::size_t>(0));
    if (total > dataset.size())
        throw std::invalid_argument("shard sizes oversubscribe the dataset");

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).fork(0x70617274);  // "part"
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);

    std::vector<fl::DatasetShard> shards;
    shards.reserve(sizes.size());
    std::size_t pos = 0;
    for (std::size_t count : sizes) {
        fl::DatasetShard s;
        s.feature_dim = dataset.feature_dim;
        s.class_count = dataset.class_count;
        s.features.reserve(count * s.feature_dim);
        s.labels.reserve(count);
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t r = order[pos++];
            s.labels.push_back(dataset.labels[r]);
            const auto* row = dataset.features.data() + r * dataset.feature_dim;
            s.features.insert(s.features.end(), row, row + dataset.feature_dim);
        }
        shards.push_back(std::move(s));
    }
    return shards;
}

}  // namespace fedchain::data

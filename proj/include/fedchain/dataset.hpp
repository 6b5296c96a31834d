#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedchain/flcore.hpp"

namespace fedchain::data {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IdxHeader {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
};

/// Parses big-endian IDX images (magic 0x00000803) and labels
/// (0x00000801). Pixels come back scaled to [0,1]. Trailing bytes after
/// the declared payload are a format error.
struct IdxImages {
    std::uint32_t count = 0, rows = 0, cols = 0;
    std::vector<double> pixels;  // count × rows·cols
};
IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::string& path);

/// Assembles a shard from matching image/label IDX files.
fl::DatasetShard load_idx_shard(const std::string& images_path,
                                const std::string& labels_path,
                                std::size_t class_count = 10);

/// IDX writers for fixtures and round-trip tests.
std::vector<std::uint8_t> write_idx_images(const IdxImages& images);
std::vector<std::uint8_t> write_idx_labels(const std::vector<int>& labels);

struct SyntheticSpec {
    std::size_t classes = 10;
    std::size_t train_samples = 1000;
    std::size_t test_samples = 200;
    std::size_t feature_dim = 64;
    double separation = 2.0;  // distance between class centers in stddevs
    std::uint64_t seed = 0;
};

struct TrainTest {
    fl::DatasetShard train;
    fl::DatasetShard test;
};

/// Gaussian class blobs with controlled separation; deterministic.
TrainTest gen_synthetic(const SyntheticSpec& spec);

/// Uniform-without-replacement IID split into per-client shards.
std::vector<fl::DatasetShard> partition_iid(
    const fl::DatasetShard& dataset, const std::vector<std::size_t>& sizes,
    std::uint64_t seed);

}  // namespace fedchain::data

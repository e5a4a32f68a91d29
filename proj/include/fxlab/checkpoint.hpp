#pragma once

#include "fxlab/network.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fxlab {

// Per-mel-band standardization fitted on a training split.
struct Standardizer {
    std::vector<float> mean;
    std::vector<float> stddev;

    bool empty() const noexcept { return mean.empty(); }
    // In-place on a frames x bands row-major matrix.
    void apply(std::span<float> features, std::size_t bands) const;
};

struct CheckpointMeta {
    NetworkConfig config;
    std::uint64_t seed = 0;
    std::string feature_checksum;
    std::string train_subset;  // subset name of the training manifest
    Standardizer standardizer;
    int best_epoch = -1;
    double best_metric = 0.0;
    std::string init_scheme = "kaiming_uniform_fan_in;embedding_uniform_0.1";
    std::string conditioning = "concat_after_flatten";
};

// Layout (all integers little-endian):
//   "FXLABCKP" | u32 version | u32 meta length | meta JSON |
//   u32 tensor count | per tensor: u32 name length, name, u8 dtype (1 = f32),
//   u32 rank, u64 dims[rank], f32 data[prod(dims)] row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, Network& net, const CheckpointMeta& meta);

struct LoadedModel {
    std::unique_ptr<Network> net;
    CheckpointMeta meta;
};

LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fxlab

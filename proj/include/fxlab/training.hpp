#pragma once

#include "fxlab/checkpoint.hpp"
#include "fxlab/dataset.hpp"
#include "fxlab/features.hpp"
#include "fxlab/network.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fxlab {

inline constexpr std::size_t kFeatureSize = kFeatureFrames * kMelBands;

// Featurized dataset in memory. Rows follow manifest order.
struct FeatureSet {
    Subset subset = Subset::MonoDiscrete;
    std::vector<float> features;  // [rows, 87*128], unstandardized
    std::vector<int> labels;      // class index
    std::vector<float> targets;   // [rows, 2]: gain, tone (-1 when absent)
    std::vector<Split> splits;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const float> row(std::size_t i) const { return {features.data() + i * kFeatureSize, kFeatureSize}; }
    std::vector<std::size_t> rows(Split split) const;
};

// Reads each record's wav, then its cached features (computing and caching
// any that are missing).
FeatureSet load_feature_set(const DatasetManifest& manifest, const std::filesystem::path& dir);

// Targets as the estimation heads see them.
std::array<float, 2> settings_target(const EffectSettings& settings);

// Per-mel-band mean and standard deviation over every frame of the given rows.
Standardizer fit_standardizer(const FeatureSet& data, std::span<const std::size_t> rows);

struct TrainConfig {
    Variant variant = Variant::FxNet;
    int epochs = 100;
    int patience = 15;  // <= 0 disables early stopping
    std::size_t batch_size = 100;
    double lr = 0.001;
    std::uint64_t seed = 0;
    double settings_weight = 1.0;  // MultiNet: CE + weight * MSE
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_metric = 0.0;
    bool improved = false;
};

struct TrainResult {
    std::unique_ptr<Network> net;  // best-validation state
    CheckpointMeta meta;
    std::vector<EpochLog> log;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const TrainConfig& config, const FeatureSet& data, const EpochCallback& on_epoch = {});

// Tab-separated, fixed precision, identical for identical runs.
std::string training_log_text(const std::vector<EpochLog>& log);

struct Predictions {
    std::vector<int> classes;          // argmax of the class head
    std::vector<float> probabilities;  // [rows, classes] softmax
    std::vector<float> settings;       // [rows, 2]
};

// Inference in eval mode. `conditioning` supplies one class id per row for
// SetNetCond and is ignored otherwise.
Predictions predict(Network& net, const Standardizer& standardizer, const FeatureSet& data,
                    std::span<const std::size_t> rows, std::span<const int> conditioning = {},
                    std::size_t batch_size = 100);

// Classification accuracy, settings accuracy, or their mean, per variant.
double validation_metric(Variant variant, const Predictions& p, const FeatureSet& data,
                         std::span<const std::size_t> rows);

}  // namespace fxlab

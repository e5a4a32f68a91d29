#pragma once

#include "fxlab/audio.hpp"
#include "fxlab/checkpoint.hpp"
#include "fxlab/effects.hpp"
#include "fxlab/features.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace fxlab {

// 44.1 kHz, at least two seconds; longer clips keep their middle two seconds.
AudioBuffer center_crop(const AudioBuffer& audio);

// Tone estimates below this decode as "no tone control".
inline constexpr float kAbsentToneThreshold = -0.5f;

struct Estimate {
    float gain = 0.0f;
    std::optional<float> tone;
};

// Loaded checkpoint plus the feature checks; one clip at a time.
class Model {
public:
    explicit Model(LoadedModel loaded);
    static Model load(const std::filesystem::path& path);

    const CheckpointMeta& meta() const noexcept { return loaded_.meta; }

    // Softmax over the 13 classes, in class order.
    std::vector<double> classify(const AudioBuffer& audio);
    // (class, probability) ranked from most to least likely.
    std::vector<std::pair<EffectId, double>> ranked(const AudioBuffer& audio);
    // SetNetCond needs `effect`; other variants ignore it.
    Estimate estimate(const AudioBuffer& audio, std::optional<EffectId> effect = std::nullopt);

private:
    Tensor input(const AudioBuffer& audio) const;

    LoadedModel loaded_;
};

}  // namespace fxlab

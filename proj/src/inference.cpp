#include "fxlab/inference.hpp"

#include "fxlab/error.hpp"
#include "fxlab/evaluation.hpp"
#include "fxlab/losses.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fxlab {

AudioBuffer center_crop(const AudioBuffer& audio) {
    if (audio.sample_rate != kSampleRate)
        throw Error(ErrorKind::Io, "sample rate " + std::to_string(audio.sample_rate) + " Hz, expected " +
                                       std::to_string(kSampleRate));
    if (audio.size() < kClipSamples)
        throw Error(ErrorKind::TooShort,
                    std::to_string(audio.size()) + " samples, need " + std::to_string(kClipSamples));
    const auto off = std::ptrdiff_t((audio.size() - kClipSamples) / 2);
    AudioBuffer out;
    out.sample_rate = audio.sample_rate;
    out.samples.assign(audio.samples.begin() + off, audio.samples.begin() + off + std::ptrdiff_t(kClipSamples));
    return out;
}

Model::Model(LoadedModel loaded) : loaded_(std::move(loaded)) { require_feature_checksum(loaded_.meta); }

Model Model::load(const std::filesystem::path& path) { return Model(load_checkpoint(path)); }

Tensor Model::input(const AudioBuffer& audio) const {
    const auto m = featurize(center_crop(audio));
    Tensor x({1, 1, kFeatureFrames, kMelBands}, m.values);
    loaded_.meta.standardizer.apply(x.values(), kMelBands);
    return x;
}

std::vector<double> Model::classify(const AudioBuffer& audio) {
    const Variant v = loaded_.meta.config.variant;
    if (!has_class_head(v))
        throw Error(ErrorKind::Usage, "checkpoint is a " + std::string(to_string(v)) + " model without a class head");
    const auto out = loaded_.net->forward(input(audio), {}, false);
    return softmax_row(out.logits.values());
}

std::vector<std::pair<EffectId, double>> Model::ranked(const AudioBuffer& audio) {
    const auto probs = classify(audio);
    std::vector<std::pair<EffectId, double>> r;
    for (std::size_t i = 0; i < probs.size(); ++i) r.emplace_back(effect_from_index(int(i)), probs[i]);
    std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return r;
}

Estimate Model::estimate(const AudioBuffer& audio, std::optional<EffectId> effect) {
    const Variant v = loaded_.meta.config.variant;
    if (!has_settings_head(v)) throw Error(ErrorKind::Usage, "checkpoint has no settings head");
    std::vector<int> ids;
    if (v == Variant::SetNetCond) {
        if (!effect) throw Error(ErrorKind::Usage, "setnetcond needs the effect class");
        ids.push_back(class_index(*effect));
    }
    const auto out = loaded_.net->forward(input(audio), ids, false);
    Estimate e;
    e.gain = std::clamp(out.settings[0], 0.0f, 1.0f);
    if (out.settings[1] >= kAbsentToneThreshold) e.tone = std::clamp(out.settings[1], 0.0f, 1.0f);
    return e;
}

}  // namespace fxlab

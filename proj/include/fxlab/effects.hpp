#pragma once

#include "fxlab/audio.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxlab {

// The 13 modelled pedals. Order is the class index used by the networks.
enum class EffectId : std::uint8_t { E808, TS9, BD2, OD1, SD1, DS1, RAT, DPL, FFC, BMF, MGS, RBM, VTB };

inline constexpr std::size_t kNumEffects = 13;

inline constexpr std::array<EffectId, kNumEffects> kAllEffects = {
    EffectId::E808, EffectId::TS9, EffectId::BD2, EffectId::OD1, EffectId::SD1,
    EffectId::DS1,  EffectId::RAT, EffectId::DPL, EffectId::FFC, EffectId::BMF,
    EffectId::MGS,  EffectId::RBM, EffectId::VTB,
};

std::string_view to_string(EffectId id) noexcept;
std::optional<EffectId> parse_effect(std::string_view name) noexcept;
inline int class_index(EffectId id) noexcept { return static_cast<int>(id); }
EffectId effect_from_index(int index);

struct EffectSettings {
    float level = 1.0f;
    float gain = 0.0f;
    std::optional<float> tone;

    friend bool operator==(const EffectSettings&, const EffectSettings&) = default;
};

enum class Waveshaper { SoftClip, AsymmetricSoftClip, CubicSoftClip, HardClip, SoftKnee, BiasedSaturator, CascadedSoftClip };
enum class PreFilterType { Highpass, MidEmphasis };
enum class ToneTopology { None, FirstOrderLowpass, ShelvingPlusLowpass, MidScoopTilt };

std::string_view to_string(Waveshaper w) noexcept;
std::string_view to_string(PreFilterType p) noexcept;
std::string_view to_string(ToneTopology t) noexcept;

struct PreFilter {
    PreFilterType type = PreFilterType::Highpass;
    double corner_hz = 80.0;
    // MidEmphasis only: share of the unfiltered signal added to the highpassed path.
    double dry_mix = 0.0;

    friend bool operator==(const PreFilter&, const PreFilter&) = default;
};

struct EffectDescriptor {
    EffectId id{};
    Waveshaper waveshaper = Waveshaper::SoftClip;
    // Positive clip threshold relative to the negative one (AsymmetricSoftClip).
    double asymmetry = 1.0;
    // Knee exponent p of x / (1 + |x|^p)^(1/p) (SoftKnee); smaller is softer.
    double knee = 2.0;
    // Operating-point offset of the BiasedSaturator.
    double bias = 0.0;
    // Fixed drive into the second stage of CascadedSoftClip.
    double stage2_gain_db = 0.0;
    PreFilter pre_filter;
    // gain in [0,1] maps linearly in dB onto [gain_min_db, gain_max_db].
    double gain_min_db = 0.0;
    double gain_max_db = 40.0;
    ToneTopology tone_topology = ToneTopology::None;
    double shelf_corner_hz = 0.0;
    double shelf_max_db = 0.0;
    double tilt_low_hz = 0.0;
    double tilt_high_hz = 0.0;
    double scoop_db = 0.0;
    // Post-clip lowpass that does not depend on any control; 0 disables it.
    double fixed_lowpass_hz = 0.0;
    // Downward expander threshold on the pre-filtered input envelope; 0 disables it.
    double gate_threshold = 0.0;
    // Output gain law: post_trim_db - trim_taper_db * (1 - gain)^2.
    double post_trim_db = -1.0;
    double trim_taper_db = 0.0;
    std::vector<float> gain_grid;
    bool has_tone = true;

    // Every field except the id.
    bool same_model(const EffectDescriptor& other) const;
};

inline constexpr std::array<float, 5> kToneGrid = {0.0f, 0.2f, 0.5f, 0.8f, 1.0f};
inline constexpr double kToneLowpassMinHz = 500.0;
inline constexpr double kToneLowpassMaxHz = 10000.0;

const EffectDescriptor& descriptor(EffectId id);

std::vector<std::string_view> control_inventory(EffectId id);

// Gain-major, then tone; level fixed at 1.0.
std::vector<EffectSettings> discrete_grid(EffectId id);

struct ControlRange {
    float min = 0.0f;
    float max = 1.0f;
};
ControlRange gain_range(EffectId id);

// Throws InvalidSettings when the tone presence does not match the effect or a
// control lies outside [0,1].
void validate_settings(EffectId id, const EffectSettings& settings);

AudioBuffer process(const AudioBuffer& audio, EffectId id, const EffectSettings& settings);

// Pre-filter, drive and waveshaper only: the signal before gating, tone and trim.
std::vector<double> drive_stage(std::span<const float> audio, int sample_rate, EffectId id, float gain);

// True when the waveshaper is an odd function (symmetric clipping).
bool symmetric_clip(EffectId id);

// One "key=value ..." line per effect, stable across runs.
std::string bank_config_text();
// CRC-32 of bank_config_text(), as 8 lowercase hex digits.
std::string bank_config_hash();

}  // namespace fxlab

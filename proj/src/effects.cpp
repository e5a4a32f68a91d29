#include "fxlab/effects.hpp"

#include "fxlab/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace fxlab {

namespace {

constexpr std::array<std::string_view, kNumEffects> kNames = {
    "808", "TS9", "BD2", "OD1", "SD1", "DS1", "RAT", "DPL", "FFC", "BMF", "MGS", "RBM", "VTB",
};

const std::vector<float> kStandardGains = {0.2f, 0.5f, 0.8f, 1.0f};

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

// First-order section y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1], bilinear with prewarping.
struct FirstOrder {
    double b0 = 1.0, b1 = 0.0, a1 = 0.0;
    double x1 = 0.0, y1 = 0.0;

    static double warp(double hz, int fs) {
        const double f = std::min(hz, 0.49 * fs);
        return std::tan(std::numbers::pi * f / fs);
    }

    static FirstOrder lowpass(double hz, int fs) {
        const double k = warp(hz, fs);
        return {k / (1 + k), k / (1 + k), (k - 1) / (k + 1)};
    }

    static FirstOrder highpass(double hz, int fs) {
        const double k = warp(hz, fs);
        return {1 / (1 + k), -1 / (1 + k), (k - 1) / (k + 1)};
    }

    // (g s + w) / (s + w): unity below the corner, gain g above it.
    static FirstOrder high_shelf(double hz, double gain, int fs) {
        const double k = warp(hz, fs);
        return {(gain + k) / (1 + k), (k - gain) / (1 + k), (k - 1) / (k + 1)};
    }

    double operator()(double x) {
        const double y = b0 * x + b1 * x1 - a1 * y1;
        x1 = x;
        y1 = y;
        return y;
    }

    void run(std::vector<double>& v) {
        for (double& s : v) s = (*this)(s);
    }
};

double tone_lowpass_hz(double tone) {
    return kToneLowpassMinHz * std::pow(kToneLowpassMaxHz / kToneLowpassMinHz, tone);
}

std::vector<EffectDescriptor> make_bank() {
    std::vector<EffectDescriptor> bank;

    EffectDescriptor screamer;
    screamer.waveshaper = Waveshaper::SoftClip;
    screamer.pre_filter = {PreFilterType::MidEmphasis, 720.0, 0.3};
    screamer.tone_topology = ToneTopology::FirstOrderLowpass;
    screamer.gain_grid = kStandardGains;

    auto e808 = screamer;
    e808.id = EffectId::E808;
    auto ts9 = screamer;
    ts9.id = EffectId::TS9;

    EffectDescriptor bd2;
    bd2.id = EffectId::BD2;
    bd2.waveshaper = Waveshaper::CubicSoftClip;
    bd2.pre_filter = {PreFilterType::Highpass, 120.0, 0.0};
    bd2.tone_topology = ToneTopology::ShelvingPlusLowpass;
    bd2.shelf_corner_hz = 2500.0;
    bd2.shelf_max_db = 9.0;
    bd2.fixed_lowpass_hz = 8000.0;
    bd2.gain_grid = kStandardGains;

    // OD1 and SD1 share the asymmetric clipping stage.
    EffectDescriptor asym = screamer;
    asym.waveshaper = Waveshaper::AsymmetricSoftClip;
    asym.asymmetry = 1.15;

    auto od1 = asym;
    od1.id = EffectId::OD1;
    od1.tone_topology = ToneTopology::None;
    od1.fixed_lowpass_hz = 3000.0;
    od1.has_tone = false;

    auto sd1 = asym;
    sd1.id = EffectId::SD1;
    sd1.tone_topology = ToneTopology::ShelvingPlusLowpass;
    sd1.shelf_corner_hz = 1500.0;
    sd1.shelf_max_db = 12.0;
    sd1.fixed_lowpass_hz = 5000.0;

    EffectDescriptor ds1;
    ds1.id = EffectId::DS1;
    ds1.waveshaper = Waveshaper::HardClip;
    ds1.pre_filter = {PreFilterType::Highpass, 250.0, 0.0};
    ds1.tone_topology = ToneTopology::MidScoopTilt;
    ds1.tilt_low_hz = 700.0;
    ds1.tilt_high_hz = 2000.0;
    ds1.scoop_db = 4.0;
    ds1.gain_grid = kStandardGains;

    // RAT and DPL: same maximum gain, silicon hard clip vs germanium soft knee.
    EffectDescriptor rat;
    rat.id = EffectId::RAT;
    rat.waveshaper = Waveshaper::HardClip;
    rat.pre_filter = {PreFilterType::Highpass, 60.0, 0.0};
    rat.gain_max_db = 45.0;
    rat.tone_topology = ToneTopology::FirstOrderLowpass;
    rat.gain_grid = kStandardGains;

    auto dpl = rat;
    dpl.id = EffectId::DPL;
    dpl.waveshaper = Waveshaper::SoftKnee;
    dpl.knee = 1.5;
    dpl.tone_topology = ToneTopology::None;
    dpl.fixed_lowpass_hz = 4500.0;
    dpl.has_tone = false;

    EffectDescriptor ffc;
    ffc.id = EffectId::FFC;
    ffc.waveshaper = Waveshaper::BiasedSaturator;
    ffc.bias = 0.35;
    ffc.pre_filter = {PreFilterType::Highpass, 80.0, 0.0};
    ffc.gain_min_db = -20.0;
    ffc.gain_max_db = 35.0;
    ffc.tone_topology = ToneTopology::None;
    ffc.trim_taper_db = 25.0;
    ffc.gain_grid = {0.0f, 0.2f, 0.5f, 0.8f, 1.0f};
    ffc.has_tone = false;

    EffectDescriptor muff;
    muff.waveshaper = Waveshaper::CascadedSoftClip;
    muff.stage2_gain_db = 12.0;
    muff.pre_filter = {PreFilterType::Highpass, 100.0, 0.0};
    muff.tone_topology = ToneTopology::MidScoopTilt;
    muff.tilt_low_hz = 400.0;
    muff.tilt_high_hz = 1200.0;
    muff.gain_grid = kStandardGains;

    auto bmf = muff;
    bmf.id = EffectId::BMF;
    bmf.scoop_db = 6.0;
    auto rbm = muff;
    rbm.id = EffectId::RBM;
    rbm.scoop_db = 9.0;

    // Identical to the 808 except for the emphasis corner.
    auto mgs = screamer;
    mgs.id = EffectId::MGS;
    mgs.pre_filter.corner_hz = 500.0;

    EffectDescriptor vtb;
    vtb.id = EffectId::VTB;
    vtb.waveshaper = Waveshaper::BiasedSaturator;
    vtb.bias = 0.6;
    vtb.pre_filter = {PreFilterType::Highpass, 250.0, 0.0};
    vtb.tone_topology = ToneTopology::None;
    vtb.gate_threshold = 0.02;
    vtb.gain_grid = {0.1f, 0.2f, 0.5f, 0.8f, 1.0f};
    vtb.has_tone = false;

    bank = {e808, ts9, bd2, od1, sd1, ds1, rat, dpl, ffc, bmf, mgs, rbm, vtb};
    return bank;
}

const std::vector<EffectDescriptor>& bank() {
    static const std::vector<EffectDescriptor> b = make_bank();
    return b;
}

double shape(const EffectDescriptor& d, double u) {
    switch (d.waveshaper) {
    case Waveshaper::SoftClip: return std::tanh(u);
    case Waveshaper::AsymmetricSoftClip: return u >= 0 ? d.asymmetry * std::tanh(u / d.asymmetry) : std::tanh(u);
    case Waveshaper::CubicSoftClip: {
        const double c = std::clamp(u, -1.0, 1.0);
        return 1.5 * (c - c * c * c / 3.0);
    }
    case Waveshaper::HardClip: return std::clamp(u, -1.0, 1.0);
    case Waveshaper::SoftKnee: return u / std::pow(1.0 + std::pow(std::abs(u), d.knee), 1.0 / d.knee);
    case Waveshaper::BiasedSaturator: return std::tanh(u + d.bias) - std::tanh(d.bias);
    case Waveshaper::CascadedSoftClip: {
        const double k = db_to_amp(d.stage2_gain_db);
        return std::tanh(k * std::tanh(u)) / std::tanh(k);
    }
    }
    return u;
}

std::vector<double> pre_filtered(std::span<const float> audio, int fs, const EffectDescriptor& d) {
    std::vector<double> out(audio.begin(), audio.end());
    auto hp = FirstOrder::highpass(d.pre_filter.corner_hz, fs);
    if (d.pre_filter.type == PreFilterType::MidEmphasis) {
        for (double& s : out) s = d.pre_filter.dry_mix * s + hp(s);
    } else {
        hp.run(out);
    }
    return out;
}

void apply_tone(std::vector<double>& v, int fs, const EffectDescriptor& d, double tone) {
    switch (d.tone_topology) {
    case ToneTopology::None: break;
    case ToneTopology::FirstOrderLowpass: FirstOrder::lowpass(tone_lowpass_hz(tone), fs).run(v); break;
    case ToneTopology::ShelvingPlusLowpass:
        FirstOrder::high_shelf(d.shelf_corner_hz, db_to_amp(tone * d.shelf_max_db), fs).run(v);
        break;
    case ToneTopology::MidScoopTilt: {
        auto lp = FirstOrder::lowpass(d.tilt_low_hz, fs);
        auto hp = FirstOrder::highpass(d.tilt_high_hz, fs);
        // Band between the tilt corners, removed in proportion to the scoop depth.
        auto band_hp = FirstOrder::highpass(d.tilt_low_hz, fs);
        auto band_lp = FirstOrder::lowpass(d.tilt_high_hz, fs);
        const double cut = 1.0 - db_to_amp(-d.scoop_db);
        for (double& s : v) {
            const double tilt = (1.0 - tone) * lp(s) + tone * hp(s);
            s = tilt - cut * band_lp(band_hp(tilt));
        }
        break;
    }
    }
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string_view to_string(EffectId id) noexcept { return kNames[static_cast<std::size_t>(id)]; }

std::optional<EffectId> parse_effect(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<EffectId>(i);
    return std::nullopt;
}

EffectId effect_from_index(int index) {
    if (index < 0 || index >= static_cast<int>(kNumEffects))
        throw Error(ErrorKind::Domain, "effect class index out of range: " + std::to_string(index));
    return static_cast<EffectId>(index);
}

std::string_view to_string(Waveshaper w) noexcept {
    switch (w) {
    case Waveshaper::SoftClip: return "soft_clip";
    case Waveshaper::AsymmetricSoftClip: return "asymmetric_soft_clip";
    case Waveshaper::CubicSoftClip: return "cubic_soft_clip";
    case Waveshaper::HardClip: return "hard_clip";
    case Waveshaper::SoftKnee: return "soft_knee";
    case Waveshaper::BiasedSaturator: return "biased_saturator";
    case Waveshaper::CascadedSoftClip: return "cascaded_soft_clip";
    }
    return "?";
}

std::string_view to_string(PreFilterType p) noexcept {
    return p == PreFilterType::Highpass ? "highpass" : "mid_emphasis";
}

std::string_view to_string(ToneTopology t) noexcept {
    switch (t) {
    case ToneTopology::None: return "none";
    case ToneTopology::FirstOrderLowpass: return "first_order_lowpass";
    case ToneTopology::ShelvingPlusLowpass: return "shelving_plus_lowpass";
    case ToneTopology::MidScoopTilt: return "mid_scoop_tilt";
    }
    return "?";
}

bool EffectDescriptor::same_model(const EffectDescriptor& o) const {
    return waveshaper == o.waveshaper && asymmetry == o.asymmetry && knee == o.knee && bias == o.bias &&
           stage2_gain_db == o.stage2_gain_db && pre_filter == o.pre_filter && gain_min_db == o.gain_min_db &&
           gain_max_db == o.gain_max_db && tone_topology == o.tone_topology &&
           shelf_corner_hz == o.shelf_corner_hz && shelf_max_db == o.shelf_max_db &&
           tilt_low_hz == o.tilt_low_hz && tilt_high_hz == o.tilt_high_hz && scoop_db == o.scoop_db &&
           fixed_lowpass_hz == o.fixed_lowpass_hz && gate_threshold == o.gate_threshold &&
           post_trim_db == o.post_trim_db && trim_taper_db == o.trim_taper_db && gain_grid == o.gain_grid &&
           has_tone == o.has_tone;
}

const EffectDescriptor& descriptor(EffectId id) { return bank().at(static_cast<std::size_t>(id)); }

std::vector<std::string_view> control_inventory(EffectId id) {
    if (descriptor(id).has_tone) return {"level", "gain", "tone"};
    return {"level", "gain"};
}

std::vector<EffectSettings> discrete_grid(EffectId id) {
    const auto& d = descriptor(id);
    std::vector<EffectSettings> grid;
    for (float g : d.gain_grid) {
        if (!d.has_tone) {
            grid.push_back({1.0f, g, std::nullopt});
            continue;
        }
        for (float t : kToneGrid) grid.push_back({1.0f, g, t});
    }
    return grid;
}

ControlRange gain_range(EffectId id) {
    const auto& g = descriptor(id).gain_grid;
    return {g.front(), g.back()};
}

void validate_settings(EffectId id, const EffectSettings& s) {
    const auto& d = descriptor(id);
    const std::string name(to_string(id));
    if (d.has_tone && !s.tone) throw Error(ErrorKind::InvalidSettings, name + " requires a tone value");
    if (!d.has_tone && s.tone) throw Error(ErrorKind::InvalidSettings, name + " has no tone control");
    auto in_unit = [](float v) { return v >= 0.0f && v <= 1.0f; };
    if (!in_unit(s.level) || !in_unit(s.gain) || (s.tone && !in_unit(*s.tone)))
        throw Error(ErrorKind::InvalidSettings, name + " controls must lie in [0,1]");
}

bool symmetric_clip(EffectId id) {
    switch (descriptor(id).waveshaper) {
    case Waveshaper::SoftClip:
    case Waveshaper::CubicSoftClip:
    case Waveshaper::HardClip:
    case Waveshaper::SoftKnee:
    case Waveshaper::CascadedSoftClip: return true;
    default: return false;
    }
}

std::vector<double> drive_stage(std::span<const float> audio, int sample_rate, EffectId id, float gain) {
    const auto& d = descriptor(id);
    auto v = pre_filtered(audio, sample_rate, d);
    const double drive = db_to_amp(d.gain_min_db + double(gain) * (d.gain_max_db - d.gain_min_db));
    for (double& s : v) s = shape(d, drive * s);
    return v;
}

AudioBuffer process(const AudioBuffer& audio, EffectId id, const EffectSettings& settings) {
    validate_settings(id, settings);
    if (audio.empty()) throw Error(ErrorKind::EmptyInput, "cannot process an empty buffer");
    const auto& d = descriptor(id);
    const int fs = audio.sample_rate;

    std::vector<double> v = drive_stage(audio.view(), fs, id, settings.gain);

    if (d.gate_threshold > 0.0) {
        // Envelope of the pre-filtered input; 1:2 downward expansion below threshold.
        const auto pre = pre_filtered(audio.view(), fs, d);
        const double attack = std::exp(-1.0 / (0.005 * fs));
        const double release = std::exp(-1.0 / (0.050 * fs));
        double env = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double a = std::abs(pre[i]);
            const double c = a > env ? attack : release;
            env = c * env + (1.0 - c) * a;
            v[i] *= std::min(1.0, env / d.gate_threshold);
        }
    }

    if (d.waveshaper == Waveshaper::BiasedSaturator) FirstOrder::highpass(20.0, fs).run(v);

    apply_tone(v, fs, d, settings.tone.value_or(0.0f));
    if (d.fixed_lowpass_hz > 0.0) FirstOrder::lowpass(d.fixed_lowpass_hz, fs).run(v);

    const double one_minus_gain = 1.0 - double(settings.gain);
    const double trim_db = d.post_trim_db - d.trim_taper_db * one_minus_gain * one_minus_gain;
    const double level_db = -40.0 * (1.0 - double(settings.level));
    const double out_gain = db_to_amp(trim_db + level_db);

    AudioBuffer out;
    out.sample_rate = fs;
    out.samples.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.samples[i] = static_cast<float>(std::clamp(out_gain * v[i], -1.0, 1.0));
    return out;
}

std::string bank_config_text() {
    std::ostringstream os;
    for (const auto& d : bank()) {
        os << "id=" << to_string(d.id) << " family=" << to_string(d.waveshaper)
           << " asymmetry=" << format_number(d.asymmetry) << " knee=" << format_number(d.knee)
           << " bias=" << format_number(d.bias) << " stage2_gain_db=" << format_number(d.stage2_gain_db)
           << " pre=" << to_string(d.pre_filter.type) << " pre_corner_hz=" << format_number(d.pre_filter.corner_hz)
           << " pre_dry_mix=" << format_number(d.pre_filter.dry_mix)
           << " gain_db=" << format_number(d.gain_min_db) << ":" << format_number(d.gain_max_db)
           << " tone=" << to_string(d.tone_topology) << " shelf_corner_hz=" << format_number(d.shelf_corner_hz)
           << " shelf_max_db=" << format_number(d.shelf_max_db) << " tilt_hz=" << format_number(d.tilt_low_hz)
           << ":" << format_number(d.tilt_high_hz) << " scoop_db=" << format_number(d.scoop_db)
           << " fixed_lowpass_hz=" << format_number(d.fixed_lowpass_hz)
           << " gate_threshold=" << format_number(d.gate_threshold)
           << " post_trim_db=" << format_number(d.post_trim_db) << " trim_taper_db=" << format_number(d.trim_taper_db)
           << " gain_grid=";
        for (std::size_t i = 0; i < d.gain_grid.size(); ++i)
            os << (i ? "," : "") << format_number(d.gain_grid[i]);
        os << " has_tone=" << (d.has_tone ? 1 : 0) << "\n";
    }
    os << "tone_lowpass_hz=" << format_number(kToneLowpassMinHz) << ":" << format_number(kToneLowpassMaxHz)
       << "\n";
    return os.str();
}

std::string bank_config_hash() {
    const std::string text = bank_config_text();
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

}  // namespace fxlab

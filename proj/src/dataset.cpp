#include "fxlab/dataset.hpp"

#include "fxlab/error.hpp"
#include "fxlab/features.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace fxlab {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t note_seed(const NoteSpec& n, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(n.midi_pitch));
    h = splitmix64(h ^ static_cast<std::uint64_t>(n.pluck_style));
    h = splitmix64(h ^ static_cast<std::uint64_t>(n.pickup));
    return splitmix64(h ^ static_cast<std::uint64_t>(n.guitar_variant));
}

// Settings round-trip through the manifest via their shortest decimal form.
double exact_decimal(float v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::strtod(std::string(buf, r.ptr).c_str(), nullptr);
}

struct Source {
    std::vector<NoteSpec> notes;
    Split split = Split::Train;
};

std::array<std::size_t, 3> split_counts(std::size_t n) {
    const std::size_t train = (8 * n + 5) / 10;
    const std::size_t valid = std::min(n - train, (n + 5) / 10);
    return {train, valid, n - train - valid};
}

std::vector<Split> assign_splits(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const auto counts = split_counts(n);
    std::vector<Split> splits(n);
    for (std::size_t r = 0; r < n; ++r) {
        const Split s = r < counts[0] ? Split::Train : r < counts[0] + counts[1] ? Split::Valid : Split::Test;
        splits[order[r]] = s;
    }
    return splits;
}

std::vector<Source> make_sources(std::span<const NoteSpec> notes, bool poly, std::size_t chords,
                                 std::mt19937_64& rng) {
    std::vector<Source> sources;
    const auto splits = assign_splits(notes.size(), rng);
    if (!poly) {
        for (std::size_t i = 0; i < notes.size(); ++i) sources.push_back({{notes[i]}, splits[i]});
        return sources;
    }
    const auto per_split = split_counts(chords);
    const std::array<Split, 3> order = {Split::Train, Split::Valid, Split::Test};
    std::size_t chord_index = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<NoteSpec> pool;
        for (std::size_t i = 0; i < notes.size(); ++i)
            if (splits[i] == order[s]) pool.push_back(notes[i]);
        for (std::size_t c = 0; c < per_split[s]; ++c, ++chord_index) {
            // Intervals, triads and four-note chords in rotation.
            const std::size_t want = 2 + chord_index % 3;
            std::vector<NoteSpec> shuffled = pool;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            std::vector<NoteSpec> chord;
            for (const auto& n : shuffled) {
                if (chord.size() == want) break;
                const bool clash = std::any_of(chord.begin(), chord.end(),
                                               [&](const NoteSpec& m) { return m.midi_pitch == n.midi_pitch; });
                if (!clash) chord.push_back(n);
            }
            if (chord.size() < 2) continue;
            std::sort(chord.begin(), chord.end(),
                      [](const NoteSpec& a, const NoteSpec& b) { return a.midi_pitch < b.midi_pitch; });
            sources.push_back({std::move(chord), order[s]});
        }
    }
    return sources;
}

Subset subset_for(bool poly, bool discrete) {
    if (discrete) return poly ? Subset::PolyDiscrete : Subset::MonoDiscrete;
    return poly ? Subset::PolyContinuous : Subset::MonoContinuous;
}

std::string audio_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "audio/%06zu.wav", index);
    return buf;
}

json note_json(const NoteSpec& n) {
    return json{{"midi", n.midi_pitch},
                {"pluck", to_string(n.pluck_style)},
                {"pickup", to_string(n.pickup)},
                {"variant", to_string(n.guitar_variant)}};
}

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values) {
    for (E v : values)
        if (to_string(v) == s) return v;
    throw Error(ErrorKind::Io, "bad manifest value: " + s);
}

NoteSpec note_from_json(const json& j) {
    NoteSpec n;
    n.midi_pitch = j.at("midi").get<int>();
    n.pluck_style = parse_enum(j.at("pluck").get<std::string>(),
                               std::array{PluckStyle::Soft, PluckStyle::Hard, PluckStyle::Muted});
    n.pickup = parse_enum(j.at("pickup").get<std::string>(), std::array{Pickup::Bridge, Pickup::Neck});
    n.guitar_variant = parse_enum(j.at("variant").get<std::string>(), std::array{GuitarVariant::A, GuitarVariant::B});
    return n;
}

}  // namespace

std::string_view to_string(PluckStyle s) noexcept {
    switch (s) {
    case PluckStyle::Soft: return "soft";
    case PluckStyle::Hard: return "hard";
    case PluckStyle::Muted: return "muted";
    }
    return "?";
}

std::string_view to_string(Pickup p) noexcept { return p == Pickup::Bridge ? "bridge" : "neck"; }
std::string_view to_string(GuitarVariant v) noexcept { return v == GuitarVariant::A ? "A" : "B"; }

std::string note_key(const NoteSpec& n) {
    return std::to_string(n.midi_pitch) + "-" + std::string(to_string(n.pluck_style)) + "-" +
           std::string(to_string(n.pickup)) + "-" + std::string(to_string(n.guitar_variant));
}

double midi_to_hz(int midi_pitch) { return 440.0 * std::pow(2.0, (midi_pitch - 69) / 12.0); }

AudioBuffer synth_note(const NoteSpec& spec, std::uint64_t seed, double duration_s, int sample_rate) {
    if (spec.midi_pitch < kMinMidi || spec.midi_pitch > kMaxMidi)
        throw Error(ErrorKind::Domain, "midi pitch " + std::to_string(spec.midi_pitch) + " outside [40, 76]");
    const auto length = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    const double f0 = midi_to_hz(spec.midi_pitch);
    const double period = sample_rate / f0;

    // Loop delay = integer line + 0.5 (averaging filter) + allpass fraction.
    const auto line = static_cast<std::size_t>(std::floor(period - 0.5 - 0.1));
    const double frac = period - 0.5 - double(line);
    const double ap = (1.0 - frac) / (1.0 + frac);

    double loss = spec.guitar_variant == GuitarVariant::A ? 0.9965 : 0.9945;
    double excitation_smoothing = 0.0;
    switch (spec.pluck_style) {
    case PluckStyle::Soft: excitation_smoothing = 0.6; break;
    case PluckStyle::Hard: excitation_smoothing = 0.1; break;
    case PluckStyle::Muted:
        excitation_smoothing = 0.7;
        loss -= 0.02;
        break;
    }
    if (spec.guitar_variant == GuitarVariant::B) excitation_smoothing *= 0.5;

    std::mt19937_64 rng(note_seed(spec, seed));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> burst(line);
    double lp = 0.0;
    for (double& b : burst) {
        lp = excitation_smoothing * lp + (1.0 - excitation_smoothing) * uni(rng);
        b = lp;
    }
    double mean = 0.0;
    for (double b : burst) mean += b;
    mean /= double(std::max<std::size_t>(1, burst.size()));
    for (double& b : burst) b -= mean;

    std::vector<double> delay(burst);
    std::size_t pos = 0;
    double prev = 0.0, ap_x1 = 0.0, ap_y1 = 0.0;
    std::vector<double> string_out(length);
    for (std::size_t n = 0; n < length; ++n) {
        const double x = delay[pos];
        string_out[n] = x;
        const double avg = loss * 0.5 * (x + prev);
        prev = x;
        const double y = ap * avg + ap_x1 - ap * ap_y1;
        ap_x1 = avg;
        ap_y1 = y;
        delay[pos] = y;
        pos = (pos + 1) % line;
    }

    // Pickup position comb: bridge near the saddle is brighter than neck.
    const double position = spec.pickup == Pickup::Bridge ? 0.12 : 0.28;
    const auto comb = static_cast<std::size_t>(std::lround(position * period));
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.resize(length);
    for (std::size_t n = 0; n < length; ++n) {
        const double delayed = n >= comb ? string_out[n - comb] : 0.0;
        out.samples[n] = static_cast<float>(string_out[n] - 0.5 * delayed);
    }
    return out;
}

AudioBuffer mix_poly(std::span<const AudioBuffer> notes) {
    if (notes.size() < 2 || notes.size() > 4)
        throw Error(ErrorKind::Arity, "polyphonic mix needs 2 to 4 notes, got " + std::to_string(notes.size()));
    for (const auto& n : notes)
        if (n.size() != notes[0].size() || n.sample_rate != notes[0].sample_rate)
            throw Error(ErrorKind::Arity, "polyphonic mix needs equal lengths and sample rates");
    AudioBuffer out;
    out.sample_rate = notes[0].sample_rate;
    out.samples.assign(notes[0].size(), 0.0f);
    const double scale = 1.0 / double(notes.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (const auto& n : notes) acc += n.samples[i];
        out.samples[i] = static_cast<float>(acc * scale);
    }
    if (peak(out.view()) > 1.0f) throw Error(ErrorKind::Numerical, "mixed peak exceeds full scale");
    return out;
}

AudioBuffer normalize_peak(const AudioBuffer& audio, double target_dbfs) {
    const float p = peak(audio.view());
    if (p == 0.0f) throw Error(ErrorKind::CannotNormalize, "cannot normalize a silent buffer");
    const double target = std::pow(10.0, target_dbfs / 20.0);
    const double scale = target / double(p);
    AudioBuffer out;
    out.sample_rate = audio.sample_rate;
    out.samples.resize(audio.size());
    for (std::size_t i = 0; i < audio.size(); ++i) out.samples[i] = static_cast<float>(double(audio.samples[i]) * scale);
    return out;
}

std::string_view to_string(Subset s) noexcept {
    switch (s) {
    case Subset::MonoDiscrete: return "mono-discrete";
    case Subset::MonoContinuous: return "mono-continuous";
    case Subset::PolyDiscrete: return "poly-discrete";
    case Subset::PolyContinuous: return "poly-continuous";
    }
    return "?";
}

std::string_view to_string(Split s) noexcept {
    switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
    }
    return "?";
}

std::optional<Subset> parse_subset(std::string_view name) noexcept {
    for (auto s : {Subset::MonoDiscrete, Subset::MonoContinuous, Subset::PolyDiscrete, Subset::PolyContinuous})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view name) noexcept {
    for (auto s : {Split::Train, Split::Valid, Split::Test})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

bool is_poly(Subset s) noexcept { return s == Subset::PolyDiscrete || s == Subset::PolyContinuous; }
bool is_discrete(Subset s) noexcept { return s == Subset::MonoDiscrete || s == Subset::PolyDiscrete; }

PoolOptions desk_pool() { return {}; }

PoolOptions paper_pool() {
    PoolOptions p;
    p.pitches = kMaxMidi - kMinMidi + 1;
    p.styles = {PluckStyle::Soft, PluckStyle::Hard, PluckStyle::Muted};
    p.all_pickups = true;
    return p;
}

std::vector<NoteSpec> note_pool(const PoolOptions& o) {
    std::vector<NoteSpec> notes;
    const int span = kMaxMidi - kMinMidi;
    for (std::size_t i = 0; i < o.pitches; ++i) {
        const int midi = o.pitches == 1 ? kMinMidi
                                        : kMinMidi + static_cast<int>(std::lround(double(i) * span / double(o.pitches)));
        for (auto style : o.styles)
            for (auto variant : o.variants) {
                if (o.all_pickups) {
                    for (auto pickup : o.pickups) notes.push_back({midi, style, pickup, variant});
                } else {
                    const auto pickup = o.pickups[(i + static_cast<std::size_t>(style)) % o.pickups.size()];
                    notes.push_back({midi, style, pickup, variant});
                }
            }
    }
    return notes;
}

DatasetManifest build_discrete(std::span<const EffectId> effects, std::span<const NoteSpec> notes, bool poly,
                               std::uint64_t seed, const BuildOptions& options) {
    DatasetManifest m;
    m.seed = seed;
    m.bank_config_hash = bank_config_hash();
    m.subset = subset_for(poly, true);
    std::mt19937_64 rng(splitmix64(seed));
    const auto sources = make_sources(notes, poly, options.chords, rng);
    for (std::size_t s = 0; s < sources.size(); ++s)
        for (EffectId e : effects)
            for (const auto& settings : discrete_grid(e)) {
                SampleRecord r;
                r.audio_path = audio_name(m.records.size());
                r.effect = e;
                r.settings = settings;
                r.source = sources[s].notes;
                r.source_id = static_cast<int>(s);
                r.subset = m.subset;
                r.split = sources[s].split;
                m.records.push_back(std::move(r));
            }
    return m;
}

DatasetManifest build_continuous(std::span<const EffectId> effects, std::span<const NoteSpec> notes,
                                 std::size_t n_per_effect, bool poly, std::uint64_t seed,
                                 const BuildOptions& options) {
    if (n_per_effect < 1) throw Error(ErrorKind::Domain, "n_per_effect must be at least 1");
    DatasetManifest m;
    m.seed = seed;
    m.bank_config_hash = bank_config_hash();
    m.subset = subset_for(poly, false);
    std::mt19937_64 rng(splitmix64(seed));
    const auto sources = make_sources(notes, poly, options.chords, rng);
    if (sources.empty()) return m;
    std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (EffectId e : effects) {
        const auto range = gain_range(e);
        const bool tone = descriptor(e).has_tone;
        for (std::size_t i = 0; i < n_per_effect; ++i) {
            const std::size_t s = pick(rng);
            SampleRecord r;
            r.audio_path = audio_name(m.records.size());
            r.effect = e;
            r.settings.level = 1.0f;
            r.settings.gain = static_cast<float>(range.min + (range.max - range.min) * unit(rng));
            r.settings.gain = std::clamp(r.settings.gain, range.min, range.max);
            if (tone) r.settings.tone = std::clamp(static_cast<float>(unit(rng)), 0.0f, 1.0f);
            r.source = sources[s].notes;
            r.source_id = static_cast<int>(s);
            r.subset = m.subset;
            r.split = sources[s].split;
            m.records.push_back(std::move(r));
        }
    }
    return m;
}

AudioBuffer render_source(const SampleRecord& record, std::uint64_t seed) {
    if (record.source.empty()) throw Error(ErrorKind::EmptyInput, "record has no source notes");
    if (record.source.size() == 1) return normalize_peak(synth_note(record.source[0], seed));
    std::vector<AudioBuffer> notes;
    for (const auto& n : record.source) notes.push_back(normalize_peak(synth_note(n, seed)));
    return normalize_peak(mix_poly(notes));
}

AudioBuffer render_record(const SampleRecord& record, std::uint64_t seed) {
    return normalize_peak(process(render_source(record, seed), record.effect, record.settings));
}

unsigned default_workers() {
    if (const char* env = std::getenv("FXLAB_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void materialize(const DatasetManifest& manifest, const std::filesystem::path& dir, unsigned workers) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "audio", ec);
    const fs::path feature_dir = dir / "features" / feature_pipeline_checksum();
    fs::create_directories(feature_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

    // Clean sources once each, in source order.
    std::map<int, const SampleRecord*> first_use;
    for (const auto& r : manifest.records) first_use.emplace(r.source_id, &r);
    std::vector<int> source_ids;
    for (const auto& [id, _] : first_use) source_ids.push_back(id);
    std::map<int, AudioBuffer> clean;
    for (int id : source_ids) clean.emplace(id, AudioBuffer{});

    workers = std::max(1u, workers);
    auto run_parallel = [workers](std::size_t n, auto&& body) {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        for (unsigned w = 0; w < workers; ++w)
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) body(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    };

    run_parallel(source_ids.size(), [&](std::size_t i) {
        const int id = source_ids[i];
        clean.at(id) = render_source(*first_use.at(id), manifest.seed);
    });

    run_parallel(manifest.records.size(), [&](std::size_t i) {
        const auto& r = manifest.records[i];
        const auto processed = quantize_pcm16(normalize_peak(process(clean.at(r.source_id), r.effect, r.settings)));
        write_wav(dir / r.audio_path, processed);
        const auto blob = feature_dir / (audio_checksum(processed) + ".f32");
        if (!fs::exists(blob)) write_feature_blob(blob, featurize(processed));
    });

    write_manifest(manifest, dir / "manifest.jsonl");
}

std::string manifest_text(const DatasetManifest& m) {
    std::ostringstream os;
    os << json{{"format", "fxlab-manifest"},
               {"version", 1},
               {"subset", to_string(m.subset)},
               {"seed", m.seed},
               {"bank_config_hash", m.bank_config_hash},
               {"records", m.records.size()}}
              .dump()
       << "\n";
    for (const auto& r : m.records) {
        json src = json::array();
        for (const auto& n : r.source) src.push_back(note_json(n));
        json j{{"audio_path", r.audio_path},
               {"effect", to_string(r.effect)},
               {"level", exact_decimal(r.settings.level)},
               {"gain", exact_decimal(r.settings.gain)},
               {"tone", r.settings.tone ? json(exact_decimal(*r.settings.tone)) : json(nullptr)},
               {"subset", to_string(r.subset)},
               {"split", to_string(r.split)},
               {"source_id", r.source_id},
               {"source", std::move(src)}};
        os << j.dump() << "\n";
    }
    return os.str();
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write manifest " + path.string());
    f << manifest_text(m);
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::Io, "cannot open manifest " + path.string());
    DatasetManifest m;
    std::string line;
    if (!std::getline(f, line)) throw Error(ErrorKind::Io, "empty manifest " + path.string());
    try {
        const auto header = json::parse(line);
        if (header.value("format", "") != "fxlab-manifest") throw Error(ErrorKind::Io, "not an fxlab manifest");
        m.seed = header.at("seed").get<std::uint64_t>();
        m.bank_config_hash = header.at("bank_config_hash").get<std::string>();
        const auto subset = parse_subset(header.at("subset").get<std::string>());
        if (!subset) throw Error(ErrorKind::Io, "unknown subset in manifest header");
        m.subset = *subset;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            SampleRecord r;
            r.audio_path = j.at("audio_path").get<std::string>();
            const auto effect = parse_effect(j.at("effect").get<std::string>());
            const auto rs = parse_subset(j.at("subset").get<std::string>());
            const auto split = parse_split(j.at("split").get<std::string>());
            if (!effect || !rs || !split) throw Error(ErrorKind::Io, "bad record: " + line);
            r.effect = *effect;
            r.subset = *rs;
            r.split = *split;
            r.settings.level = j.at("level").get<float>();
            r.settings.gain = j.at("gain").get<float>();
            if (!j.at("tone").is_null()) r.settings.tone = j.at("tone").get<float>();
            r.source_id = j.at("source_id").get<int>();
            for (const auto& n : j.at("source")) r.source.push_back(note_from_json(n));
            m.records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, "malformed manifest " + path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace fxlab

#pragma once

#include "fxlab/audio.hpp"
#include "fxlab/effects.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxlab {

enum class PluckStyle { Soft, Hard, Muted };
enum class Pickup { Bridge, Neck };
enum class GuitarVariant { A, B };

inline constexpr int kMinMidi = 40;  // E2
inline constexpr int kMaxMidi = 76;  // E5

struct NoteSpec {
    int midi_pitch = 69;
    PluckStyle pluck_style = PluckStyle::Hard;
    Pickup pickup = Pickup::Bridge;
    GuitarVariant guitar_variant = GuitarVariant::A;

    friend bool operator==(const NoteSpec&, const NoteSpec&) = default;
};

std::string_view to_string(PluckStyle s) noexcept;
std::string_view to_string(Pickup p) noexcept;
std::string_view to_string(GuitarVariant v) noexcept;
// Compact identity such as "69-hard-bridge-A".
std::string note_key(const NoteSpec& note);

double midi_to_hz(int midi_pitch);

// Karplus-Strong plucked string with an allpass fractional-delay tuner.
// Deterministic in (spec, seed); the first sample is the onset.
AudioBuffer synth_note(const NoteSpec& spec, std::uint64_t seed, double duration_s = kClipSeconds,
                       int sample_rate = kSampleRate);

// Sample-wise mean of 2..4 equal-length buffers.
AudioBuffer mix_poly(std::span<const AudioBuffer> notes);

AudioBuffer normalize_peak(const AudioBuffer& audio, double target_dbfs = -6.0);

enum class Subset { MonoDiscrete, MonoContinuous, PolyDiscrete, PolyContinuous };
enum class Split { Train, Valid, Test };

std::string_view to_string(Subset s) noexcept;
std::string_view to_string(Split s) noexcept;
std::optional<Subset> parse_subset(std::string_view name) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;
bool is_poly(Subset s) noexcept;
bool is_discrete(Subset s) noexcept;

struct SampleRecord {
    std::string audio_path;  // relative to the manifest directory
    EffectId effect{};
    EffectSettings settings;
    std::vector<NoteSpec> source;
    int source_id = 0;  // index of the clean source within its manifest
    Subset subset = Subset::MonoDiscrete;
    Split split = Split::Train;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
    std::vector<SampleRecord> records;
    std::uint64_t seed = 0;
    std::string bank_config_hash;
    Subset subset = Subset::MonoDiscrete;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct PoolOptions {
    // Desk scale: 12 pitches x {soft, hard} x {A, B}.
    std::size_t pitches = 12;
    std::vector<PluckStyle> styles = {PluckStyle::Soft, PluckStyle::Hard};
    std::vector<Pickup> pickups = {Pickup::Bridge, Pickup::Neck};
    std::vector<GuitarVariant> variants = {GuitarVariant::A, GuitarVariant::B};
    // Pickup cycles with pitch instead of multiplying the pool when false.
    bool all_pickups = false;
};

PoolOptions desk_pool();
PoolOptions paper_pool();
std::vector<NoteSpec> note_pool(const PoolOptions& options);

struct BuildOptions {
    std::size_t chords = 60;  // polyphonic sources
    std::size_t continuous_per_effect = 500;
};

// Records for every (source x effect x grid point). Poly sources are mixed
// from notes of a single split, so no clean note crosses splits.
DatasetManifest build_discrete(std::span<const EffectId> effects, std::span<const NoteSpec> notes, bool poly,
                               std::uint64_t seed, const BuildOptions& options = {});

// n_per_effect records per effect with source and gain/tone drawn uniformly.
DatasetManifest build_continuous(std::span<const EffectId> effects, std::span<const NoteSpec> notes,
                                 std::size_t n_per_effect, bool poly, std::uint64_t seed,
                                 const BuildOptions& options = {});

// Renders every record (clean -> normalize -> process -> normalize) into
// dir/audio, writes the feature cache into dir/features/<pipeline checksum> and the manifest to
// dir/manifest.jsonl. Workers only change throughput, never the output.
void materialize(const DatasetManifest& manifest, const std::filesystem::path& dir, unsigned workers = 1);

// Clean source audio (normalized) for a record, as rendered by materialize.
AudioBuffer render_source(const SampleRecord& record, std::uint64_t seed);
AudioBuffer render_record(const SampleRecord& record, std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string manifest_text(const DatasetManifest& manifest);

// FXLAB_WORKERS, else hardware concurrency, at least 1.
unsigned default_workers();

}  // namespace fxlab

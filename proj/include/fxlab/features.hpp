#pragma once

#include "fxlab/audio.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fxlab {

inline constexpr std::size_t kWindowLength = 1024;
inline constexpr std::size_t kHopLength = 512;
inline constexpr std::size_t kNumBins = kWindowLength / 2 + 1;
inline constexpr std::size_t kMelBands = 128;
inline constexpr std::size_t kFeatureFrames = 87;
inline constexpr double kMelMaxHz = 22050.0;
// Audio in [-1,1] is rescaled to the 16-bit integer range before the transform.
inline constexpr double kPcmScale = 32768.0;

// Row-major frames x bins.
struct PowerGrid {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> values;

    double at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
};

// Row-major frames x 128, the network input.
struct FeatureMatrix {
    std::size_t frames = 0;
    std::size_t bands = kMelBands;
    std::vector<float> values;

    float at(std::size_t frame, std::size_t band) const { return values[frame * bands + band]; }
};

// Hann-windowed |FFT|^2, window 1024, hop 512, no padding.
PowerGrid stft_power(const AudioBuffer& audio);

// Stride-2 mean pooling over frame pairs, then the last frame repeated until
// the grid has kFeatureFrames rows. 171 raw frames -> 86 pooled -> 87.
PowerGrid pool_frames(const PowerGrid& grid);

class MelFilterbank {
public:
    MelFilterbank(int sample_rate = kSampleRate, std::size_t bands = kMelBands, double min_hz = 0.0,
                  double max_hz = kMelMaxHz, std::size_t fft_length = kWindowLength);

    std::size_t bands() const noexcept { return bands_; }
    std::size_t bins() const noexcept { return bins_; }
    double weight(std::size_t band, std::size_t bin) const { return weights_[band * bins_ + bin]; }
    // Apex of each triangle.
    const std::vector<double>& center_hz() const noexcept { return centers_; }
    // Half-open range of bins with nonzero weight for a band.
    std::pair<std::size_t, std::size_t> bin_range(std::size_t band) const { return ranges_[band]; }
    // CRC-32 over the configuration and the float weights.
    std::uint32_t checksum() const noexcept { return checksum_; }

    static const MelFilterbank& standard();

private:
    std::size_t bands_;
    std::size_t bins_;
    std::vector<double> weights_;
    std::vector<double> centers_;
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
    std::uint32_t checksum_ = 0;
};

// Slaney mel scale: linear below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Power grid times the filterbank, no compression.
FeatureMatrix mel_project(const PowerGrid& grid, const MelFilterbank& bank = MelFilterbank::standard());

// stft_power -> pool_frames -> mel_project -> log(1 + p).
FeatureMatrix featurize(const AudioBuffer& audio);

std::string feature_pipeline_checksum();

// Little-endian float32, row-major 87x128.
void write_feature_blob(const std::filesystem::path& path, const FeatureMatrix& m);
std::optional<FeatureMatrix> read_feature_blob(const std::filesystem::path& path);

// CRC-32 of the 16-bit PCM rendering of the audio; keys the feature cache.
std::string audio_checksum(const AudioBuffer& audio);

}  // namespace fxlab

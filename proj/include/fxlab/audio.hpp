#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fxlab {

inline constexpr int kSampleRate = 44100;
inline constexpr double kClipSeconds = 2.0;
inline constexpr std::size_t kClipSamples = 88200;

struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate = kSampleRate;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::span<const float> view() const noexcept { return samples; }
};

float peak(std::span<const float> x) noexcept;
double rms(std::span<const float> x) noexcept;

// 16-bit PCM mono RIFF/WAVE. Samples are clamped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

// Reads 16-bit PCM (mono, or first channel of multichannel) into [-1, 1).
AudioBuffer read_wav(const std::filesystem::path& path);

// Samples as they come back from a 16-bit round trip.
AudioBuffer quantize_pcm16(const AudioBuffer& audio);

}  // namespace fxlab

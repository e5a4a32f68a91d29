#pragma once

#include "fxlab/audio.hpp"
#include "fxlab/features.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace fxtest {

inline fxlab::AudioBuffer sine(double hz, double amplitude, std::size_t n = fxlab::kClipSamples,
                               int sr = fxlab::kSampleRate) {
    fxlab::AudioBuffer a;
    a.sample_rate = sr;
    a.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        a.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * hz * double(i) / sr));
    return a;
}

inline fxlab::AudioBuffer noise(std::uint64_t seed, double amplitude, std::size_t n = fxlab::kClipSamples) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    fxlab::AudioBuffer a;
    a.samples.resize(n);
    for (auto& s : a.samples) s = static_cast<float>(u(rng));
    return a;
}

// Power of one frequency over [begin, end) by direct correlation.
inline double tone_power(const std::vector<float>& x, double hz, int sr, std::size_t begin = 0, std::size_t end = 0) {
    if (end == 0) end = x.size();
    double re = 0.0, im = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double ph = 2.0 * std::numbers::pi * hz * double(i) / sr;
        re += x[i] * std::cos(ph);
        im -= x[i] * std::sin(ph);
    }
    const double n = double(end - begin);
    return (re * re + im * im) / (n * n);
}

// Harmonics 2..10 over the fundamental, on the second half of the buffer.
inline double thd(const std::vector<float>& x, double f0, int sr) {
    const std::size_t half = x.size() / 2;
    const double p1 = tone_power(x, f0, sr, half);
    double h = 0.0;
    for (int k = 2; k <= 10; ++k) h += tone_power(x, k * f0, sr, half);
    return std::sqrt(h / p1);
}

// Frame-averaged power spectrum.
inline std::vector<double> mean_spectrum(const fxlab::AudioBuffer& a) {
    const auto grid = fxlab::stft_power(a);
    std::vector<double> s(grid.bins, 0.0);
    for (std::size_t f = 0; f < grid.frames; ++f)
        for (std::size_t b = 0; b < grid.bins; ++b) s[b] += grid.at(f, b) / double(grid.frames);
    return s;
}

inline double centroid_hz(const std::vector<double>& spectrum, int sr = fxlab::kSampleRate) {
    double num = 0.0, den = 0.0;
    const double bin_hz = double(sr) / double(2 * (spectrum.size() - 1));
    for (std::size_t b = 0; b < spectrum.size(); ++b) {
        num += spectrum[b] * double(b) * bin_hz;
        den += spectrum[b];
    }
    return num / den;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

}  // namespace fxtest

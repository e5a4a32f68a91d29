#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fxlab/error.hpp"
#include "fxlab/features.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace fxlab;
namespace fs = std::filesystem;

TEST_CASE("stft frame arithmetic") {
    const auto grid = stft_power(fxtest::noise(1, 0.5));
    CHECK(grid.frames == (kClipSamples - 1024) / 512 + 1);
    CHECK(grid.frames == 171);
    CHECK(grid.bins == 513);
    CHECK(grid.values.size() == 171 * 513);

    const auto pooled = pool_frames(grid);
    CHECK(pooled.frames == 87);
    CHECK(pooled.bins == 513);
    for (std::size_t b = 0; b < 513; ++b) {
        CHECK(pooled.at(0, b) == doctest::Approx((grid.at(0, b) + grid.at(1, b)) / 2.0));
        CHECK(pooled.at(85, b) == doctest::Approx(grid.at(170, b)));
        CHECK(pooled.at(86, b) == pooled.at(85, b));
    }
}

TEST_CASE("too short input") {
    CHECK_THROWS_AS(stft_power(fxtest::sine(440.0, 0.5, 1023)), Error);
    try {
        stft_power(fxtest::sine(440.0, 0.5, 100));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooShort);
    }
    CHECK(stft_power(fxtest::sine(440.0, 0.5, 1024)).frames == 1);
}

TEST_CASE("zero input gives a zero grid") {
    AudioBuffer z;
    z.samples.assign(kClipSamples, 0.0f);
    const auto grid = stft_power(z);
    CHECK(std::all_of(grid.values.begin(), grid.values.end(), [](double v) { return v == 0.0; }));
    const auto m = mel_project(pool_frames(grid));
    CHECK(std::all_of(m.values.begin(), m.values.end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("DC input stays in bin 0") {
    AudioBuffer dc;
    dc.samples.assign(8192, 1.0f);
    const auto grid = stft_power(dc);
    for (std::size_t f = 0; f < grid.frames; ++f) {
        double rest = 0.0;
        for (std::size_t b = 1; b < grid.bins; ++b) rest += grid.at(f, b);
        CHECK(grid.at(f, 0) > 0.0);
        // Hann leaks into bin 1 only; beyond it the spectrum is numerically zero.
        CHECK(rest - grid.at(f, 1) <= 1e-9 * grid.at(f, 0));
        CHECK(grid.at(f, 1) == doctest::Approx(grid.at(f, 0) / 4.0).epsilon(1e-6));
    }
}

TEST_CASE("windowed sine power matches the window energy") {
    const double a = 0.5, hz = 1000.0;
    const auto grid = stft_power(fxtest::sine(hz, a));
    // One-sided sum of a Hann-windowed sine: (A*scale)^2 * 3 N^2 / 32.
    const double amp = a * kPcmScale, n = double(kWindowLength);
    const double expect = amp * amp * 3.0 * n * n / 32.0;
    for (std::size_t f = 0; f < grid.frames; f += 17) {
        double total = 0.0;
        for (std::size_t b = 0; b < grid.bins; ++b) total += grid.at(f, b);
        CHECK(std::abs(total - expect) / expect < 0.05);
    }
}

TEST_CASE("filterbank covers the range") {
    const auto& bank = MelFilterbank::standard();
    CHECK(bank.bands() == 128);
    CHECK(bank.bins() == 513);
    for (std::size_t m = 0; m < 128; ++m) {
        double col = 0.0;
        for (std::size_t b = 0; b < 513; ++b) {
            CHECK(bank.weight(m, b) >= 0.0);
            col += bank.weight(m, b);
        }
        CHECK(col > 0.0);
        const auto [lo, hi] = bank.bin_range(m);
        CHECK(lo < hi);
    }
    const auto& c = bank.center_hz();
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(c.front() > 0.0);
    CHECK(c.back() < 22050.0);
    CHECK(bank.checksum() == MelFilterbank().checksum());
    CHECK(bank.checksum() != MelFilterbank(kSampleRate, 64).checksum());
}

TEST_CASE("slaney mel scale") {
    CHECK(hz_to_mel(0.0) == 0.0);
    CHECK(hz_to_mel(1000.0) == doctest::Approx(15.0));
    CHECK(hz_to_mel(500.0) == doctest::Approx(7.5));
    CHECK(hz_to_mel(2000.0) == doctest::Approx(15.0 + std::log(2.0) / (std::log(6.4) / 27.0)));
    for (double hz : {50.0, 440.0, 999.0, 1001.0, 5000.0, 22050.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz));
}

TEST_CASE("440 Hz peaks in the nearest band") {
    const auto& bank = MelFilterbank::standard();
    const auto& c = bank.center_hz();
    std::size_t nearest = 0;
    for (std::size_t m = 1; m < c.size(); ++m)
        if (std::abs(c[m] - 440.0) < std::abs(c[nearest] - 440.0)) nearest = m;
    const auto mel = mel_project(pool_frames(stft_power(fxtest::sine(440.0, 0.5))));
    for (std::size_t f = 0; f < mel.frames; ++f) {
        const auto row = std::span(mel.values).subspan(f * 128, 128);
        CHECK(std::size_t(std::max_element(row.begin(), row.end()) - row.begin()) == nearest);
    }
}

TEST_CASE("mel_project rejects a wrong bin count") {
    PowerGrid g;
    g.frames = 2;
    g.bins = 512;
    g.values.assign(1024, 1.0);
    CHECK_THROWS_AS(mel_project(g), Error);
    try {
        mel_project(g);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Shape);
    }
}

TEST_CASE("featurize") {
    const auto x = fxtest::noise(4, 0.25);
    const auto m = featurize(x);
    CHECK(m.frames == 87);
    CHECK(m.bands == 128);
    CHECK(m.values.size() == 87 * 128);
    CHECK(std::all_of(m.values.begin(), m.values.end(), [](float v) { return v >= 0.0f; }));
    CHECK(featurize(x).values == m.values);

    auto louder = x;
    for (auto& s : louder.samples) s *= 2.0f;
    const auto ml = featurize(louder);
    for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(ml.values[i] >= m.values[i]);

    AudioBuffer silence;
    silence.samples.assign(kClipSamples, 0.0f);
    const auto ms = featurize(silence);
    CHECK(ms.values.size() == 87 * 128);
    CHECK(std::all_of(ms.values.begin(), ms.values.end(), [](float v) { return v == std::log1p(0.0f); }));
}

TEST_CASE("feature blob round trip") {
    const auto dir = fs::temp_directory_path() / "fxlab_features_blob";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto m = featurize(fxtest::sine(330.0, 0.3));
    write_feature_blob(dir / "a.f32", m);
    CHECK(fs::file_size(dir / "a.f32") == 87 * 128 * 4);
    const auto back = read_feature_blob(dir / "a.f32");
    REQUIRE(back.has_value());
    CHECK(back->values == m.values);
    CHECK_FALSE(read_feature_blob(dir / "missing.f32").has_value());
    std::ofstream(dir / "short.f32") << "abc";
    CHECK_FALSE(read_feature_blob(dir / "short.f32").has_value());
    fs::remove_all(dir);
}

TEST_CASE("checksums") {
    const auto a = fxtest::sine(330.0, 0.3), b = fxtest::sine(331.0, 0.3);
    CHECK(audio_checksum(a) == audio_checksum(a));
    CHECK(audio_checksum(a) != audio_checksum(b));
    CHECK(audio_checksum(a) == audio_checksum(quantize_pcm16(a)));
    CHECK(feature_pipeline_checksum() == feature_pipeline_checksum());
    CHECK_FALSE(feature_pipeline_checksum().empty());
}

#include "fxlab/features.hpp"

#include "fxlab/error.hpp"

#include <fftw3.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>

namespace fxlab {

namespace {

std::vector<double> hann(std::size_t n) {
    // Periodic Hann, the usual analysis window.
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
    return w;
}

// FFTW plans are created under a lock; execution on new arrays is thread-safe.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        std::lock_guard lock(planner_mutex());
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }
    const fftw_complex* execute() {
        fftw_execute(plan_);
        return out_;
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace

PowerGrid stft_power(const AudioBuffer& audio) {
    if (audio.size() < kWindowLength)
        throw Error(ErrorKind::TooShort, "need at least " + std::to_string(kWindowLength) + " samples, got " +
                                             std::to_string(audio.size()));
    static const std::vector<double> window = hann(kWindowLength);
    thread_local RealFft fft(kWindowLength);

    PowerGrid grid;
    grid.frames = (audio.size() - kWindowLength) / kHopLength + 1;
    grid.bins = kNumBins;
    grid.values.resize(grid.frames * grid.bins);
    for (std::size_t f = 0; f < grid.frames; ++f) {
        double* in = fft.input();
        const float* src = audio.samples.data() + f * kHopLength;
        for (std::size_t i = 0; i < kWindowLength; ++i) in[i] = window[i] * kPcmScale * double(src[i]);
        const fftw_complex* out = fft.execute();
        double* row = grid.values.data() + f * grid.bins;
        for (std::size_t k = 0; k < grid.bins; ++k) row[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    return grid;
}

PowerGrid pool_frames(const PowerGrid& grid) {
    if (grid.frames == 0) throw Error(ErrorKind::Shape, "cannot pool an empty grid");
    PowerGrid out;
    out.bins = grid.bins;
    const std::size_t pooled = (grid.frames + 1) / 2;
    out.frames = std::max(pooled, kFeatureFrames);
    out.values.resize(out.frames * out.bins);
    for (std::size_t p = 0; p < pooled; ++p) {
        const std::size_t a = 2 * p;
        const std::size_t b = std::min(a + 1, grid.frames - 1);
        const double scale = a == b ? 1.0 : 0.5;
        for (std::size_t k = 0; k < grid.bins; ++k)
            out.values[p * out.bins + k] = a == b ? grid.at(a, k) : scale * (grid.at(a, k) + grid.at(b, k));
    }
    for (std::size_t p = pooled; p < out.frames; ++p)
        std::copy_n(out.values.begin() + (pooled - 1) * out.bins, out.bins, out.values.begin() + p * out.bins);
    return out;
}

double hz_to_mel(double hz) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (hz < min_log_hz) return hz / f_sp;
    return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (mel < min_log_mel) return mel * f_sp;
    return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

MelFilterbank::MelFilterbank(int sample_rate, std::size_t bands, double min_hz, double max_hz,
                             std::size_t fft_length)
    : bands_(bands), bins_(fft_length / 2 + 1), weights_(bands * (fft_length / 2 + 1), 0.0) {
    const double lo = hz_to_mel(min_hz);
    const double hi = hz_to_mel(max_hz);
    std::vector<double> edges(bands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(lo + (hi - lo) * double(i) / double(bands + 1));
    centers_.assign(edges.begin() + 1, edges.end() - 1);

    for (std::size_t m = 0; m < bands; ++m) {
        const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
        for (std::size_t k = 0; k < bins_; ++k) {
            const double f = double(k) * sample_rate / double(fft_length);
            const double up = (f - left) / (center - left);
            const double down = (right - f) / (right - center);
            weights_[m * bins_ + k] = std::max(0.0, std::min(up, down));
        }
        std::size_t first = 0;
        while (first < bins_ && weights_[m * bins_ + first] == 0.0) ++first;
        std::size_t last = bins_;
        while (last > first && weights_[m * bins_ + last - 1] == 0.0) --last;
        ranges_.emplace_back(first, last);
    }

    char header[96];
    const int len = std::snprintf(header, sizeof header, "slaney sr=%d bands=%zu range=%g:%g n_fft=%zu", sample_rate,
                                  bands, min_hz, max_hz, fft_length);
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(header), static_cast<uInt>(len));
    for (double w : weights_) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(w));
        unsigned char le[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                               static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
        crc = crc32(crc, le, 4);
    }
    checksum_ = static_cast<std::uint32_t>(crc);
}

const MelFilterbank& MelFilterbank::standard() {
    static const MelFilterbank bank;
    return bank;
}

FeatureMatrix mel_project(const PowerGrid& grid, const MelFilterbank& bank) {
    if (grid.bins != bank.bins())
        throw Error(ErrorKind::Shape, "power grid has " + std::to_string(grid.bins) + " bins, filterbank expects " +
                                          std::to_string(bank.bins()));
    FeatureMatrix out;
    out.frames = grid.frames;
    out.bands = bank.bands();
    out.values.resize(out.frames * out.bands);
    for (std::size_t t = 0; t < grid.frames; ++t) {
        const double* row = grid.values.data() + t * grid.bins;
        for (std::size_t m = 0; m < bank.bands(); ++m) {
            double acc = 0.0;
            const auto [first, last] = bank.bin_range(m);
            for (std::size_t k = first; k < last; ++k) acc += row[k] * bank.weight(m, k);
            out.values[t * out.bands + m] = static_cast<float>(acc);
        }
    }
    return out;
}

FeatureMatrix featurize(const AudioBuffer& audio) {
    if (audio.sample_rate != kSampleRate)
        throw Error(ErrorKind::Domain, "features expect 44100 Hz audio, got " + std::to_string(audio.sample_rate));
    auto m = mel_project(pool_frames(stft_power(audio)));
    for (float& v : m.values) v = std::log1p(v);
    return m;
}

std::string feature_pipeline_checksum() {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%08x-w%zu-h%zu-pool2-log1p-pcm16", MelFilterbank::standard().checksum(),
                  kWindowLength, kHopLength);
    return buf;
}

void write_feature_blob(const std::filesystem::path& path, const FeatureMatrix& m) {
    std::vector<unsigned char> bytes(m.values.size() * 4);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(m.values[i]);
        for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write feature blob " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::optional<FeatureMatrix> read_feature_blob(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() != kFeatureFrames * kMelBands * 4) return std::nullopt;
    FeatureMatrix m;
    m.frames = kFeatureFrames;
    m.values.resize(kFeatureFrames * kMelBands);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[4 * i + b]) << (8 * b);
        m.values[i] = std::bit_cast<float>(bits);
    }
    return m;
}

std::string audio_checksum(const AudioBuffer& audio) {
    uLong crc = crc32(0L, Z_NULL, 0);
    for (float v : audio.samples) {
        const float c = std::clamp(v, -1.0f, 1.0f);
        const auto q = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0f, -32768.0f, 32767.0f)));
        const unsigned char le[2] = {static_cast<unsigned char>(q & 0xFF), static_cast<unsigned char>((q >> 8) & 0xFF)};
        crc = crc32(crc, le, 2);
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

}  // namespace fxlab

#include "fxlab/audio.hpp"

#include "fxlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace fxlab {

float peak(std::span<const float> x) noexcept {
    float p = 0.0f;
    for (float v : x) p = std::max(p, std::abs(v));
    return p;
}

double rms(std::span<const float> x) noexcept {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (float v : x) acc += double(v) * v;
    return std::sqrt(acc / double(x.size()));
}

namespace {

std::int16_t to_pcm16(float v) {
    const float c = std::clamp(v, -1.0f, 1.0f);
    return static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0f, -32768.0f, 32767.0f)));
}

void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<char>& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.size() * 2);
    std::vector<char> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (float v : audio.samples) put_u16(out, static_cast<std::uint16_t>(to_pcm16(v)));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw Error(ErrorKind::Io, "not a RIFF/WAVE file: " + path.string());

    int channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t len = get_u32(chunk + 4);
        const std::size_t body = pos + 8;
        if (body + len > bytes.size()) throw Error(ErrorKind::Io, "truncated chunk in " + path.string());
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (len < 16) throw Error(ErrorKind::Io, "bad fmt chunk");
            const std::uint16_t format = get_u16(bytes.data() + body);
            channels = get_u16(bytes.data() + body + 2);
            rate = get_u32(bytes.data() + body + 4);
            bits = get_u16(bytes.data() + body + 14);
            if (format != 1 || bits != 16 || channels < 1)
                throw Error(ErrorKind::Io, "only 16-bit PCM is supported: " + path.string());
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw Error(ErrorKind::Io, "data before fmt chunk");
            AudioBuffer audio;
            audio.sample_rate = static_cast<int>(rate);
            const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
            const std::size_t frames = len / frame_bytes;
            audio.samples.resize(frames);
            for (std::size_t i = 0; i < frames; ++i) {
                const auto v = static_cast<std::int16_t>(get_u16(bytes.data() + body + i * frame_bytes));
                audio.samples[i] = float(v) / 32768.0f;
            }
            return audio;
        }
        pos = body + len + (len & 1);
    }
    throw Error(ErrorKind::Io, "no data chunk in " + path.string());
}

AudioBuffer quantize_pcm16(const AudioBuffer& audio) {
    AudioBuffer q;
    q.sample_rate = audio.sample_rate;
    q.samples.resize(audio.size());
    for (std::size_t i = 0; i < audio.size(); ++i) q.samples[i] = float(to_pcm16(audio.samples[i])) / 32768.0f;
    return q;
}

}  // namespace fxlab

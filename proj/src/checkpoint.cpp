#include "fxlab/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace fxlab {

using nlohmann::json;

void Standardizer::apply(std::span<float> features, std::size_t bands) const {
    if (empty()) return;
    if (mean.size() != bands || stddev.size() != bands)
        throw Error(ErrorKind::Shape, "standardizer has " + std::to_string(mean.size()) + " bands, data has " +
                                          std::to_string(bands));
    for (std::size_t i = 0; i < features.size(); ++i) {
        const std::size_t b = i % bands;
        features[i] = (features[i] - mean[b]) / stddev[b];
    }
}

namespace {

constexpr char kMagic[8] = {'F', 'X', 'L', 'A', 'B', 'C', 'K', 'P'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    const std::vector<char>& buffer() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}
    const unsigned char* take(std::size_t n) {
        if (pos_ + n > data_.size()) throw Error(ErrorKind::Io, "checkpoint truncated");
        const unsigned char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint8_t u8() { return *take(1); }
    std::uint32_t u32() {
        const auto* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n) {
        const auto* p = take(n);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

private:
    std::vector<unsigned char> data_;
    std::size_t pos_ = 0;
};

json meta_json(const CheckpointMeta& m) {
    return json{{"variant", to_string(m.config.variant)},
                {"input_height", m.config.input_height},
                {"input_width", m.config.input_width},
                {"classes", m.config.classes},
                {"settings", m.config.settings},
                {"embedding_dim", m.config.embedding_dim},
                {"seed", m.seed},
                {"feature_checksum", m.feature_checksum},
                {"train_subset", m.train_subset},
                {"standardize_mean", m.standardizer.mean},
                {"standardize_std", m.standardizer.stddev},
                {"best_epoch", m.best_epoch},
                {"best_metric", m.best_metric},
                {"init_scheme", m.init_scheme},
                {"conditioning", m.conditioning}};
}

CheckpointMeta meta_from_json(const json& j) {
    CheckpointMeta m;
    const auto variant = parse_variant(j.at("variant").get<std::string>());
    if (!variant) throw Error(ErrorKind::Io, "checkpoint has unknown variant");
    m.config.variant = *variant;
    m.config.input_height = j.at("input_height").get<std::size_t>();
    m.config.input_width = j.at("input_width").get<std::size_t>();
    m.config.classes = j.at("classes").get<std::size_t>();
    m.config.settings = j.at("settings").get<std::size_t>();
    m.config.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.feature_checksum = j.at("feature_checksum").get<std::string>();
    m.train_subset = j.at("train_subset").get<std::string>();
    m.standardizer.mean = j.at("standardize_mean").get<std::vector<float>>();
    m.standardizer.stddev = j.at("standardize_std").get<std::vector<float>>();
    m.best_epoch = j.at("best_epoch").get<int>();
    m.best_metric = j.at("best_metric").get<double>();
    m.init_scheme = j.at("init_scheme").get<std::string>();
    m.conditioning = j.at("conditioning").get<std::string>();
    return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network& net, const CheckpointMeta& meta) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    const std::string m = meta_json(meta).dump();
    w.u32(static_cast<std::uint32_t>(m.size()));
    w.bytes(m.data(), m.size());
    const auto tensors = net.state();
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        w.u32(static_cast<std::uint32_t>(t.name.size()));
        w.bytes(t.name.data(), t.name.size());
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(t.tensor->rank()));
        for (std::size_t d : t.tensor->shape()) w.u64(d);
        for (float v : t.tensor->values()) w.f32(v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    f.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    Reader r(std::vector<unsigned char>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>()));
    if (std::memcmp(r.take(8), kMagic, 8) != 0) throw Error(ErrorKind::Io, "not an fxlab checkpoint: " + path.string());
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw Error(ErrorKind::Io, "unsupported checkpoint version " + std::to_string(version));
    LoadedModel out;
    try {
        out.meta = meta_from_json(json::parse(r.str(r.u32())));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("bad checkpoint metadata: ") + e.what());
    }
    out.net = std::make_unique<Network>(out.meta.config, out.meta.seed);
    auto state = out.net->state();
    const std::uint32_t count = r.u32();
    if (count != state.size())
        throw Error(ErrorKind::Io, "checkpoint has " + std::to_string(count) + " tensors, model expects " +
                                       std::to_string(state.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.str(r.u32());
        if (r.u8() != 1) throw Error(ErrorKind::Io, "unsupported dtype for " + name);
        Shape shape(r.u32());
        for (auto& d : shape) d = r.u64();
        auto& target = state[i];
        if (target.name != name || target.tensor->shape() != shape)
            throw Error(ErrorKind::Io, "checkpoint tensor " + name + shape_string(shape) + " does not match model " +
                                           target.name + shape_string(target.tensor->shape()));
        for (auto& v : target.tensor->values()) v = r.f32();
    }
    return out;
}

}  // namespace fxlab

#include "fxlab/network.hpp"

#include <algorithm>

namespace fxlab {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
    case Variant::FxNet: return "fxnet";
    case Variant::SetNet: return "setnet";
    case Variant::MultiNet: return "multinet";
    case Variant::SetNetCond: return "setnetcond";
    }
    return "?";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
    for (auto v : {Variant::FxNet, Variant::SetNet, Variant::MultiNet, Variant::SetNetCond})
        if (to_string(v) == name) return v;
    return std::nullopt;
}

bool has_class_head(Variant v) noexcept { return v == Variant::FxNet || v == Variant::MultiNet; }
bool has_settings_head(Variant v) noexcept { return v != Variant::FxNet; }

// ---- Head ------------------------------------------------------------------

template <typename T>
Head<T>::Head(std::size_t in, std::size_t out_width, bool tanh_out)
    : fc1(in, 120), bn1(120), fc2(120, 60), bn2(60), out(60, out_width), tanh_output(tanh_out) {}

template <typename T>
BasicTensor<T> Head<T>::forward(const BasicTensor<T>& x, bool training) {
    auto h = act1.forward(bn1.forward(fc1.forward(x), training));
    h = act2.forward(bn2.forward(fc2.forward(h), training));
    h = out.forward(h);
    return tanh_output ? squash.forward(h) : h;
}

template <typename T>
BasicTensor<T> Head<T>::backward(const BasicTensor<T>& grad_out) {
    auto g = tanh_output ? squash.backward(grad_out) : grad_out;
    g = out.backward(g);
    g = fc2.backward(bn2.backward(act2.backward(g)));
    return fc1.backward(bn1.backward(act1.backward(g)));
}

template <typename T>
void Head<T>::init(std::mt19937_64& rng) {
    fc1.init(rng);
    fc2.init(rng);
    out.init(rng);
}

template <typename T>
void Head<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& params,
                      std::vector<NamedParam<T>>& buffers) {
    fc1.collect(prefix + ".fc1", params);
    bn1.collect(prefix + ".bn1", params);
    fc2.collect(prefix + ".fc2", params);
    bn2.collect(prefix + ".bn2", params);
    out.collect(prefix + ".out", params);
    bn1.collect_buffers(prefix + ".bn1", buffers);
    bn2.collect_buffers(prefix + ".bn2", buffers);
}

// ---- Trunk -----------------------------------------------------------------

template <typename T>
Trunk<T>::Trunk() : conv1(1, 6), bn1(6), conv2(6, 12), bn2(12) {}

template <typename T>
BasicTensor<T> Trunk<T>::forward(const BasicTensor<T>& x, bool training) {
    auto h = pool1.forward(act1.forward(bn1.forward(conv1.forward(x), training)));
    h = pool2.forward(act2.forward(bn2.forward(conv2.forward(h), training)));
    pooled_shape = h.shape();
    h.reshape({pooled_shape[0], pooled_shape[1] * pooled_shape[2] * pooled_shape[3]});
    return h;
}

template <typename T>
void Trunk<T>::backward(const BasicTensor<T>& grad_flat) {
    BasicTensor<T> g = grad_flat;
    g.reshape(pooled_shape);
    g = conv2.backward(bn2.backward(act2.backward(pool2.backward(g))));
    conv1.backward(bn1.backward(act1.backward(pool1.backward(g))), false);
}

template <typename T>
void Trunk<T>::init(std::mt19937_64& rng) {
    conv1.init(rng);
    conv2.init(rng);
}

template <typename T>
void Trunk<T>::collect(std::vector<NamedParam<T>>& params, std::vector<NamedParam<T>>& buffers) {
    conv1.collect("trunk.conv1", params);
    bn1.collect("trunk.bn1", params);
    conv2.collect("trunk.conv2", params);
    bn2.collect("trunk.bn2", params);
    bn1.collect_buffers("trunk.bn1", buffers);
    bn2.collect_buffers("trunk.bn2", buffers);
}

// ---- Network ---------------------------------------------------------------

template <typename T>
BasicNetwork<T>::BasicNetwork(NetworkConfig config, std::uint64_t seed) : config_(config) {
    Shape s{1, 1, config.input_height, config.input_width};
    chain_.push_back({1, s[2], s[3]});
    s = trunk_.conv1.output_shape(s);
    chain_.push_back({s[1], s[2], s[3]});
    s = MaxPool2<T>::output_shape(s);
    chain_.push_back({s[1], s[2], s[3]});
    s = trunk_.conv2.output_shape(s);
    chain_.push_back({s[1], s[2], s[3]});
    s = MaxPool2<T>::output_shape(s);
    chain_.push_back({s[1], s[2], s[3]});
    flat_ = s[1] * s[2] * s[3];
    chain_.push_back({flat_});
    chain_.push_back({120});
    chain_.push_back({60});
    if (config.input_height == 87 && config.input_width == 128 && flat_ != kTrunkFlatWidth)
        throw Error(ErrorKind::Shape, "trunk width " + std::to_string(flat_) + " != 6264");

    if (has_class_head(config.variant)) {
        class_head_.emplace(flat_, config.classes, false);
        chain_.push_back({config.classes});
    }
    if (has_settings_head(config.variant)) {
        const bool cond = config.variant == Variant::SetNetCond;
        if (cond) embedding_.emplace(config.classes, config.embedding_dim);
        settings_head_.emplace(flat_ + (cond ? config.embedding_dim : 0), config.settings, true);
        chain_.push_back({config.settings});
    }

    std::mt19937_64 rng(seed);
    trunk_.init(rng);
    if (class_head_) class_head_->init(rng);
    if (settings_head_) settings_head_->init(rng);
    if (embedding_) embedding_->init(rng, 0.1);
}

template <typename T>
Outputs<T> BasicNetwork<T>::forward(const BasicTensor<T>& features, std::span<const int> class_ids, bool training) {
    const Shape expected{features.rank() > 0 ? features.dim(0) : 0, 1, config_.input_height, config_.input_width};
    if (features.shape() != expected)
        throw Error(ErrorKind::Shape, "network expects " + shape_string(expected) + ", got " +
                                          shape_string(features.shape()));
    const std::size_t n = features.dim(0);
    if (config_.variant == Variant::SetNetCond && class_ids.size() != n)
        throw Error(ErrorKind::Conditioning, "SetNetCond needs one class id per input row");

    Outputs<T> out;
    auto flat = trunk_.forward(features, training);
    if (class_head_) out.logits = class_head_->forward(flat, training);
    if (settings_head_) {
        if (embedding_) {
            const auto emb = embedding_->forward(class_ids);
            const std::size_t e = config_.embedding_dim;
            BasicTensor<T> joined({n, flat_ + e});
            for (std::size_t i = 0; i < n; ++i) {
                std::copy_n(flat.data() + i * flat_, flat_, joined.data() + i * (flat_ + e));
                std::copy_n(emb.data() + i * e, e, joined.data() + i * (flat_ + e) + flat_);
            }
            out.settings = settings_head_->forward(joined, training);
        } else {
            out.settings = settings_head_->forward(flat, training);
        }
    }
    forward_done_ = true;
    batch_ = n;
    return out;
}

template <typename T>
void BasicNetwork<T>::backward(const Outputs<T>& grads) {
    if (!forward_done_) throw Error(ErrorKind::State, "backward called before forward");
    BasicTensor<T> d_flat({batch_, flat_});
    if (class_head_ && !grads.logits.empty()) {
        const auto g = class_head_->backward(grads.logits);
        for (std::size_t i = 0; i < g.size(); ++i) d_flat[i] += g[i];
    }
    if (settings_head_ && !grads.settings.empty()) {
        const auto g = settings_head_->backward(grads.settings);
        if (embedding_) {
            const std::size_t e = config_.embedding_dim;
            BasicTensor<T> d_emb({batch_, e});
            for (std::size_t i = 0; i < batch_; ++i) {
                const T* row = g.data() + i * (flat_ + e);
                for (std::size_t j = 0; j < flat_; ++j) d_flat[i * flat_ + j] += row[j];
                std::copy_n(row + flat_, e, d_emb.data() + i * e);
            }
            embedding_->backward(d_emb);
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) d_flat[i] += g[i];
        }
    }
    trunk_.backward(d_flat);
}

template <typename T>
void BasicNetwork<T>::zero_grad() {
    for (auto& p : parameters()) p.tensor->zero_grad();
}

template <typename T>
std::vector<NamedParam<T>> BasicNetwork<T>::parameters() {
    std::vector<NamedParam<T>> params, buffers;
    trunk_.collect(params, buffers);
    if (class_head_) class_head_->collect("class_head", params, buffers);
    if (embedding_) embedding_->collect("embedding", params);
    if (settings_head_) settings_head_->collect("settings_head", params, buffers);
    return params;
}

template <typename T>
std::vector<NamedParam<T>> BasicNetwork<T>::buffers() {
    std::vector<NamedParam<T>> params, buffers;
    trunk_.collect(params, buffers);
    if (class_head_) class_head_->collect("class_head", params, buffers);
    if (settings_head_) settings_head_->collect("settings_head", params, buffers);
    return buffers;
}

template <typename T>
std::vector<NamedParam<T>> BasicNetwork<T>::state() {
    auto all = parameters();
    auto b = buffers();
    all.insert(all.end(), b.begin(), b.end());
    return all;
}

template <typename From, typename To>
void copy_state(BasicNetwork<From>& from, BasicNetwork<To>& to) {
    auto src = from.state();
    auto dst = to.state();
    if (src.size() != dst.size()) throw Error(ErrorKind::Shape, "copy_state: networks differ in structure");
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].name != dst[i].name || src[i].tensor->shape() != dst[i].tensor->shape())
            throw Error(ErrorKind::Shape, "copy_state: mismatch at " + src[i].name);
        for (std::size_t j = 0; j < src[i].tensor->size(); ++j)
            (*dst[i].tensor)[j] = static_cast<To>((*src[i].tensor)[j]);
    }
}

template struct Head<float>;
template struct Head<double>;
template struct Trunk<float>;
template struct Trunk<double>;
template class BasicNetwork<float>;
template class BasicNetwork<double>;
template void copy_state(BasicNetwork<float>&, BasicNetwork<double>&);
template void copy_state(BasicNetwork<double>&, BasicNetwork<float>&);
template void copy_state(BasicNetwork<float>&, BasicNetwork<float>&);

}  // namespace fxlab

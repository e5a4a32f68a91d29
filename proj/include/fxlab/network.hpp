#pragma once

#include "fxlab/layers.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxlab {

enum class Variant { FxNet, SetNet, MultiNet, SetNetCond };

std::string_view to_string(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;  // "fxnet", "setnet", ...

bool has_class_head(Variant v) noexcept;
bool has_settings_head(Variant v) noexcept;

inline constexpr std::size_t kTrunkFlatWidth = 12 * 18 * 29;  // 6264

struct NetworkConfig {
    Variant variant = Variant::FxNet;
    std::size_t input_height = 87;
    std::size_t input_width = 128;
    std::size_t classes = 13;
    std::size_t settings = 2;        // gain, tone
    std::size_t embedding_dim = 16;  // SetNetCond only
};

// logits [N, classes] and/or settings [N, settings]; empty when the variant has no such head.
template <typename T>
struct Outputs {
    BasicTensor<T> logits;
    BasicTensor<T> settings;
};

// Dense(120) -> BN -> ReLU -> Dense(60) -> BN -> ReLU -> Dense(out) [-> tanh].
template <typename T>
struct Head {
    Head(std::size_t in, std::size_t out, bool tanh_output);

    BasicTensor<T> forward(const BasicTensor<T>& x, bool training);
    BasicTensor<T> backward(const BasicTensor<T>& grad_out);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& params, std::vector<NamedParam<T>>& buffers);

    Dense<T> fc1;
    BatchNorm<T> bn1;
    Relu<T> act1;
    Dense<T> fc2;
    BatchNorm<T> bn2;
    Relu<T> act2;
    Dense<T> out;
    bool tanh_output;
    Tanh<T> squash;
};

// Conv(5x5, 6) -> BN -> ReLU -> MaxPool -> Conv(5x5, 12) -> BN -> ReLU -> MaxPool -> flatten.
template <typename T>
struct Trunk {
    Trunk();

    BasicTensor<T> forward(const BasicTensor<T>& x, bool training);
    void backward(const BasicTensor<T>& grad_flat);
    void init(std::mt19937_64& rng);
    void collect(std::vector<NamedParam<T>>& params, std::vector<NamedParam<T>>& buffers);

    Conv2d<T> conv1;
    BatchNorm<T> bn1;
    Relu<T> act1;
    MaxPool2<T> pool1;
    Conv2d<T> conv2;
    BatchNorm<T> bn2;
    Relu<T> act2;
    MaxPool2<T> pool2;
    Shape pooled_shape;
};

template <typename T>
class BasicNetwork {
public:
    // Weights drawn from a generator seeded with `seed`: Kaiming-uniform on
    // fan-in for conv/dense, U[-0.1, 0.1] for the class embedding.
    BasicNetwork(NetworkConfig config, std::uint64_t seed);

    // features [N,1,H,W]; class_ids required (one per row) for SetNetCond only.
    Outputs<T> forward(const BasicTensor<T>& features, std::span<const int> class_ids = {}, bool training = false);
    // Gradients of the loss w.r.t. each populated output; parameter grads accumulate.
    void backward(const Outputs<T>& grads);

    void zero_grad();
    std::vector<NamedParam<T>> parameters();
    std::vector<NamedParam<T>> buffers();
    // Parameters followed by buffers: everything a checkpoint stores.
    std::vector<NamedParam<T>> state();

    const NetworkConfig& config() const noexcept { return config_; }
    // [1,H,W] -> conv -> pool -> conv -> pool -> flat -> 120 -> 60 -> heads.
    const std::vector<Shape>& shape_chain() const noexcept { return chain_; }
    std::size_t flat_width() const noexcept { return flat_; }

private:
    NetworkConfig config_;
    std::vector<Shape> chain_;
    std::size_t flat_ = 0;
    Trunk<T> trunk_;
    std::optional<Head<T>> class_head_;
    std::optional<Head<T>> settings_head_;
    std::optional<Embedding<T>> embedding_;
    bool forward_done_ = false;
    std::size_t batch_ = 0;
};

using Network = BasicNetwork<float>;

// Copies parameter and buffer values between networks of the same config.
template <typename From, typename To>
void copy_state(BasicNetwork<From>& from, BasicNetwork<To>& to);

}  // namespace fxlab

#pragma once

#include "fxlab/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace fxlab {

template <typename T>
struct NamedParam {
    std::string name;
    BasicTensor<T>* tensor = nullptr;
};

// Every layer caches what its backward pass needs during forward(); calling
// backward() without a preceding forward() throws a State error.

// Valid (unpadded) 2-D cross-correlation, stride 1. Input [N,C,H,W].
template <typename T>
class Conv2d {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel = 5);

    BasicTensor<T> forward(const BasicTensor<T>& x);
    // Returns an empty tensor when need_input_grad is false.
    BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool need_input_grad = true);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
    Shape output_shape(const Shape& in) const;

    BasicTensor<T> weight;  // [out, in * k * k]
    BasicTensor<T> bias;    // [out]

private:
    std::size_t in_, out_, k_;
    BasicTensor<T> input_;
    bool cached_ = false;
};

template <typename T>
class Dense {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    BasicTensor<T> forward(const BasicTensor<T>& x);  // [N, in] -> [N, out]
    BasicTensor<T> backward(const BasicTensor<T>& grad_out, bool need_input_grad = true);
    void init(std::mt19937_64& rng);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);

    BasicTensor<T> weight;  // [out, in]
    BasicTensor<T> bias;    // [out]

private:
    std::size_t in_, out_;
    BasicTensor<T> input_;
    bool cached_ = false;
};

// Per-channel normalization over N (and H,W for rank-4 input).
template <typename T>
class BatchNorm {
public:
    explicit BatchNorm(std::size_t channels, double eps = 1e-5, double momentum = 0.1);

    BasicTensor<T> forward(const BasicTensor<T>& x, bool training);
    BasicTensor<T> backward(const BasicTensor<T>& grad_out);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
    // Running statistics, saved with the model but not trained.
    void collect_buffers(const std::string& prefix, std::vector<NamedParam<T>>& out);

    BasicTensor<T> gamma, beta;
    BasicTensor<T> running_mean, running_var;

private:
    std::size_t channels_;
    double eps_, momentum_;
    BasicTensor<T> normalized_;
    std::vector<double> inv_std_;
    bool training_cached_ = false;
    bool cached_ = false;
};

template <typename T>
class Relu {
public:
    BasicTensor<T> forward(const BasicTensor<T>& x);
    BasicTensor<T> backward(const BasicTensor<T>& grad_out);

private:
    BasicTensor<T> output_;
    bool cached_ = false;
};

template <typename T>
class Tanh {
public:
    BasicTensor<T> forward(const BasicTensor<T>& x);
    BasicTensor<T> backward(const BasicTensor<T>& grad_out);

private:
    BasicTensor<T> output_;
    bool cached_ = false;
};

// 2x2 window, stride 2; odd trailing rows/columns are dropped.
template <typename T>
class MaxPool2 {
public:
    BasicTensor<T> forward(const BasicTensor<T>& x);
    BasicTensor<T> backward(const BasicTensor<T>& grad_out);
    static Shape output_shape(const Shape& in);

private:
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
    bool cached_ = false;
};

// Lookup table [count, dim].
template <typename T>
class Embedding {
public:
    Embedding(std::size_t count, std::size_t dim);

    BasicTensor<T> forward(std::span<const int> ids);
    void backward(const BasicTensor<T>& grad_out);
    void init(std::mt19937_64& rng, double bound = 0.1);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);

    BasicTensor<T> table;

private:
    std::size_t count_, dim_;
    std::vector<int> ids_;
    bool cached_ = false;
};

}  // namespace fxlab

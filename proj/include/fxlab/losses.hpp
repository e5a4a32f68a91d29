#pragma once

#include "fxlab/tensor.hpp"

#include <span>
#include <vector>

namespace fxlab {

template <typename T>
struct LossResult {
    double value = 0.0;
    BasicTensor<T> grad;  // d value / d input
};

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels);

// Mean of squared differences over every component.
template <typename T>
LossResult<T> mse(const BasicTensor<T>& pred, const BasicTensor<T>& target);

// Row-wise softmax of [N, C] logits.
std::vector<double> softmax_row(std::span<const float> logits);

}  // namespace fxlab

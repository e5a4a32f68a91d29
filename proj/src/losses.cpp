#include "fxlab/losses.hpp"

#include <algorithm>
#include <cmath>

namespace fxlab {

template <typename T>
LossResult<T> cross_entropy(const BasicTensor<T>& logits, std::span<const int> labels) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size())
        throw Error(ErrorKind::Shape, "cross_entropy: logits " + shape_string(logits.shape()) + " vs " +
                                          std::to_string(labels.size()) + " labels");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (n == 0) throw Error(ErrorKind::EmptyInput, "cross_entropy: empty batch");
    LossResult<T> r;
    r.grad = BasicTensor<T>(logits.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw Error(ErrorKind::Domain, "cross_entropy: class index " + std::to_string(labels[i]) + " out of range");
        const T* row = logits.data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(double(row[j]) - mx);
        const double log_z = mx + std::log(sum);
        total += log_z - double(row[labels[i]]);
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(double(row[j]) - log_z);
            const double target = static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0;
            r.grad[i * c + j] = static_cast<T>((p - target) / double(n));
        }
    }
    r.value = total / double(n);
    return r;
}

template <typename T>
LossResult<T> mse(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    if (pred.shape() != target.shape())
        throw Error(ErrorKind::Shape, "mse: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
    if (pred.size() == 0) throw Error(ErrorKind::EmptyInput, "mse: empty input");
    LossResult<T> r;
    r.grad = BasicTensor<T>(pred.shape());
    const double n = double(pred.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = double(pred[i]) - double(target[i]);
        total += d * d;
        r.grad[i] = static_cast<T>(2.0 * d / n);
    }
    r.value = total / n;
    return r;
}

std::vector<double> softmax_row(std::span<const float> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) sum += p[j] = std::exp(double(logits[j]) - mx);
    for (double& v : p) v /= sum;
    return p;
}

template LossResult<float> cross_entropy(const BasicTensor<float>&, std::span<const int>);
template LossResult<double> cross_entropy(const BasicTensor<double>&, std::span<const int>);
template LossResult<float> mse(const BasicTensor<float>&, const BasicTensor<float>&);
template LossResult<double> mse(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace fxlab

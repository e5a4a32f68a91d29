#include "fxlab/adam.hpp"

#include <cmath>

namespace fxlab {

template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, AdamMoments& moments, long t, const AdamConfig& cfg) {
    if (params.size() != grads.size())
        throw Error(ErrorKind::Shape, "adam: " + std::to_string(params.size()) + " params vs " +
                                          std::to_string(grads.size()) + " grads");
    if (moments.m.size() != params.size()) {
        moments.m.assign(params.size(), 0.0);
        moments.v.assign(params.size(), 0.0);
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        moments.m[i] = cfg.beta1 * moments.m[i] + (1.0 - cfg.beta1) * g;
        moments.v[i] = cfg.beta2 * moments.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = moments.m[i] / c1;
        const double v_hat = moments.v[i] / c2;
        params[i] = static_cast<T>(double(params[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
}

template <typename T>
Adam<T>::Adam(std::vector<NamedParam<T>> params, AdamConfig config)
    : params_(std::move(params)), moments_(params_.size()), config_(config) {}

template <typename T>
void Adam<T>::step() {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto* p = params_[i].tensor;
        if (!p->has_grad()) p->zero_grad();
        adam_update<T>(p->values(), std::span<const T>(p->grad()), moments_[i], t_, config_);
    }
}

template void adam_update(std::span<float>, std::span<const float>, AdamMoments&, long, const AdamConfig&);
template void adam_update(std::span<double>, std::span<const double>, AdamMoments&, long, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace fxlab

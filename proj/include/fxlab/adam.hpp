#pragma once

#include "fxlab/layers.hpp"

#include <span>
#include <vector>

namespace fxlab {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamMoments {
    std::vector<double> m, v;
};

// One bias-corrected Adam update at timestep t (1-based) for a flat parameter block.
template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, AdamMoments& moments, long t, const AdamConfig& cfg);

template <typename T>
class Adam {
public:
    Adam(std::vector<NamedParam<T>> params, AdamConfig config = {});

    // Applies one update from each parameter's accumulated gradient.
    void step();
    long timestep() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    std::vector<NamedParam<T>> params_;
    std::vector<AdamMoments> moments_;
    AdamConfig config_;
    long t_ = 0;
};

}  // namespace fxlab

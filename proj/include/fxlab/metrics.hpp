#pragma once

#include "fxlab/effects.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fxlab {

inline constexpr float kAbsentTone = -1.0f;
inline constexpr double kSettingsTolerance = 0.1;
inline constexpr std::size_t kNumControls = 2;  // gain, tone

// Percentage of rows whose every control error is strictly below 0.1.
// preds/targets are row-major [rows, controls]; absent tone is -1 in both.
double settings_accuracy(std::span<const float> preds, std::span<const float> targets,
                         std::size_t controls = kNumControls);

double classification_accuracy(std::span<const int> predicted, std::span<const int> truth);

struct ErrorSummary {
    std::size_t count = 0;
    double mae = 0.0;
    double rmse = 0.0;
};

ErrorSummary summarize_errors(std::span<const double> errors);

struct ErrorStats {
    ErrorSummary gain;
    ErrorSummary tone;  // rows with an absent tone target are excluded
    ErrorSummary overall;
};

ErrorStats error_stats(std::span<const float> preds, std::span<const float> targets);

using ConfusionMatrix = std::array<std::array<long, kNumEffects>, kNumEffects>;

// Entry [true][predicted].
ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth);

// Fisher-Pearson g1 = m3 / m2^1.5; zero variance gives 0.
double skewness(std::span<const double> values);

struct Binning {
    // Nearest-grid-value bins when non-empty, else `uniform` equal bins on [0,1].
    std::vector<double> grid;
    std::size_t uniform = 10;

    static Binning at_grid(std::vector<double> values) { return {std::move(values), 0}; }
    static Binning uniform_bins(std::size_t n) { return {{}, n}; }
};

struct BinStat {
    double lo = 0.0, hi = 0.0, center = 0.0;
    std::size_t count = 0;
    bool present = false;  // needs at least 3 samples
    double mean_error = 0.0;
    double skew = 0.0;
};

// Signed error pred - truth, grouped by the true value.
std::vector<BinStat> binned_bias_skew(std::span<const float> preds, std::span<const float> truth,
                                      const Binning& binning);

// Exact two-sided binomial test: total probability of outcomes no more likely than k.
double binomial_two_sided_p(std::size_t k, std::size_t n, double p = 0.5);

}  // namespace fxlab

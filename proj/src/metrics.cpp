#include "fxlab/metrics.hpp"

#include "fxlab/error.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fxlab {

double settings_accuracy(std::span<const float> preds, std::span<const float> targets, std::size_t controls) {
    if (preds.size() != targets.size() || controls == 0 || preds.size() % controls != 0)
        throw Error(ErrorKind::Shape, "settings_accuracy: " + std::to_string(preds.size()) + " predictions vs " +
                                          std::to_string(targets.size()) + " targets");
    const std::size_t rows = preds.size() / controls;
    if (rows == 0) throw Error(ErrorKind::EmptyInput, "settings_accuracy: no rows");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        bool ok = true;
        for (std::size_t c = 0; c < controls && ok; ++c)
            ok = std::abs(double(preds[r * controls + c]) - double(targets[r * controls + c])) < kSettingsTolerance;
        correct += ok;
    }
    return 100.0 * double(correct) / double(rows);
}

double classification_accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw Error(ErrorKind::Shape, "classification_accuracy: length mismatch");
    if (truth.empty()) throw Error(ErrorKind::EmptyInput, "classification_accuracy: no rows");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
    return 100.0 * double(correct) / double(truth.size());
}

ErrorSummary summarize_errors(std::span<const double> errors) {
    ErrorSummary s;
    s.count = errors.size();
    if (errors.empty()) {
        s.mae = s.rmse = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    for (double e : errors) {
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    s.mae = abs_sum / double(errors.size());
    s.rmse = std::sqrt(sq_sum / double(errors.size()));
    return s;
}

ErrorStats error_stats(std::span<const float> preds, std::span<const float> targets) {
    if (preds.size() != targets.size() || preds.size() % kNumControls != 0)
        throw Error(ErrorKind::Shape, "error_stats: misaligned predictions and targets");
    if (preds.empty()) throw Error(ErrorKind::EmptyInput, "error_stats: no rows");
    std::vector<double> gain, tone, all;
    for (std::size_t r = 0; r < preds.size() / kNumControls; ++r) {
        const double g = double(preds[2 * r]) - double(targets[2 * r]);
        gain.push_back(g);
        all.push_back(g);
        if (targets[2 * r + 1] != kAbsentTone) {
            const double t = double(preds[2 * r + 1]) - double(targets[2 * r + 1]);
            tone.push_back(t);
            all.push_back(t);
        }
    }
    return {summarize_errors(gain), summarize_errors(tone), summarize_errors(all)};
}

ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw Error(ErrorKind::Shape, "confusion_matrix: length mismatch");
    ConfusionMatrix m{};
    const int n = static_cast<int>(kNumEffects);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n || predicted[i] < 0 || predicted[i] >= n)
            throw Error(ErrorKind::Domain, "confusion_matrix: label out of range");
        ++m[std::size_t(truth[i])][std::size_t(predicted[i])];
    }
    return m;
}

double skewness(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= double(values.size());
    m3 /= double(values.size());
    if (m2 <= 1e-300) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

std::vector<BinStat> binned_bias_skew(std::span<const float> preds, std::span<const float> truth,
                                      const Binning& binning) {
    if (preds.size() != truth.size()) throw Error(ErrorKind::Shape, "binned_bias_skew: length mismatch");
    std::vector<BinStat> bins;
    std::vector<std::vector<double>> members;
    if (!binning.grid.empty()) {
        auto grid = binning.grid;
        std::sort(grid.begin(), grid.end());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            BinStat b;
            b.center = grid[i];
            b.lo = i == 0 ? grid[i] : 0.5 * (grid[i - 1] + grid[i]);
            b.hi = i + 1 == grid.size() ? grid[i] : 0.5 * (grid[i] + grid[i + 1]);
            bins.push_back(b);
        }
        members.resize(bins.size());
        for (std::size_t i = 0; i < truth.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < grid.size(); ++j)
                if (std::abs(truth[i] - grid[j]) < std::abs(truth[i] - grid[best])) best = j;
            members[best].push_back(double(preds[i]) - double(truth[i]));
        }
    } else {
        const std::size_t n = std::max<std::size_t>(1, binning.uniform);
        for (std::size_t i = 0; i < n; ++i) {
            BinStat b;
            b.lo = double(i) / double(n);
            b.hi = double(i + 1) / double(n);
            b.center = 0.5 * (b.lo + b.hi);
            bins.push_back(b);
        }
        members.resize(n);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double t = std::clamp(double(truth[i]), 0.0, 1.0);
            const auto idx = std::min(n - 1, static_cast<std::size_t>(t * double(n)));
            members[idx].push_back(double(preds[i]) - double(truth[i]));
        }
    }
    for (std::size_t i = 0; i < bins.size(); ++i) {
        bins[i].count = members[i].size();
        bins[i].present = members[i].size() >= 3;
        if (!bins[i].present) continue;
        double sum = 0.0;
        for (double e : members[i]) sum += e;
        bins[i].mean_error = sum / double(members[i].size());
        bins[i].skew = skewness(members[i]);
    }
    return bins;
}

double binomial_two_sided_p(std::size_t k, std::size_t n, double p) {
    if (k > n) throw Error(ErrorKind::Domain, "binomial test: k > n");
    if (n == 0) return 1.0;
    const boost::math::binomial_distribution<double> dist(double(n), p);
    const double observed = boost::math::pdf(dist, double(k));
    double total = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double q = boost::math::pdf(dist, double(i));
        if (q <= observed * (1.0 + 1e-7)) total += q;
    }
    return std::min(1.0, total);
}

}  // namespace fxlab

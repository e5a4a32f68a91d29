#include "fxlab/training.hpp"

#include "fxlab/adam.hpp"
#include "fxlab/losses.hpp"
#include "fxlab/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace fxlab {

namespace fs = std::filesystem;

std::vector<std::size_t> FeatureSet::rows(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i)
        if (splits[i] == split) out.push_back(i);
    return out;
}

std::array<float, 2> settings_target(const EffectSettings& s) { return {s.gain, s.tone ? *s.tone : kAbsentTone}; }

FeatureSet load_feature_set(const DatasetManifest& manifest, const fs::path& dir) {
    FeatureSet set;
    set.subset = manifest.subset;
    const fs::path cache = dir / "features" / feature_pipeline_checksum();
    std::error_code ec;
    fs::create_directories(cache, ec);
    set.features.resize(manifest.records.size() * kFeatureSize);
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto& r = manifest.records[i];
        const auto audio = read_wav(dir / r.audio_path);
        const auto blob = cache / (audio_checksum(audio) + ".f32");
        auto m = read_feature_blob(blob);
        if (!m) {
            m = featurize(audio);
            write_feature_blob(blob, *m);
        }
        if (m->values.size() != kFeatureSize)
            throw Error(ErrorKind::Shape, "feature blob " + blob.string() + " has the wrong size");
        std::copy(m->values.begin(), m->values.end(), set.features.begin() + std::ptrdiff_t(i * kFeatureSize));
        set.labels.push_back(static_cast<int>(class_index(r.effect)));
        const auto t = settings_target(r.settings);
        set.targets.insert(set.targets.end(), t.begin(), t.end());
        set.splits.push_back(r.split);
    }
    return set;
}

Standardizer fit_standardizer(const FeatureSet& data, std::span<const std::size_t> rows) {
    if (rows.empty()) throw Error(ErrorKind::EmptyInput, "cannot fit a standardizer on no rows");
    std::vector<double> sum(kMelBands, 0.0), sq(kMelBands, 0.0);
    for (std::size_t r : rows) {
        const auto x = data.row(r);
        for (std::size_t f = 0; f < kFeatureFrames; ++f)
            for (std::size_t b = 0; b < kMelBands; ++b) {
                const double v = x[f * kMelBands + b];
                sum[b] += v;
                sq[b] += v * v;
            }
    }
    const double n = double(rows.size() * kFeatureFrames);
    Standardizer s;
    for (std::size_t b = 0; b < kMelBands; ++b) {
        const double mean = sum[b] / n;
        const double var = std::max(0.0, sq[b] / n - mean * mean);
        const double sd = std::sqrt(var);
        s.mean.push_back(static_cast<float>(mean));
        s.stddev.push_back(static_cast<float>(sd > 1e-6 ? sd : 1.0));
    }
    return s;
}

namespace {

Tensor gather_batch(const FeatureSet& data, const Standardizer& standardizer, std::span<const std::size_t> rows) {
    Tensor x({rows.size(), 1, kFeatureFrames, kMelBands});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = data.row(rows[i]);
        std::span<float> dst(x.data() + i * kFeatureSize, kFeatureSize);
        std::copy(src.begin(), src.end(), dst.begin());
        standardizer.apply(dst, kMelBands);
    }
    return x;
}

// Fisher-Yates with raw generator output, so the order does not depend on the
// standard library's distribution implementations.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

std::vector<std::vector<float>> snapshot(Network& net) {
    std::vector<std::vector<float>> out;
    for (const auto& p : net.state()) out.emplace_back(p.tensor->values().begin(), p.tensor->values().end());
    return out;
}

void restore(Network& net, const std::vector<std::vector<float>>& values) {
    auto state = net.state();
    for (std::size_t i = 0; i < state.size(); ++i)
        std::copy(values[i].begin(), values[i].end(), state[i].tensor->values().begin());
}

}  // namespace

Predictions predict(Network& net, const Standardizer& standardizer, const FeatureSet& data,
                    std::span<const std::size_t> rows, std::span<const int> conditioning, std::size_t batch_size) {
    const Variant v = net.config().variant;
    if (v == Variant::SetNetCond && conditioning.size() != rows.size())
        throw Error(ErrorKind::Conditioning, "setnetcond needs one class id per row");
    Predictions p;
    const std::size_t classes = net.config().classes;
    batch_size = std::max<std::size_t>(1, batch_size);
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, rows.size() - start);
        const auto batch = rows.subspan(start, n);
        const Tensor x = gather_batch(data, standardizer, batch);
        std::span<const int> ids;
        if (v == Variant::SetNetCond) ids = conditioning.subspan(start, n);
        const auto out = net.forward(x, ids, false);
        if (has_class_head(v)) {
            for (std::size_t i = 0; i < n; ++i) {
                const auto probs = softmax_row(std::span<const float>(out.logits.data() + i * classes, classes));
                std::size_t best = 0;
                for (std::size_t c = 1; c < classes; ++c)
                    if (probs[c] > probs[best]) best = c;
                p.classes.push_back(static_cast<int>(best));
                for (double q : probs) p.probabilities.push_back(static_cast<float>(q));
            }
        }
        if (has_settings_head(v)) p.settings.insert(p.settings.end(), out.settings.values().begin(), out.settings.values().end());
    }
    return p;
}

double validation_metric(Variant variant, const Predictions& p, const FeatureSet& data,
                         std::span<const std::size_t> rows) {
    double cls = 0.0, est = 0.0;
    if (has_class_head(variant)) {
        std::vector<int> truth;
        for (std::size_t r : rows) truth.push_back(data.labels[r]);
        cls = classification_accuracy(p.classes, truth);
    }
    if (has_settings_head(variant)) {
        std::vector<float> targets;
        for (std::size_t r : rows) {
            targets.push_back(data.targets[2 * r]);
            targets.push_back(data.targets[2 * r + 1]);
        }
        est = settings_accuracy(p.settings, targets);
    }
    if (variant == Variant::MultiNet) return 0.5 * (cls + est);
    return has_class_head(variant) ? cls : est;
}

TrainResult train(const TrainConfig& config, const FeatureSet& data, const EpochCallback& on_epoch) {
    const auto train_rows = data.rows(Split::Train);
    const auto valid_rows = data.rows(Split::Valid);
    if (train_rows.empty()) throw Error(ErrorKind::EmptyInput, "training split is empty");
    if (valid_rows.empty()) throw Error(ErrorKind::EmptyInput, "validation split is empty");
    if (config.batch_size < 2) throw Error(ErrorKind::InvalidSettings, "batch size must be at least 2");
    if (config.epochs < 1) throw Error(ErrorKind::InvalidSettings, "epochs must be at least 1");

    TrainResult result;
    result.meta.config.variant = config.variant;
    result.meta.seed = config.seed;
    result.meta.feature_checksum = feature_pipeline_checksum();
    result.meta.train_subset = std::string(to_string(data.subset));
    result.meta.standardizer = fit_standardizer(data, train_rows);
    result.net = std::make_unique<Network>(result.meta.config, config.seed);
    Network& net = *result.net;
    const Standardizer& standardizer = result.meta.standardizer;

    AdamConfig adam;
    adam.lr = config.lr;
    Adam<float> optimizer(net.parameters(), adam);
    std::mt19937_64 rng(config.seed ^ 0x5eedba7c4ULL);
    const Variant v = config.variant;

    std::vector<int> valid_ids;
    for (std::size_t r : valid_rows) valid_ids.push_back(data.labels[r]);

    std::vector<std::size_t> order = train_rows;
    std::vector<std::vector<float>> best_state = snapshot(net);
    double best = -1.0;
    int since_best = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t n = std::min(config.batch_size, order.size() - start);
            if (n < 2) break;  // batch statistics need two rows
            const std::span<const std::size_t> batch(order.data() + start, n);
            const Tensor x = gather_batch(data, standardizer, batch);
            std::vector<int> labels;
            Tensor targets({n, 2});
            for (std::size_t i = 0; i < n; ++i) {
                labels.push_back(data.labels[batch[i]]);
                targets[2 * i] = data.targets[2 * batch[i]];
                targets[2 * i + 1] = data.targets[2 * batch[i] + 1];
            }
            net.zero_grad();
            const auto out = net.forward(x, v == Variant::SetNetCond ? std::span<const int>(labels) : std::span<const int>{},
                                         true);
            Outputs<float> grads;
            double loss = 0.0;
            if (has_class_head(v)) {
                auto ce = cross_entropy(out.logits, labels);
                loss += ce.value;
                grads.logits = std::move(ce.grad);
            }
            if (has_settings_head(v)) {
                auto se = mse(out.settings, targets);
                const double w = v == Variant::MultiNet ? config.settings_weight : 1.0;
                loss += w * se.value;
                if (w != 1.0)
                    for (auto& g : se.grad.values()) g = static_cast<float>(g * w);
                grads.settings = std::move(se.grad);
            }
            if (!std::isfinite(loss))
                throw Error(ErrorKind::Numerical, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                                      std::to_string(batches + 1));
            net.backward(grads);
            optimizer.step();
            loss_sum += loss;
            ++batches;
        }

        const auto p = predict(net, standardizer, data, valid_rows, valid_ids);
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = batches ? loss_sum / double(batches) : 0.0;
        entry.valid_metric = validation_metric(v, p, data, valid_rows);
        entry.improved = entry.valid_metric > best;
        if (entry.improved) {
            best = entry.valid_metric;
            best_state = snapshot(net);
            result.meta.best_epoch = epoch;
            result.meta.best_metric = best;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
        if (config.patience > 0 && since_best >= config.patience) {
            result.stopped_early = epoch < config.epochs;
            break;
        }
    }
    restore(net, best_state);
    return result;
}

std::string training_log_text(const std::vector<EpochLog>& log) {
    std::string out = "epoch\ttrain_loss\tvalid_metric\timproved\n";
    char line[128];
    for (const auto& e : log) {
        std::snprintf(line, sizeof line, "%d\t%.6f\t%.4f\t%d\n", e.epoch, e.train_loss, e.valid_metric, e.improved ? 1 : 0);
        out += line;
    }
    return out;
}

}  // namespace fxlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fxlab/error.hpp"
#include "fxlab/evaluation.hpp"
#include "fxlab/metrics.hpp"
#include "fxlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no fxlab::Error thrown");
    return ErrorKind::Io;
}

// Random features whose class shows up as a brighter band; targets follow the
// gain and tone of a fake setting. Splits are assigned by the caller.
FeatureSet synthetic(Subset subset, std::size_t rows, std::uint64_t seed, double signal = 3.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::uniform_int_distribution<int> cls(0, 12);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FeatureSet d;
    d.subset = subset;
    d.features.resize(rows * kFeatureSize);
    for (auto& v : d.features) v = g(rng);
    for (std::size_t r = 0; r < rows; ++r) {
        const int c = cls(rng);
        d.labels.push_back(c);
        const float gain = u(rng);
        const bool tone = descriptor(effect_from_index(std::size_t(c))).has_tone;
        d.targets.push_back(gain);
        d.targets.push_back(tone ? u(rng) : kAbsentTone);
        for (std::size_t f = 0; f < kFeatureFrames; ++f) {
            d.features[r * kFeatureSize + f * kMelBands + std::size_t(c) * 8] += static_cast<float>(signal);
            d.features[r * kFeatureSize + f * kMelBands + 110] += static_cast<float>(signal * gain);
        }
        d.splits.push_back(Split::Train);
    }
    return d;
}

void assign(FeatureSet& d, std::size_t train, std::size_t valid) {
    for (std::size_t r = 0; r < d.size(); ++r) d.splits[r] = r < train ? Split::Train : r < train + valid ? Split::Valid : Split::Test;
}

}  // namespace

// ---- metrics

TEST_CASE("settings accuracy examples") {
    const std::vector<float> truth = {0.5f, 0.5f};
    CHECK(settings_accuracy(std::vector<float>{0.45f, 0.52f}, truth) == 100.0);
    CHECK(settings_accuracy(std::vector<float>{0.45f, 0.65f}, truth) == 0.0);
    CHECK(settings_accuracy(std::vector<float>{0.3f, -0.95f}, std::vector<float>{0.35f, -1.0f}) == 100.0);
    CHECK(settings_accuracy(std::vector<float>{0.3f, 0.0f}, std::vector<float>{0.35f, -1.0f}) == 0.0);
}

TEST_CASE("settings accuracy threshold is strict") {
    // float neighbours around an error of 0.1
    const float base = 0.5f;
    const float exact = base + static_cast<float>(kSettingsTolerance);
    const double err = double(exact) - double(base);
    const bool below = err < kSettingsTolerance;
    CHECK(settings_accuracy(std::vector<float>{exact, 0.5f}, std::vector<float>{base, 0.5f}) == (below ? 100.0 : 0.0));
    CHECK(settings_accuracy(std::vector<float>{std::nextafter(exact, 1.0f), 0.5f}, std::vector<float>{base, 0.5f}) == 0.0);
    CHECK(settings_accuracy(std::vector<float>{std::nextafter(exact, 0.0f), 0.5f}, std::vector<float>{base, 0.5f}) ==
          (double(std::nextafter(exact, 0.0f)) - base < 0.1 ? 100.0 : 0.0));
    CHECK(settings_accuracy(std::vector<float>{0.375f, 0.0f}, std::vector<float>{0.25f, 0.0f}) == 0.0);
    CHECK(settings_accuracy(std::vector<float>{0.3125f, 0.0f}, std::vector<float>{0.25f, 0.0f}) == 100.0);
}

TEST_CASE("settings accuracy shape, emptiness and order") {
    CHECK(kind_of([] { settings_accuracy(std::vector<float>{0.1f, 0.2f}, std::vector<float>{0.1f}); }) == ErrorKind::Shape);
    CHECK(kind_of([] { settings_accuracy(std::vector<float>{0.1f, 0.2f, 0.3f}, std::vector<float>{0.1f, 0.2f, 0.3f}); }) ==
          ErrorKind::Shape);
    CHECK(kind_of([] { settings_accuracy(std::vector<float>{}, std::vector<float>{}); }) == ErrorKind::EmptyInput);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f), e(-0.15f, 0.15f);
    std::vector<float> p, t;
    for (int i = 0; i < 200; ++i) {
        const float a = u(rng), b = u(rng);
        t.insert(t.end(), {a, b});
        p.insert(p.end(), {a + e(rng), b + e(rng)});
    }
    const double acc = settings_accuracy(p, t);
    std::vector<std::size_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> pp, tt;
    for (std::size_t i : perm) {
        pp.insert(pp.end(), {p[2 * i], p[2 * i + 1]});
        tt.insert(tt.end(), {t[2 * i], t[2 * i + 1]});
    }
    CHECK(settings_accuracy(pp, tt) == acc);
    CHECK(acc > 0.0);
    CHECK(acc < 100.0);
}

TEST_CASE("error summaries") {
    const auto s = summarize_errors(std::vector<double>{0.1, -0.1, 0.2});
    CHECK(s.count == 3);
    CHECK(s.mae == doctest::Approx(0.133333).epsilon(1e-5));
    CHECK(s.rmse == doctest::Approx(0.141421).epsilon(1e-5));
    const auto z = summarize_errors(std::vector<double>{0.0, 0.0});
    CHECK(z.mae == 0.0);
    CHECK(z.rmse == 0.0);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 50);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(std::size_t(len(rng)));
        for (auto& x : v) x = g(rng) * (i % 7 + 1);
        const auto r = summarize_errors(v);
        CHECK(r.mae <= r.rmse + 1e-12);
    }

    // tone errors skip rows whose tone is absent
    const std::vector<float> preds = {0.6f, 0.2f, 0.4f, -0.9f};
    const std::vector<float> truth = {0.5f, 0.4f, 0.5f, -1.0f};
    const auto st = error_stats(preds, truth);
    CHECK(st.gain.count == 2);
    CHECK(st.tone.count == 1);
    CHECK(st.overall.count == 3);
    CHECK(st.tone.mae == doctest::Approx(0.2));
    CHECK(st.gain.mae == doctest::Approx(0.1));
    CHECK(kind_of([] { error_stats(std::vector<float>{}, std::vector<float>{}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("skewness") {
    CHECK(std::abs(skewness(std::vector<double>{0, 0, 1}) - 0.7071) < 1e-4);
    CHECK(skewness(std::vector<double>{-0.3, 0, 0.3}) == doctest::Approx(0.0));
    CHECK(skewness(std::vector<double>{0.2, 0.2, 0.2, 0.2}) == 0.0);
    CHECK(skewness(std::vector<double>{1, 0, 0}) == doctest::Approx(0.7071).epsilon(1e-4));
    CHECK(skewness(std::vector<double>{0, 1, 1}) == doctest::Approx(-0.7071).epsilon(1e-4));
}

TEST_CASE("classification accuracy and confusion") {
    const std::vector<int> truth = {0, 1, 2, 2, 12};
    CHECK(classification_accuracy(truth, truth) == 100.0);
    CHECK(classification_accuracy(std::vector<int>{0, 1, 2, 3, 3}, truth) == 60.0);

    const auto perfect = confusion_matrix(truth, truth);
    long total = 0;
    for (std::size_t i = 0; i < kNumEffects; ++i)
        for (std::size_t j = 0; j < kNumEffects; ++j) {
            total += perfect[i][j];
            if (i != j) CHECK(perfect[i][j] == 0);
        }
    CHECK(total == 5);
    CHECK(perfect[2][2] == 2);

    const auto zeros = confusion_matrix(std::vector<int>(5, 0), truth);
    for (std::size_t i = 0; i < kNumEffects; ++i)
        for (std::size_t j = 1; j < kNumEffects; ++j) CHECK(zeros[i][j] == 0);
    CHECK(zeros[2][0] == 2);
    CHECK(kind_of([] { confusion_matrix(std::vector<int>{13}, std::vector<int>{0}); }) == ErrorKind::Domain);
    CHECK(kind_of([] { confusion_matrix(std::vector<int>{1, 2}, std::vector<int>{0}); }) == ErrorKind::Shape);
}

TEST_CASE("binned bias and skew") {
    const std::vector<float> truth = {0.2f, 0.2f, 0.2f, 0.5f, 0.5f, 0.81f, 0.79f, 0.8f};
    const std::vector<float> pred = {0.2f, 0.2f, 1.2f, 0.5f, 0.6f, 0.71f, 0.89f, 0.8f};
    const auto bins = binned_bias_skew(pred, truth, Binning::at_grid({0.2, 0.5, 0.8}));
    REQUIRE(bins.size() == 3);
    CHECK(bins[0].count == 3);
    CHECK(bins[0].present);
    CHECK(bins[0].mean_error == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    CHECK(bins[0].skew == doctest::Approx(0.7071).epsilon(1e-3));
    CHECK(bins[1].count == 2);
    CHECK_FALSE(bins[1].present);
    CHECK(bins[2].count == 3);
    CHECK(bins[2].skew == doctest::Approx(0.0).epsilon(1e-3));

    const auto uni = binned_bias_skew(pred, truth, Binning::uniform_bins(10));
    REQUIRE(uni.size() == 10);
    CHECK(uni[0].lo == 0.0);
    CHECK(uni[9].hi == 1.0);
    std::size_t n = 0;
    for (const auto& b : uni) n += b.count;
    CHECK(n == truth.size());
}

TEST_CASE("binomial two-sided test") {
    CHECK(binomial_two_sided_p(5, 10) == doctest::Approx(1.0));
    CHECK(binomial_two_sided_p(0, 10) == doctest::Approx(2.0 / 1024.0));
    CHECK(binomial_two_sided_p(8, 10) == doctest::Approx(112.0 / 1024.0));
    CHECK(binomial_two_sided_p(2, 10) == doctest::Approx(112.0 / 1024.0));
    CHECK(binomial_two_sided_p(0, 0) == 1.0);
}

TEST_CASE("twin analysis") {
    ConfusionMatrix c{};
    const auto i808 = class_index(EffectId::E808), its9 = class_index(EffectId::TS9), imgs = class_index(EffectId::MGS);
    c[i808][i808] = 10;
    c[i808][its9] = 12;
    c[its9][its9] = 9;
    c[its9][i808] = 11;
    c[i808][imgs] = 2;
    c[imgs][imgs] = 20;
    c[imgs][i808] = 4;
    const auto t = twin_analysis(c);
    CHECK(t.twin_errors == 25);
    CHECK(t.sibling_errors == 23);
    CHECK(t.sibling_share == doctest::Approx(23.0 / 25.0));
    CHECK(t.twin_predictions == 42);
    CHECK(t.twin_correct == 19);
    CHECK(t.binomial_p == doctest::Approx(binomial_two_sided_p(19, 42)));
    // merged: twin-true predicted as either twin counts as correct
    CHECK(twin_merged_accuracy(c) == doctest::Approx(100.0 * (42 + 20) / 68.0));
}

// ---- training

TEST_CASE("settings targets") {
    const auto a = settings_target(EffectSettings{1.0f, 0.3f, 0.8f});
    CHECK(a[0] == 0.3f);
    CHECK(a[1] == 0.8f);
    const auto b = settings_target(EffectSettings{1.0f, 0.3f, std::nullopt});
    CHECK(b[1] == kAbsentTone);
}

TEST_CASE("standardizer is per band over training rows") {
    FeatureSet d;
    d.features.assign(2 * kFeatureSize, 0.0f);
    d.labels = {0, 0};
    d.targets = {0, 0, 0, 0};
    d.splits = {Split::Train, Split::Valid};
    for (std::size_t f = 0; f < kFeatureFrames; ++f) {
        d.features[f * kMelBands + 3] = f % 2 ? 4.0f : 2.0f;
        d.features[kFeatureSize + f * kMelBands + 3] = 100.0f;
    }
    const auto rows = d.rows(Split::Train);
    const auto s = fit_standardizer(d, rows);
    REQUIRE(s.mean.size() == kMelBands);
    CHECK(s.mean[3] == doctest::Approx(3.0 - 1.0 / 87.0).epsilon(1e-5));
    CHECK(s.mean[0] == 0.0f);
    CHECK(s.stddev[0] == 1.0f);
    CHECK(s.stddev[3] > 0.9f);
    CHECK(s.stddev[3] < 1.1f);
    CHECK(kind_of([&] { fit_standardizer(d, std::vector<std::size_t>{}); }) == ErrorKind::EmptyInput);
}

TEST_CASE("train rejects bad inputs") {
    auto d = synthetic(Subset::MonoDiscrete, 10, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK(kind_of([&] { train(cfg, d); }) == ErrorKind::EmptyInput);
    assign(d, 0, 5);
    CHECK(kind_of([&] { train(cfg, d); }) == ErrorKind::EmptyInput);
    assign(d, 6, 4);
    cfg.batch_size = 1;
    CHECK(kind_of([&] { train(cfg, d); }) == ErrorKind::InvalidSettings);
    cfg.batch_size = 4;
    cfg.epochs = 0;
    CHECK(kind_of([&] { train(cfg, d); }) == ErrorKind::InvalidSettings);
    cfg.epochs = 1;
    d.features[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK(kind_of([&] { train(cfg, d); }) == ErrorKind::Numerical);
}

TEST_CASE("training is deterministic") {
    auto d = synthetic(Subset::MonoContinuous, 60, 2);
    assign(d, 44, 8);
    TrainConfig cfg;
    cfg.variant = Variant::MultiNet;
    cfg.epochs = 2;
    cfg.batch_size = 20;
    cfg.seed = 9;
    const auto a = train(cfg, d), b = train(cfg, d);
    CHECK(training_log_text(a.log) == training_log_text(b.log));
    auto pa = a.net->parameters(), pb = b.net->parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(std::equal(pa[i].tensor->values().begin(), pa[i].tensor->values().end(), pb[i].tensor->values().begin()));
    cfg.seed = 10;
    CHECK(training_log_text(train(cfg, d).log) != training_log_text(a.log));
    CHECK(a.meta.train_subset == "mono-continuous");
    CHECK(a.meta.feature_checksum == feature_pipeline_checksum());
}

TEST_CASE("early stopping keeps the best epoch") {
    // Valid labels unrelated to the features: the metric wanders and plateaus.
    auto d = synthetic(Subset::MonoDiscrete, 70, 3);
    assign(d, 50, 20);
    std::mt19937_64 rng(5);
    for (std::size_t r = 50; r < 70; ++r) d.labels[r] = int(rng() % 13);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.patience = 3;
    cfg.batch_size = 25;
    cfg.seed = 1;
    std::vector<EpochLog> seen;
    auto res = train(cfg, d, [&](const EpochLog& e) { seen.push_back(e); });
    CHECK(seen.size() == res.log.size());
    REQUIRE(res.stopped_early);
    const auto best = std::max_element(res.log.begin(), res.log.end(),
                                       [](const EpochLog& a, const EpochLog& b) { return a.valid_metric < b.valid_metric; });
    CHECK(res.meta.best_epoch == best->epoch);
    CHECK(res.meta.best_metric == best->valid_metric);
    CHECK(int(res.log.size()) == res.meta.best_epoch + cfg.patience);
    CHECK(res.log.back().valid_metric <= res.meta.best_metric);
    int improved = 0;
    for (const auto& e : res.log) improved += e.improved;
    CHECK(improved >= 1);
    // the returned network is the best epoch's, not the last
    const auto rows = d.rows(Split::Valid);
    const auto p = predict(*res.net, res.meta.standardizer, d, rows);
    CHECK(validation_metric(Variant::FxNet, p, d, rows) == res.meta.best_metric);
}

TEST_CASE("FxNet overfits one batch of 100") {
    auto d = synthetic(Subset::MonoDiscrete, 100, 4, 0.0);  // pure noise, labels must be memorized
    // validation looks at the same 100 clips
    d.features.insert(d.features.end(), d.features.begin(), d.features.end());
    d.labels.insert(d.labels.end(), d.labels.begin(), d.labels.end());
    d.targets.insert(d.targets.end(), d.targets.begin(), d.targets.end());
    d.splits.assign(200, Split::Train);
    for (std::size_t r = 100; r < 200; ++r) d.splits[r] = Split::Valid;
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.patience = 15;
    cfg.seed = 3;
    const auto res = train(cfg, d);
    const auto rows = d.rows(Split::Train);
    const auto p = predict(*res.net, res.meta.standardizer, d, rows);
    std::vector<int> truth;
    for (std::size_t r : rows) truth.push_back(d.labels[r]);
    CHECK(classification_accuracy(p.classes, truth) == 100.0);
    MESSAGE("reached 100% by epoch ", res.meta.best_epoch);
}

TEST_CASE("predict and SetNetCond conditioning") {
    auto d = synthetic(Subset::MonoContinuous, 12, 6);
    assign(d, 8, 2);
    Network net({Variant::SetNetCond}, 1);
    Standardizer s;
    s.mean.assign(kMelBands, 0.0f);
    s.stddev.assign(kMelBands, 1.0f);
    const auto rows = d.rows(Split::Test);
    CHECK(kind_of([&] { predict(net, s, d, rows); }) == ErrorKind::Conditioning);
    const std::vector<int> ids = {1, 2};
    const auto p = predict(net, s, d, rows, ids);
    CHECK(p.settings.size() == 4);
    CHECK(p.classes.empty());
    Network fx({Variant::FxNet}, 1);
    const auto q = predict(fx, s, d, rows);
    REQUIRE(q.probabilities.size() == 26);
    CHECK(std::accumulate(q.probabilities.begin(), q.probabilities.begin() + 13, 0.0) == doctest::Approx(1.0).epsilon(1e-5));
}

// ---- evaluation

TEST_CASE("evaluate fills what the variant supports") {
    auto d = synthetic(Subset::MonoDiscrete, 30, 7);
    assign(d, 20, 5);
    const auto rows = d.rows(Split::Test);
    CheckpointMeta meta;
    meta.standardizer.mean.assign(kMelBands, 0.0f);
    meta.standardizer.stddev.assign(kMelBands, 1.0f);
    meta.train_subset = "mono-discrete";

    Network fx({Variant::FxNet}, 2);
    const auto r = evaluate(fx, meta, d, rows);
    CHECK(r.rows == 5);
    CHECK(r.classification_accuracy >= 0.0);
    CHECK(r.classification_accuracy <= 100.0);
    CHECK(std::isnan(r.settings_accuracy));
    CHECK(std::isnan(r.joint_accuracy));
    CHECK_FALSE(r.errors.has_value());
    long total = 0;
    for (const auto& row : r.confusion) total += std::accumulate(row.begin(), row.end(), 0L);
    CHECK(total == 5);

    Network multi({Variant::MultiNet}, 2);
    const auto m = evaluate(multi, meta, d, rows);
    CHECK_FALSE(std::isnan(m.joint_accuracy));
    CHECK(m.joint_accuracy <= std::min(m.classification_accuracy, m.settings_accuracy));
    REQUIRE(m.errors.has_value());
    CHECK(m.errors->gain.mae <= m.errors->gain.rmse);
    CHECK_FALSE(m.gain_bins.empty());

    Network cond({Variant::SetNetCond}, 2);
    const auto c = evaluate(cond, meta, d, rows);
    CHECK(std::isnan(c.classification_accuracy));
    CHECK_FALSE(std::isnan(c.settings_accuracy));

    CHECK(binning_for("mono-discrete").grid.size() > 5);
    CHECK(binning_for("poly-continuous").grid.empty());
    CHECK(binning_for("poly-continuous").uniform == 10);
}

TEST_CASE("cross evaluation fills eight cells") {
    std::map<Subset, FeatureSet> sets;
    const Subset all[] = {Subset::MonoDiscrete, Subset::MonoContinuous, Subset::PolyDiscrete, Subset::PolyContinuous};
    std::uint64_t seed = 10;
    for (Subset s : all) {
        auto d = synthetic(s, 12, seed++);
        assign(d, 6, 2);
        sets.emplace(s, std::move(d));
    }
    std::vector<std::unique_ptr<Network>> nets;
    std::vector<CheckpointMeta> metas(4);
    std::vector<NamedModel> models;
    for (std::size_t i = 0; i < 4; ++i) {
        nets.push_back(std::make_unique<Network>(NetworkConfig{Variant::FxNet}, i));
        metas[i].train_subset = std::string(to_string(all[i]));
        metas[i].feature_checksum = feature_pipeline_checksum();
        metas[i].standardizer.mean.assign(kMelBands, 0.0f);
        metas[i].standardizer.stddev.assign(kMelBands, 1.0f);
    }
    for (std::size_t i = 0; i < 4; ++i) models.push_back({nets[i].get(), &metas[i]});
    std::map<Subset, const FeatureSet*> data;
    for (auto& [k, v] : sets) data[k] = &v;

    const auto m = cross_eval(models, data);
    CHECK(m.cells.size() == 16);
    CHECK(m.populated() == 8);
    for (const auto& c : m.cells) {
        const bool same = is_poly(*parse_subset(c.train_subset)) == is_poly(*parse_subset(c.test_subset));
        CHECK(std::isnan(c.accuracy) == !same);
    }
    const auto tsv = accuracy_matrix_tsv(m);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 5);
    CHECK(tsv.find("-") != std::string::npos);

    metas[2].feature_checksum = "00000000";
    CHECK(kind_of([&] { cross_eval(models, data); }) == ErrorKind::ChecksumMismatch);
}

TEST_CASE("baseline comparison has three rows") {
    auto d = synthetic(Subset::MonoDiscrete, 40, 11);
    assign(d, 24, 8);
    const auto rep = baseline_comparison(d, 1, 1);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].name == "SetNet");
    CHECK(rep.rows[1].name == "MultiNet");
    CHECK(rep.rows[2].name == "FxNet+SetNetCond");
    CHECK(std::isnan(rep.rows[0].classification));
    for (const auto& r : rep.rows)
        for (double v : {r.joint, r.classification, r.estimation})
            if (!std::isnan(v)) {
                CHECK(v >= 0.0);
                CHECK(v <= 100.0);
            }
    CHECK(rep.logs.size() == 4);
    for (const auto& [name, log] : rep.logs) CHECK(log.size() == 1);
    const auto tsv = baseline_tsv(rep);
    CHECK(tsv.find("FxNet+SetNetCond") != std::string::npos);
}

TEST_CASE("report writers") {
    ConfusionMatrix c{};
    c[0][0] = 3;
    c[1][0] = 1;
    const auto tsv = confusion_tsv(c);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 14);
    CHECK(tsv.find("808") != std::string::npos);

    EvalReport r;
    r.variant = "fxnet";
    r.train_subset = "mono-discrete";
    r.test_subset = "mono-discrete";
    r.rows = 4;
    r.classification_accuracy = 75.0;
    const auto s = summary_tsv({r});
    CHECK(s.find("75.00") != std::string::npos);
    CHECK(s.find("\t-") != std::string::npos);

    const auto dir = fs::temp_directory_path() / "fxlab_training_text";
    fs::remove_all(dir);
    write_text(dir / "a" / "s.tsv", s);
    CHECK(read_text(dir / "a" / "s.tsv") == s);
    CHECK(kind_of([&] { read_text(dir / "missing.tsv"); }) == ErrorKind::Io);
    fs::remove_all(dir);
}

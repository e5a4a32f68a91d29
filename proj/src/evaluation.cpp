#include "fxlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fxlab {

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
    if (std::isnan(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<float> gather_targets(const FeatureSet& data, std::span<const std::size_t> rows) {
    std::vector<float> t;
    t.reserve(rows.size() * 2);
    for (std::size_t r : rows) {
        t.push_back(data.targets[2 * r]);
        t.push_back(data.targets[2 * r + 1]);
    }
    return t;
}

std::vector<int> gather_labels(const FeatureSet& data, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(data.labels[r]);
    return out;
}

bool settings_row_correct(std::span<const float> pred, std::span<const float> truth, std::size_t row) {
    for (std::size_t c = 0; c < kNumControls; ++c)
        if (!(std::abs(double(pred[row * kNumControls + c]) - double(truth[row * kNumControls + c])) < kSettingsTolerance))
            return false;
    return true;
}

}  // namespace

Binning binning_for(std::string_view train_subset) {
    const auto subset = parse_subset(train_subset);
    if (subset && !is_discrete(*subset)) return Binning::uniform_bins(10);
    std::set<double> values(kToneGrid.begin(), kToneGrid.end());
    for (EffectId id : kAllEffects)
        for (float g : descriptor(id).gain_grid) values.insert(g);
    return Binning::at_grid({values.begin(), values.end()});
}

EvalReport evaluate(Network& net, const CheckpointMeta& meta, const FeatureSet& data, std::span<const std::size_t> rows,
                    std::span<const int> conditioning) {
    if (rows.empty()) throw Error(ErrorKind::EmptyInput, "nothing to evaluate");
    const Variant v = net.config().variant;
    const auto truth = gather_labels(data, rows);
    const auto p = predict(net, meta.standardizer, data, rows, conditioning.empty() ? std::span<const int>(truth) : conditioning);

    EvalReport r;
    r.variant = std::string(to_string(v));
    r.train_subset = meta.train_subset;
    r.test_subset = std::string(to_string(data.subset));
    r.rows = rows.size();
    if (has_class_head(v)) {
        r.confusion = confusion_matrix(p.classes, truth);
        r.classification_accuracy = classification_accuracy(p.classes, truth);
    }
    if (has_settings_head(v)) {
        const auto targets = gather_targets(data, rows);
        r.settings_accuracy = settings_accuracy(p.settings, targets);
        r.errors = error_stats(p.settings, targets);
        std::vector<float> gp, gt, tp, tt;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            gp.push_back(p.settings[2 * i]);
            gt.push_back(targets[2 * i]);
            if (targets[2 * i + 1] != kAbsentTone) {
                tp.push_back(p.settings[2 * i + 1]);
                tt.push_back(targets[2 * i + 1]);
            }
        }
        const Binning binning = binning_for(meta.train_subset);
        r.gain_bins = binned_bias_skew(gp, gt, binning);
        r.tone_bins = binned_bias_skew(tp, tt, binning);
        if (has_class_head(v)) {
            std::size_t joint = 0;
            for (std::size_t i = 0; i < rows.size(); ++i)
                joint += p.classes[i] == truth[i] && settings_row_correct(p.settings, targets, i);
            r.joint_accuracy = 100.0 * double(joint) / double(rows.size());
        }
    }
    return r;
}

TwinAnalysis twin_analysis(const ConfusionMatrix& m) {
    const std::size_t a = class_index(EffectId::E808), b = class_index(EffectId::TS9);
    TwinAnalysis t;
    for (std::size_t truth : {a, b}) {
        const std::size_t sibling = truth == a ? b : a;
        for (std::size_t j = 0; j < kNumEffects; ++j)
            if (j != truth) t.twin_errors += m[truth][j];
        t.sibling_errors += m[truth][sibling];
        t.twin_predictions += m[truth][a] + m[truth][b];
        t.twin_correct += m[truth][truth];
    }
    t.sibling_share = t.twin_errors ? double(t.sibling_errors) / double(t.twin_errors) : 1.0;
    t.binomial_p = binomial_two_sided_p(std::size_t(t.twin_correct), std::size_t(t.twin_predictions));
    return t;
}

double twin_merged_accuracy(const ConfusionMatrix& m) {
    const std::size_t a = class_index(EffectId::E808), b = class_index(EffectId::TS9);
    long total = 0, correct = 0;
    for (std::size_t i = 0; i < kNumEffects; ++i)
        for (std::size_t j = 0; j < kNumEffects; ++j) {
            total += m[i][j];
            const bool twins = (i == a || i == b) && (j == a || j == b);
            if (i == j || twins) correct += m[i][j];
        }
    if (total == 0) throw Error(ErrorKind::EmptyInput, "empty confusion matrix");
    return 100.0 * double(correct) / double(total);
}

void require_feature_checksum(const CheckpointMeta& meta) {
    const auto current = feature_pipeline_checksum();
    if (meta.feature_checksum != current)
        throw Error(ErrorKind::ChecksumMismatch, "checkpoint features " + meta.feature_checksum +
                                                     " differ from this build's " + current + "; retrain");
}

std::size_t CrossEvalMatrix::populated() const {
    return std::size_t(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !std::isnan(c.accuracy); }));
}

CrossEvalMatrix cross_eval(const std::vector<NamedModel>& models, const std::map<Subset, const FeatureSet*>& datasets) {
    for (const auto& m : models) require_feature_checksum(*m.meta);
    CrossEvalMatrix out;
    const Subset order[] = {Subset::MonoDiscrete, Subset::MonoContinuous, Subset::PolyDiscrete, Subset::PolyContinuous};
    for (Subset train : order)
        for (Subset test : order) {
            CrossEvalEntry cell{std::string(to_string(train)), std::string(to_string(test)), kNotApplicable};
            const auto model = std::find_if(models.begin(), models.end(),
                                            [&](const NamedModel& m) { return m.meta->train_subset == to_string(train); });
            const auto data = datasets.find(test);
            if (model != models.end() && data != datasets.end() && is_poly(train) == is_poly(test)) {
                const auto rows = data->second->rows(Split::Test);
                const auto r = evaluate(*model->net, *model->meta, *data->second, rows);
                cell.accuracy = has_class_head(model->net->config().variant) ? r.classification_accuracy
                                                                             : r.settings_accuracy;
            }
            out.cells.push_back(cell);
        }
    return out;
}

BaselineReport baseline_comparison(const FeatureSet& data, std::uint64_t seed, int epochs, const EpochCallback& on_epoch) {
    const auto rows = data.rows(Split::Test);
    if (rows.empty()) throw Error(ErrorKind::EmptyInput, "test split is empty");
    auto run = [&](Variant v) {
        TrainConfig cfg;
        cfg.variant = v;
        cfg.epochs = epochs;
        cfg.patience = 0;
        cfg.seed = seed;
        return train(cfg, data, on_epoch);
    };
    BaselineReport report;

    auto setnet = run(Variant::SetNet);
    const auto s = evaluate(*setnet.net, setnet.meta, data, rows);
    report.rows.push_back({"SetNet", s.settings_accuracy, kNotApplicable, s.settings_accuracy});
    report.logs["setnet"] = setnet.log;

    auto multinet = run(Variant::MultiNet);
    const auto m = evaluate(*multinet.net, multinet.meta, data, rows);
    report.rows.push_back({"MultiNet", m.joint_accuracy, m.classification_accuracy, m.settings_accuracy});
    report.logs["multinet"] = multinet.log;

    auto fxnet = run(Variant::FxNet);
    auto cond = run(Variant::SetNetCond);
    const auto f = evaluate(*fxnet.net, fxnet.meta, data, rows);
    const auto truth = gather_labels(data, rows);
    const auto fp = predict(*fxnet.net, fxnet.meta.standardizer, data, rows);
    const auto via_predicted = predict(*cond.net, cond.meta.standardizer, data, rows, fp.classes);
    const auto via_truth = evaluate(*cond.net, cond.meta, data, rows);
    const auto targets = gather_targets(data, rows);
    std::size_t joint = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        joint += fp.classes[i] == truth[i] && settings_row_correct(via_predicted.settings, targets, i);
    report.rows.push_back({"FxNet+SetNetCond", 100.0 * double(joint) / double(rows.size()), f.classification_accuracy,
                           via_truth.settings_accuracy});
    report.logs["fxnet"] = fxnet.log;
    report.logs["setnetcond"] = cond.log;
    return report;
}

std::string accuracy_matrix_tsv(const CrossEvalMatrix& m) {
    const char* names[] = {"mono-discrete", "mono-continuous", "poly-discrete", "poly-continuous"};
    std::string out = "train\\test";
    for (const char* n : names) out += std::string("\t") + n;
    out += "\n";
    for (const char* train : names) {
        out += train;
        for (const char* test : names) {
            double v = kNotApplicable;
            for (const auto& c : m.cells)
                if (c.train_subset == train && c.test_subset == test) v = c.accuracy;
            out += "\t" + fmt(v, "%.2f");
        }
        out += "\n";
    }
    return out;
}

std::string confusion_tsv(const ConfusionMatrix& m) {
    std::string out = "true\\pred";
    for (EffectId id : kAllEffects) out += "\t" + std::string(to_string(id));
    out += "\n";
    for (std::size_t i = 0; i < kNumEffects; ++i) {
        out += std::string(to_string(kAllEffects[i]));
        for (std::size_t j = 0; j < kNumEffects; ++j) out += "\t" + std::to_string(m[i][j]);
        out += "\n";
    }
    return out;
}

std::string error_table_tsv(const std::vector<EvalReport>& reports) {
    std::string out = "train\ttest\tgain_mae\tgain_rmse\ttone_mae\ttone_rmse\tall_mae\tall_rmse\n";
    for (const auto& r : reports) {
        if (!r.errors) continue;
        const auto& e = *r.errors;
        out += r.train_subset + "\t" + r.test_subset + "\t" + fmt(e.gain.mae) + "\t" + fmt(e.gain.rmse) + "\t" +
               fmt(e.tone.mae) + "\t" + fmt(e.tone.rmse) + "\t" + fmt(e.overall.mae) + "\t" + fmt(e.overall.rmse) + "\n";
    }
    return out;
}

std::string binned_tsv(const EvalReport& r) {
    std::string out = "control\tbin_lo\tbin_hi\tcenter\tcount\tmean_error\tskew\n";
    auto emit = [&](const char* control, const std::vector<BinStat>& bins) {
        for (const auto& b : bins) {
            out += std::string(control) + "\t" + fmt(b.lo, "%.3f") + "\t" + fmt(b.hi, "%.3f") + "\t" + fmt(b.center, "%.3f") +
                   "\t" + std::to_string(b.count) + "\t" + (b.present ? fmt(b.mean_error, "%.5f") : "absent") + "\t" +
                   (b.present ? fmt(b.skew, "%.5f") : "absent") + "\n";
        }
    };
    emit("gain", r.gain_bins);
    emit("tone", r.tone_bins);
    return out;
}

std::string baseline_tsv(const BaselineReport& report) {
    std::string out = "network\tjoint\tclassification\testimation\n";
    for (const auto& row : report.rows)
        out += row.name + "\t" + fmt(row.joint, "%.2f") + "\t" + fmt(row.classification, "%.2f") + "\t" +
               fmt(row.estimation, "%.2f") + "\n";
    return out;
}

std::string summary_tsv(const std::vector<EvalReport>& reports) {
    std::string out = "variant\ttrain\ttest\trows\tclassification\tsettings\tjoint\n";
    for (const auto& r : reports)
        out += r.variant + "\t" + r.train_subset + "\t" + r.test_subset + "\t" + std::to_string(r.rows) + "\t" +
               fmt(r.classification_accuracy, "%.2f") + "\t" + fmt(r.settings_accuracy, "%.2f") + "\t" +
               fmt(r.joint_accuracy, "%.2f") + "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace fxlab

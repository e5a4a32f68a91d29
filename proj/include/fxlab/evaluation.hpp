#pragma once

#include "fxlab/metrics.hpp"
#include "fxlab/training.hpp"

#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fxlab {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

struct EvalReport {
    std::string variant;
    std::string train_subset;
    std::string test_subset;
    std::size_t rows = 0;
    double classification_accuracy = kNotApplicable;
    double settings_accuracy = kNotApplicable;
    double joint_accuracy = kNotApplicable;  // class correct and settings accurate
    ConfusionMatrix confusion{};
    std::optional<ErrorStats> errors;
    std::vector<BinStat> gain_bins;
    std::vector<BinStat> tone_bins;
};

// Grid values for discrete-trained models, ten uniform bins otherwise.
Binning binning_for(std::string_view train_subset);

// Evaluates `rows` of `data`. SetNetCond is conditioned on `conditioning`
// when given, else on the ground-truth class.
EvalReport evaluate(Network& net, const CheckpointMeta& meta, const FeatureSet& data, std::span<const std::size_t> rows,
                    std::span<const int> conditioning = {});

struct TwinAnalysis {
    long twin_errors = 0;       // 808- or TS9-true rows predicted wrong
    long sibling_errors = 0;    // ... of which predicted as the other twin
    double sibling_share = 0.0; // sibling_errors / twin_errors, 1 when there are no errors
    long twin_predictions = 0;  // twin-true rows predicted as either twin
    long twin_correct = 0;      // ... of which the exact twin
    double binomial_p = 1.0;    // two-sided test of twin_correct against a fair coin
};

TwinAnalysis twin_analysis(const ConfusionMatrix& confusion);

// Accuracy with 808 and TS9 merged into one label.
double twin_merged_accuracy(const ConfusionMatrix& confusion);

// Throws ChecksumMismatch when the checkpoint was trained on other features.
void require_feature_checksum(const CheckpointMeta& meta);

struct CrossEvalEntry {
    std::string train_subset;
    std::string test_subset;
    double accuracy = kNotApplicable;
};

// Every checkpoint against every dataset of the same phony (mono or poly).
// The accuracy is classification accuracy for classifiers and settings
// accuracy for estimators, on the test split.
struct CrossEvalMatrix {
    std::vector<CrossEvalEntry> cells;
    std::size_t populated() const;
};

struct NamedModel {
    Network* net = nullptr;
    const CheckpointMeta* meta = nullptr;
};

CrossEvalMatrix cross_eval(const std::vector<NamedModel>& models, const std::map<Subset, const FeatureSet*>& datasets);

struct BaselineRow {
    std::string name;
    double joint = kNotApplicable;
    double classification = kNotApplicable;
    double estimation = kNotApplicable;
};

struct BaselineReport {
    std::vector<BaselineRow> rows;
    std::map<std::string, std::vector<EpochLog>> logs;
};

// SetNet, MultiNet and FxNet + SetNetCond trained for `epochs` each without
// early stopping on the given (Mono Discrete) data, scored on its test split.
BaselineReport baseline_comparison(const FeatureSet& data, std::uint64_t seed, int epochs = 50,
                                   const EpochCallback& on_epoch = {});

// Tab-separated report files for external plotting.
std::string accuracy_matrix_tsv(const CrossEvalMatrix& m);
std::string confusion_tsv(const ConfusionMatrix& m);
std::string error_table_tsv(const std::vector<EvalReport>& reports);
std::string binned_tsv(const EvalReport& report);
std::string baseline_tsv(const BaselineReport& report);
std::string summary_tsv(const std::vector<EvalReport>& reports);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fxlab

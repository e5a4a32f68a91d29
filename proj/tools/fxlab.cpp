// fxlab command line: dataset generation, training, evaluation, inference.

#include "fxlab/evaluation.hpp"
#include "fxlab/inference.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fxlab;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kIo = 3, kNumerical = 4 };

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage:
        case ErrorKind::InvalidSettings:
            return kUsage;
        case ErrorKind::Io:
        case ErrorKind::TooShort:
        case ErrorKind::ChecksumMismatch:
            return kIo;
        case ErrorKind::Numerical:
            return kNumerical;
        default:
            return kOther;
    }
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// The resolved arguments of a command, enough to run it again with `replay`.
void write_snapshot(const fs::path& path, const std::string& command, const std::vector<std::string>& args,
                    const json& resolved) {
    json j{{"command", command}, {"args", args}, {"resolved", resolved}};
    write_text(path, j.dump(2) + "\n");
}

BuildOptions build_options(const std::string& scale) {
    BuildOptions o;
    if (scale == "paper") {
        o.chords = 420;
        o.continuous_per_effect = 10000;
    }
    return o;
}

struct GenArgs {
    std::string subset = "mono-discrete";
    std::string scale = "desk";
    std::uint64_t seed = 0;
    std::string out;
    long per_effect = -1;
    long chords = -1;
};

DatasetManifest generate(const GenArgs& a) {
    const auto subset = parse_subset(a.subset);
    if (!subset) throw Error(ErrorKind::Usage, "unknown subset " + a.subset);
    BuildOptions opts = build_options(a.scale);
    if (a.per_effect > 0) opts.continuous_per_effect = std::size_t(a.per_effect);
    if (a.chords > 0) opts.chords = std::size_t(a.chords);
    const auto notes = note_pool(a.scale == "paper" ? paper_pool() : desk_pool());
    const std::vector<EffectId> effects(kAllEffects.begin(), kAllEffects.end());
    return is_discrete(*subset) ? build_discrete(effects, notes, is_poly(*subset), a.seed, opts)
                                : build_continuous(effects, notes, opts.continuous_per_effect, is_poly(*subset), a.seed, opts);
}

std::vector<std::string> gen_args_list(const GenArgs& a) {
    std::vector<std::string> v{"gen-dataset", "--subset", a.subset, "--scale", a.scale, "--seed", std::to_string(a.seed),
                               "--out", a.out};
    if (a.per_effect > 0) v.insert(v.end(), {"--per-effect", std::to_string(a.per_effect)});
    if (a.chords > 0) v.insert(v.end(), {"--chords", std::to_string(a.chords)});
    return v;
}

int cmd_gen_dataset(const GenArgs& a) {
    const auto manifest = generate(a);
    materialize(manifest, a.out, default_workers());
    std::map<EffectId, std::size_t> counts;
    for (const auto& r : manifest.records) ++counts[r.effect];
    std::printf("%s: %zu records (bank %s)\n", a.subset.c_str(), manifest.records.size(), manifest.bank_config_hash.c_str());
    for (EffectId id : kAllEffects) std::printf("  %-4s %zu\n", std::string(to_string(id)).c_str(), counts[id]);
    write_snapshot(fs::path(a.out) / "config.json", "gen-dataset", gen_args_list(a),
                   {{"subset", a.subset}, {"scale", a.scale}, {"seed", a.seed}, {"records", manifest.records.size()}});
    return kOk;
}

struct TrainArgs {
    std::string variant = "fxnet";
    std::string data;
    std::string out;
    TrainConfig cfg;
};

std::vector<std::string> train_args_list(const TrainArgs& a) {
    return {"train", "--variant", a.variant, "--data", a.data, "--out", a.out, "--epochs", std::to_string(a.cfg.epochs),
            "--patience", std::to_string(a.cfg.patience), "--batch-size", std::to_string(a.cfg.batch_size), "--lr",
            fmt_double(a.cfg.lr), "--seed", std::to_string(a.cfg.seed), "--settings-weight",
            fmt_double(a.cfg.settings_weight)};
}

int cmd_train(TrainArgs a) {
    const auto variant = parse_variant(a.variant);
    if (!variant) throw Error(ErrorKind::Usage, "unknown variant " + a.variant);
    a.cfg.variant = *variant;
    std::printf("variant=%s epochs=%d patience=%d batch_size=%zu lr=%s seed=%llu\n", a.variant.c_str(), a.cfg.epochs,
                a.cfg.patience, a.cfg.batch_size, fmt_double(a.cfg.lr).c_str(), (unsigned long long)a.cfg.seed);
    std::fflush(stdout);
    const auto manifest = read_manifest(fs::path(a.data) / "manifest.jsonl");
    const auto data = load_feature_set(manifest, a.data);
    auto result = train(a.cfg, data, [](const EpochLog& e) {
        std::printf("epoch %3d  loss %.5f  valid %.2f%s\n", e.epoch, e.train_loss, e.valid_metric, e.improved ? " *" : "");
        std::fflush(stdout);
    });
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(out, *result.net, result.meta);
    write_text(out.string() + ".log.tsv", training_log_text(result.log));
    write_snapshot(out.string() + ".config.json", "train", train_args_list(a),
                   {{"variant", a.variant},
                    {"epochs", a.cfg.epochs},
                    {"patience", a.cfg.patience},
                    {"batch_size", a.cfg.batch_size},
                    {"lr", a.cfg.lr},
                    {"seed", a.cfg.seed},
                    {"settings_weight", a.cfg.settings_weight},
                    {"best_epoch", result.meta.best_epoch},
                    {"best_metric", result.meta.best_metric}});
    std::printf("best epoch %d (%.2f) -> %s\n", result.meta.best_epoch, result.meta.best_metric, a.out.c_str());
    return kOk;
}

struct EvalArgs {
    std::vector<std::string> checkpoints;
    std::vector<std::string> data;
    std::string out;
};

std::string report_tag(const EvalReport& r) { return r.variant + "_" + r.train_subset + "__" + r.test_subset; }

int cmd_eval(const EvalArgs& a) {
    std::vector<LoadedModel> models;
    for (const auto& c : a.checkpoints) {
        models.push_back(load_checkpoint(c));
        require_feature_checksum(models.back().meta);
    }
    std::map<Subset, FeatureSet> sets;
    for (const auto& d : a.data) {
        const auto manifest = read_manifest(fs::path(d) / "manifest.jsonl");
        sets[manifest.subset] = load_feature_set(manifest, d);
    }
    const fs::path out(a.out);
    std::vector<EvalReport> reports;
    std::string twins = "variant\ttrain\ttest\ttwin_errors\tsibling_errors\tsibling_share\ttwin_predictions\ttwin_correct\t"
                        "binomial_p\ttwin_merged_accuracy\n";
    for (auto& m : models) {
        const auto train_subset = parse_subset(m.meta.train_subset);
        for (const auto& [subset, set] : sets) {
            if (train_subset && is_poly(*train_subset) != is_poly(subset)) continue;
            const auto rows = set.rows(Split::Test);
            auto r = evaluate(*m.net, m.meta, set, rows);
            if (has_class_head(m.meta.config.variant)) {
                write_text(out / ("confusion_" + report_tag(r) + ".tsv"), confusion_tsv(r.confusion));
                const auto t = twin_analysis(r.confusion);
                char line[256];
                std::snprintf(line, sizeof line, "%s\t%s\t%s\t%ld\t%ld\t%.4f\t%ld\t%ld\t%.6g\t%.2f\n", r.variant.c_str(),
                              r.train_subset.c_str(), r.test_subset.c_str(), t.twin_errors, t.sibling_errors,
                              t.sibling_share, t.twin_predictions, t.twin_correct, t.binomial_p,
                              twin_merged_accuracy(r.confusion));
                twins += line;
            }
            if (has_settings_head(m.meta.config.variant))
                write_text(out / ("binned_" + report_tag(r) + ".tsv"), binned_tsv(r));
            std::printf("%-10s %-16s -> %-16s class %s  settings %s\n", r.variant.c_str(), r.train_subset.c_str(),
                        r.test_subset.c_str(),
                        std::isnan(r.classification_accuracy) ? "-" : fmt_double(r.classification_accuracy).c_str(),
                        std::isnan(r.settings_accuracy) ? "-" : fmt_double(r.settings_accuracy).c_str());
            reports.push_back(std::move(r));
        }
    }
    write_text(out / "summary.tsv", summary_tsv(reports));
    write_text(out / "errors.tsv", error_table_tsv(reports));
    write_text(out / "twins.tsv", twins);

    std::map<std::string, std::vector<NamedModel>> by_variant;
    for (auto& m : models) by_variant[std::string(to_string(m.meta.config.variant))].push_back({m.net.get(), &m.meta});
    std::map<Subset, const FeatureSet*> ptrs;
    for (const auto& [s, set] : sets) ptrs[s] = &set;
    for (const auto& [variant, group] : by_variant)
        write_text(out / ("accuracy_matrix_" + variant + ".tsv"), accuracy_matrix_tsv(cross_eval(group, ptrs)));

    std::vector<std::string> args{"eval"};
    for (const auto& c : a.checkpoints) args.insert(args.end(), {"--checkpoint", c});
    for (const auto& d : a.data) args.insert(args.end(), {"--data", d});
    args.insert(args.end(), {"--out", a.out});
    write_snapshot(out / "config.json", "eval", args, {{"checkpoints", a.checkpoints}, {"data", a.data}});
    return kOk;
}

int cmd_classify(const std::string& wav, const std::string& checkpoint) {
    auto model = Model::load(checkpoint);
    for (const auto& [id, p] : model.ranked(read_wav(wav)))
        std::printf("%-4s %.6f\n", std::string(to_string(id)).c_str(), p);
    return kOk;
}

int cmd_estimate(const std::string& wav, const std::string& checkpoint, const std::string& effect_name) {
    auto model = Model::load(checkpoint);
    std::optional<EffectId> effect;
    if (!effect_name.empty()) {
        effect = parse_effect(effect_name);
        if (!effect) throw Error(ErrorKind::Usage, "unknown effect " + effect_name);
    }
    const auto e = model.estimate(read_wav(wav), effect);
    std::printf("gain %.3f\n", e.gain);
    if (e.tone)
        std::printf("tone %.3f\n", *e.tone);
    else
        std::printf("tone absent\n");
    return kOk;
}

struct BaselineArgs {
    std::string data;
    std::string out;
    int epochs = 50;
    std::uint64_t seed = 0;
};

int cmd_baseline(const BaselineArgs& a) {
    const auto manifest = read_manifest(fs::path(a.data) / "manifest.jsonl");
    const auto data = load_feature_set(manifest, a.data);
    int last = 0;
    const auto report = baseline_comparison(data, a.seed, a.epochs, [&](const EpochLog& e) {
        if (e.epoch < last) std::printf("--\n");
        last = e.epoch;
        std::printf("epoch %3d  loss %.5f  valid %.2f\n", e.epoch, e.train_loss, e.valid_metric);
        std::fflush(stdout);
    });
    const fs::path out(a.out);
    write_text(out / "baseline.tsv", baseline_tsv(report));
    for (const auto& [name, log] : report.logs) write_text(out / (name + ".log.tsv"), training_log_text(log));
    write_snapshot(out / "config.json", "baseline",
                   {"baseline", "--data", a.data, "--out", a.out, "--epochs", std::to_string(a.epochs), "--seed",
                    std::to_string(a.seed)},
                   {{"epochs", a.epochs}, {"seed", a.seed}});
    std::fputs(baseline_tsv(report).c_str(), stdout);
    return kOk;
}

int cmd_bank() {
    std::printf("bank %s\n", bank_config_hash().c_str());
    for (EffectId id : kAllEffects) {
        std::string controls;
        for (auto c : control_inventory(id)) controls += (controls.empty() ? "" : ",") + std::string(c);
        std::printf("%-4s controls=%s grid=%zu\n", std::string(to_string(id)).c_str(), controls.c_str(),
                    discrete_grid(id).size());
    }
    return kOk;
}

int run(const std::vector<std::string>& argv);

int cmd_replay(const std::string& snapshot) {
    const auto j = json::parse(read_text(snapshot));
    auto args = j.at("args").get<std::vector<std::string>>();
    args.insert(args.begin(), "fxlab");
    return run(args);
}

struct PipelineArgs {
    GenArgs gen;
    TrainArgs train;
};

int cmd_pipeline(PipelineArgs a, const std::string& out) {
    a.gen.out = (fs::path(out) / "data").string();
    a.train.data = a.gen.out;
    a.train.out = (fs::path(out) / "model.ckpt").string();
    write_snapshot(fs::path(out) / "config.json", "pipeline",
                   {"pipeline", "--subset", a.gen.subset, "--scale", a.gen.scale, "--seed", std::to_string(a.gen.seed),
                    "--variant", a.train.variant, "--epochs", std::to_string(a.train.cfg.epochs), "--patience",
                    std::to_string(a.train.cfg.patience), "--batch-size", std::to_string(a.train.cfg.batch_size), "--lr",
                    fmt_double(a.train.cfg.lr), "--out", out},
                   {{"subset", a.gen.subset}, {"scale", a.gen.scale}, {"seed", a.gen.seed}, {"variant", a.train.variant}});
    if (int rc = cmd_gen_dataset(a.gen)) return rc;
    if (int rc = cmd_train(a.train)) return rc;
    return cmd_eval({{a.train.out}, {a.gen.out}, (fs::path(out) / "reports").string()});
}

int run(const std::vector<std::string>& argv) {
    CLI::App app{"fxlab: guitar effect recognition laboratory"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-dataset", "Render a sub-dataset (wav tree, feature cache, manifest)");
    auto add_gen = [](CLI::App* c, GenArgs& a, bool with_out) {
        c->add_option("--subset", a.subset, "mono-discrete | mono-continuous | poly-discrete | poly-continuous")
            ->check(CLI::IsMember({"mono-discrete", "mono-continuous", "poly-discrete", "poly-continuous"}));
        c->add_option("--scale", a.scale, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
        c->add_option("--seed", a.seed);
        c->add_option("--per-effect", a.per_effect, "continuous records per effect");
        c->add_option("--chords", a.chords, "polyphonic source count");
        if (with_out) c->add_option("--out", a.out, "output directory")->required();
    };
    add_gen(g, gen, true);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a network on a generated dataset");
    auto add_train = [](CLI::App* c, TrainArgs& a, bool with_paths) {
        c->add_option("--variant", a.variant, "fxnet | setnet | multinet | setnetcond")
            ->check(CLI::IsMember({"fxnet", "setnet", "multinet", "setnetcond"}));
        c->add_option("--epochs", a.cfg.epochs);
        c->add_option("--patience", a.cfg.patience, "0 disables early stopping");
        c->add_option("--batch-size", a.cfg.batch_size);
        c->add_option("--lr", a.cfg.lr);
        c->add_option("--settings-weight", a.cfg.settings_weight, "multinet estimation loss weight");
        if (with_paths) {
            c->add_option("--seed", a.cfg.seed);
            c->add_option("--data", a.data, "dataset directory")->required();
            c->add_option("--out", a.out, "checkpoint path")->required();
        }
    };
    add_train(t, tr, true);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate checkpoints on test splits and write report files");
    e->add_option("--checkpoint", ev.checkpoints)->required();
    e->add_option("--data", ev.data)->required();
    e->add_option("--out", ev.out)->required();

    std::string wav, checkpoint, effect;
    auto* cl = app.add_subcommand("classify", "Rank the 13 effect classes for a wav file");
    cl->add_option("wav", wav)->required();
    cl->add_option("--checkpoint", checkpoint)->required();
    auto* es = app.add_subcommand("estimate", "Estimate gain and tone for a wav file");
    es->add_option("wav", wav)->required();
    es->add_option("--checkpoint", checkpoint)->required();
    es->add_option("--effect", effect, "effect class (setnetcond)");

    BaselineArgs bl;
    auto* b = app.add_subcommand("baseline", "SetNet vs MultiNet vs FxNet+SetNetCond at a fixed epoch budget");
    b->add_option("--data", bl.data)->required();
    b->add_option("--out", bl.out)->required();
    b->add_option("--epochs", bl.epochs);
    b->add_option("--seed", bl.seed);

    auto* bk = app.add_subcommand("bank", "Describe the effect bank");

    PipelineArgs pl;
    std::string pipeline_out;
    auto* p = app.add_subcommand("pipeline", "gen-dataset, train and eval in one run");
    add_gen(p, pl.gen, false);
    add_train(p, pl.train, false);
    p->add_option("--out", pipeline_out)->required();

    std::string snapshot;
    auto* rp = app.add_subcommand("replay", "Re-run a command from its config.json snapshot");
    rp->add_option("snapshot", snapshot)->required();

    std::vector<const char*> cargv;
    for (const auto& s : argv) cargv.push_back(s.c_str());
    try {
        app.parse(int(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    if (*g) return cmd_gen_dataset(gen);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*cl) return cmd_classify(wav, checkpoint);
    if (*es) return cmd_estimate(wav, checkpoint, effect);
    if (*b) return cmd_baseline(bl);
    if (*bk) return cmd_bank();
    if (*p) {
        pl.train.cfg.seed = pl.gen.seed;
        return cmd_pipeline(pl, pipeline_out);
    }
    if (*rp) return cmd_replay(snapshot);
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv, argv + argc));
    } catch (const Error& err) {
        std::fprintf(stderr, "fxlab: %s error: %s\n", to_string(err.kind()), err.what());
        return exit_code(err.kind());
    } catch (const std::exception& err) {
        std::fprintf(stderr, "fxlab: %s\n", err.what());
        return kOther;
    }
}

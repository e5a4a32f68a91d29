#include "fxlab/checkpoint.hpp"
#include "fxlab/dataset.hpp"
#include "fxlab/effects.hpp"
#include "fxlab/error.hpp"
#include "fxlab/evaluation.hpp"
#include "fxlab/features.hpp"
#include "fxlab/inference.hpp"
#include "fxlab/metrics.hpp"
#include "fxlab/training.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace fxlab;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

AudioBuffer to_audio(const FloatArray& samples, int sample_rate) {
    if (samples.ndim() != 1) throw Error(ErrorKind::Shape, "audio must be one-dimensional");
    AudioBuffer a;
    a.sample_rate = sample_rate;
    a.samples.assign(samples.data(), samples.data() + samples.size());
    return a;
}

py::array_t<float> to_array(const std::vector<float>& v) { return py::array_t<float>(py::ssize_t(v.size()), v.data()); }

EffectId effect_arg(const std::string& name) {
    const auto id = parse_effect(name);
    if (!id) throw Error(ErrorKind::Usage, "unknown effect " + name);
    return *id;
}

template <typename E, typename Names>
E enum_arg(const std::string& name, const Names& values, const char* what) {
    for (E v : values)
        if (to_string(v) == name) return v;
    throw Error(ErrorKind::Usage, std::string("unknown ") + what + " " + name);
}

std::vector<float> rows_arg(const FloatArray& a, std::size_t cols) {
    if (a.ndim() != 2 || std::size_t(a.shape(1)) != cols)
        throw Error(ErrorKind::Shape, "expected an array of shape (rows, " + std::to_string(cols) + ")");
    return {a.data(), a.data() + a.size()};
}

std::size_t generate_dataset(const std::string& subset_name, const std::filesystem::path& out, std::uint64_t seed,
                             const std::string& scale, long per_effect, long chords, unsigned workers) {
    const auto subset = parse_subset(subset_name);
    if (!subset) throw Error(ErrorKind::Usage, "unknown subset " + subset_name);
    if (scale != "desk" && scale != "paper") throw Error(ErrorKind::Usage, "scale must be desk or paper");
    BuildOptions opts;
    if (scale == "paper") {
        opts.chords = 420;
        opts.continuous_per_effect = 10000;
    }
    if (per_effect > 0) opts.continuous_per_effect = std::size_t(per_effect);
    if (chords > 0) opts.chords = std::size_t(chords);
    const auto notes = note_pool(scale == "paper" ? paper_pool() : desk_pool());
    const std::vector<EffectId> effects(kAllEffects.begin(), kAllEffects.end());
    const auto manifest = is_discrete(*subset)
                              ? build_discrete(effects, notes, is_poly(*subset), seed, opts)
                              : build_continuous(effects, notes, opts.continuous_per_effect, is_poly(*subset), seed, opts);
    py::gil_scoped_release release;
    materialize(manifest, out, workers ? workers : default_workers());
    return manifest.records.size();
}

py::list train_model(const std::filesystem::path& data_dir, const std::filesystem::path& out, const std::string& variant,
                     int epochs, int patience, std::size_t batch_size, double lr, std::uint64_t seed) {
    TrainConfig cfg;
    const auto v = parse_variant(variant);
    if (!v) throw Error(ErrorKind::Usage, "unknown variant " + variant);
    cfg.variant = *v;
    cfg.epochs = epochs;
    cfg.patience = patience;
    cfg.batch_size = batch_size;
    cfg.lr = lr;
    cfg.seed = seed;
    TrainResult result;
    {
        py::gil_scoped_release release;
        const auto data = load_feature_set(read_manifest(data_dir / "manifest.jsonl"), data_dir);
        result = train(cfg, data);
        if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
        save_checkpoint(out, *result.net, result.meta);
    }
    py::list log;
    for (const auto& e : result.log)
        log.append(py::dict(py::arg("epoch") = e.epoch, py::arg("train_loss") = e.train_loss,
                            py::arg("valid_metric") = e.valid_metric, py::arg("improved") = e.improved));
    return log;
}

}  // namespace

PYBIND11_MODULE(_fxlab, m) {
    m.doc() = "Guitar effect synthesis, features and recognition networks";

    py::register_exception<Error>(m, "FxlabError", PyExc_RuntimeError);

    m.attr("SAMPLE_RATE") = kSampleRate;
    m.attr("CLIP_SAMPLES") = kClipSamples;

    py::list effects;
    for (EffectId id : kAllEffects) effects.append(std::string(to_string(id)));
    m.attr("EFFECTS") = effects;

    m.def("controls", [](const std::string& effect) {
        std::vector<std::string> names;
        for (auto c : control_inventory(effect_arg(effect))) names.emplace_back(c);
        return names;
    });

    m.def("discrete_grid", [](const std::string& effect) {
        std::vector<std::pair<float, std::optional<float>>> grid;
        for (const auto& s : discrete_grid(effect_arg(effect))) grid.emplace_back(s.gain, s.tone);
        return grid;
    });

    m.def(
        "process",
        [](const FloatArray& samples, const std::string& effect, float gain, std::optional<float> tone, float level,
           int sample_rate) {
            EffectSettings s;
            s.gain = gain;
            s.tone = tone;
            s.level = level;
            auto audio = to_audio(samples, sample_rate);
            AudioBuffer out;
            {
                py::gil_scoped_release release;
                out = process(audio, effect_arg(effect), s);
            }
            return to_array(out.samples);
        },
        py::arg("samples"), py::arg("effect"), py::arg("gain"), py::arg("tone") = py::none(), py::arg("level") = 1.0f,
        py::arg("sample_rate") = kSampleRate);

    m.def(
        "synth_note",
        [](int midi, const std::string& style, const std::string& pickup, const std::string& variant, std::uint64_t seed) {
            NoteSpec n;
            n.midi_pitch = midi;
            n.pluck_style = enum_arg<PluckStyle>(style, std::array{PluckStyle::Soft, PluckStyle::Hard, PluckStyle::Muted}, "style");
            n.pickup = enum_arg<Pickup>(pickup, std::array{Pickup::Bridge, Pickup::Neck}, "pickup");
            n.guitar_variant = enum_arg<GuitarVariant>(variant, std::array{GuitarVariant::A, GuitarVariant::B}, "variant");
            return to_array(synth_note(n, seed).samples);
        },
        py::arg("midi"), py::arg("style") = "hard", py::arg("pickup") = "bridge", py::arg("variant") = "A",
        py::arg("seed") = 0);

    m.def(
        "normalize_peak",
        [](const FloatArray& samples, double target_dbfs) {
            return to_array(normalize_peak(to_audio(samples, kSampleRate), target_dbfs).samples);
        },
        py::arg("samples"), py::arg("target_dbfs") = -6.0);

    m.def(
        "featurize",
        [](const FloatArray& samples, int sample_rate) {
            const auto f = featurize(to_audio(samples, sample_rate));
            py::array_t<float> out({py::ssize_t(f.frames), py::ssize_t(f.bands)});
            std::copy(f.values.begin(), f.values.end(), out.mutable_data());
            return out;
        },
        py::arg("samples"), py::arg("sample_rate") = kSampleRate);

    m.def("read_wav", [](const std::filesystem::path& path) {
        auto a = read_wav(path);
        return py::make_tuple(to_array(a.samples), a.sample_rate);
    });
    m.def(
        "write_wav",
        [](const std::filesystem::path& path, const FloatArray& samples, int sample_rate) {
            write_wav(path, to_audio(samples, sample_rate));
        },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate") = kSampleRate);

    m.def(
        "settings_accuracy",
        [](const FloatArray& preds, const FloatArray& targets) {
            return settings_accuracy(rows_arg(preds, kNumControls), rows_arg(targets, kNumControls));
        },
        py::arg("preds"), py::arg("targets"));
    m.def("skewness", [](const std::vector<double>& v) { return skewness(v); });
    m.def("binomial_two_sided_p", &binomial_two_sided_p, py::arg("k"), py::arg("n"), py::arg("p") = 0.5);

    m.def("generate_dataset", &generate_dataset, py::arg("subset"), py::arg("out"), py::arg("seed") = 0,
          py::arg("scale") = "desk", py::arg("per_effect") = -1, py::arg("chords") = -1, py::arg("workers") = 0);

    m.def("train", &train_model, py::arg("data"), py::arg("out"), py::arg("variant") = "fxnet", py::arg("epochs") = 100,
          py::arg("patience") = 15, py::arg("batch_size") = 100, py::arg("lr") = 0.001, py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def(py::init([](const std::filesystem::path& path) { return Model::load(path); }), py::arg("path"))
        .def_property_readonly("variant", [](const Model& self) { return std::string(to_string(self.meta().config.variant)); })
        .def_property_readonly("train_subset", [](const Model& self) { return self.meta().train_subset; })
        .def(
            "classify",
            [](Model& self, const FloatArray& samples, int sample_rate) {
                py::list out;
                for (const auto& [id, p] : self.ranked(to_audio(samples, sample_rate)))
                    out.append(py::make_tuple(std::string(to_string(id)), p));
                return out;
            },
            py::arg("samples"), py::arg("sample_rate") = kSampleRate)
        .def(
            "estimate",
            [](Model& self, const FloatArray& samples, std::optional<std::string> effect, int sample_rate) {
                std::optional<EffectId> id;
                if (effect) id = effect_arg(*effect);
                const auto e = self.estimate(to_audio(samples, sample_rate), id);
                return py::dict(py::arg("gain") = e.gain, py::arg("tone") = e.tone);
            },
            py::arg("samples"), py::arg("effect") = py::none(), py::arg("sample_rate") = kSampleRate);
}

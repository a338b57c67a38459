#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "framesync/datagen.hpp"
#include "framesync/eval.hpp"
#include "framesync/predictors.hpp"

namespace py = pybind11;
using namespace framesync;

namespace {

py::array_t<double> values_2d(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

EmbeddingSequence seq_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                                 double fps, const std::string& source_id) {
    if (a.ndim() != 2) throw ArgError("embedding array must be 2-D (frames x dim)");
    EmbeddingSequence seq;
    seq.frames = static_cast<std::size_t>(a.shape(0));
    seq.dim = static_cast<std::size_t>(a.shape(1));
    seq.fps = fps;
    seq.source_id = source_id;
    seq.values.assign(a.data(), a.data() + a.size());
    seq.validate();
    return seq;
}

SimilarityMatrix matrix_from_array(
    py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw ArgError("similarity matrix must be 2-D");
    SimilarityMatrix m;
    m.rows = static_cast<std::size_t>(a.shape(0));
    m.cols = static_cast<std::size_t>(a.shape(1));
    m.values.assign(a.data(), a.data() + a.size());
    return m;
}

std::vector<BenchmarkPredictor> make_predictors(
    const std::vector<std::string>& names,
    const std::map<std::string, nn::ModelParams>& models) {
    std::vector<BenchmarkPredictor> out;
    for (const std::string& name : names) {
        const auto kind = predictor_from_name(name);
        if (!kind) throw ArgError("unknown predictor '" + name + "'");
        BenchmarkPredictor p;
        p.kind = *kind;
        if (predictor_is_learned(*kind)) {
            const auto it = models.find(name);
            if (it == models.end())
                throw ArgError("learned predictor '" + name + "' needs a model");
            p.model = &it->second;
        }
        out.push_back(p);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "video stream synchronization from per-frame embeddings";

    py::class_<EmbeddingSequence>(m, "EmbeddingSequence")
        .def(py::init(&seq_from_array), py::arg("values"), py::arg("fps") = 29.97,
             py::arg("source_id") = "")
        .def_readonly("frames", &EmbeddingSequence::frames)
        .def_readonly("dim", &EmbeddingSequence::dim)
        .def_readonly("fps", &EmbeddingSequence::fps)
        .def_readonly("source_id", &EmbeddingSequence::source_id)
        .def_property_readonly(
            "values",
            [](const EmbeddingSequence& s) { return values_2d(s.values, s.frames, s.dim); })
        .def("__repr__", [](const EmbeddingSequence& s) {
            return "<EmbeddingSequence " + std::to_string(s.frames) + "x" +
                   std::to_string(s.dim) + ">";
        });

    py::class_<SimilarityMatrix>(m, "SimilarityMatrix")
        .def(py::init(&matrix_from_array), py::arg("values"))
        .def_readonly("rows", &SimilarityMatrix::rows)
        .def_readonly("cols", &SimilarityMatrix::cols)
        .def_property_readonly(
            "values",
            [](const SimilarityMatrix& s) { return values_2d(s.values, s.rows, s.cols); })
        .def_property_readonly("normalized", [](const SimilarityMatrix& s) {
            return s.normalized == MatrixNorm::row_softmax ? "row_softmax" : "raw";
        });

    py::class_<SyncPrediction>(m, "SyncPrediction")
        .def_readonly("offset", &SyncPrediction::offset)
        .def_readonly("adjusted", &SyncPrediction::adjusted)
        .def_property_readonly("raw_value",
                               [](const SyncPrediction& p) { return p.raw_value; })
        .def_property_readonly(
            "predictor", [](const SyncPrediction& p) { return predictor_name(p.predictor); })
        .def("__repr__", [](const SyncPrediction& p) {
            return "<SyncPrediction " + std::string(predictor_name(p.predictor)) + " " +
                   std::to_string(p.offset) + ">";
        });

    py::class_<nn::ModelParams>(m, "ModelParams")
        .def_readonly("kind_tag", &nn::ModelParams::kind_tag)
        .def_readonly("input_pad", &nn::ModelParams::input_pad)
        .def_readonly("class_count", &nn::ModelParams::class_count)
        .def_property_readonly("param_count", &nn::ModelParams::param_count);

    py::class_<LabeledPair>(m, "LabeledPair")
        .def(py::init([](const EmbeddingSequence& v1, const EmbeddingSequence& v2,
                         long true_offset, std::uint64_t seed) {
                 LabeledPair p;
                 p.v1 = v1;
                 p.v2 = v2;
                 p.true_offset = true_offset;
                 p.seed = seed;
                 return p;
             }),
             py::arg("v1"), py::arg("v2"), py::arg("true_offset") = 0, py::arg("seed") = 0)
        .def_readonly("v1", &LabeledPair::v1)
        .def_readonly("v2", &LabeledPair::v2)
        .def_readonly("true_offset", &LabeledPair::true_offset)
        .def_readonly("seed", &LabeledPair::seed)
        .def_property_readonly(
            "injection", [](const LabeledPair& p) { return injection_name(p.injection); });

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init([](std::size_t frames, std::size_t dim, double walk_sigma,
                         double view_noise_sigma, double positional_weight, std::uint64_t seed,
                         bool identity_views) {
                 SynthConfig cfg;
                 cfg.frames = frames;
                 cfg.dim = dim;
                 cfg.walk_sigma = walk_sigma;
                 cfg.view_noise_sigma = view_noise_sigma;
                 cfg.positional_weight = positional_weight;
                 cfg.seed = seed;
                 cfg.identity_views = identity_views;
                 cfg.validate();
                 return cfg;
             }),
             py::arg("frames") = 120, py::arg("dim") = 32, py::arg("walk_sigma") = 0.1,
             py::arg("view_noise_sigma") = 0.0, py::arg("positional_weight") = 0.0,
             py::arg("seed") = 0, py::arg("identity_views") = false)
        .def_readwrite("frames", &SynthConfig::frames)
        .def_readwrite("dim", &SynthConfig::dim)
        .def_readwrite("seed", &SynthConfig::seed);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("per_pair_errors", &EvalReport::per_pair_errors)
        .def_readonly("mean_abs_error", &EvalReport::mean_abs_error)
        .def_readonly("ci_half_width", &EvalReport::ci_half_width)
        .def_readonly("n", &EvalReport::n)
        .def_readonly("predictor", &EvalReport::predictor)
        .def_readonly("dataset", &EvalReport::dataset)
        .def_readonly("excluded", &EvalReport::excluded)
        .def("to_json", [](const EvalReport& r) { return r.to_json().dump(); });

    // embeddings
    m.def("read_eseq", &read_eseq, py::arg("path"));
    m.def("write_eseq", &write_eseq, py::arg("seq"), py::arg("path"));
    m.def("extract_pixel_features", &extract_pixel_features, py::arg("frame_dir"),
          py::arg("with_temporal_diff") = false);
    m.def("sliding_window_pool", &sliding_window_pool, py::arg("seq"), py::arg("window"));
    m.def("noise_substitute", &noise_substitute, py::arg("seq"), py::arg("seed"));

    // simmatrix
    m.def("pairwise_neg_l2", &pairwise_neg_l2, py::arg("a"), py::arg("b"));
    m.def("row_softmax", &row_softmax, py::arg("m"));
    m.def("pad_to_square", &pad_to_square, py::arg("m"), py::arg("size"));
    m.def("render_pgm", &render_pgm, py::arg("m"), py::arg("path"));

    // predictors
    m.def("predict_naive", &predict_naive, py::arg("m"));
    m.def("predict_argmax", &predict_argmax, py::arg("m"));
    m.def("predict_dtw", &predict_dtw, py::arg("m"));
    m.def("dtw_path", &dtw_path, py::arg("m"));
    m.def("adjust_extreme", &adjust_extreme, py::arg("prediction"), py::arg("bound") = 30);
    m.def(
        "train_classifier",
        [](const std::string& kind_name, const std::vector<std::pair<SimilarityMatrix, long>>& data,
           std::size_t pad_size, std::size_t epochs, std::size_t batch, double lr,
           std::uint64_t seed) {
            const auto kind = predictor_from_name(kind_name);
            if (!kind) throw ArgError("unknown predictor '" + kind_name + "'");
            PredictorConfig config;
            config.kind = *kind;
            config.pad_size = pad_size;
            config.train = {epochs, batch, lr, seed};
            return train_classifier(config, data);
        },
        py::arg("kind"), py::arg("data"), py::arg("pad_size") = 256, py::arg("epochs") = 30,
        py::arg("batch") = 16, py::arg("lr") = 1e-3, py::arg("seed") = 0);
    m.def("predict_learned", &predict_learned, py::arg("model"), py::arg("m"));
    m.def("serialize_model", &nn::serialize_model, py::arg("model"), py::arg("path"));
    m.def("deserialize_model", &nn::deserialize_model, py::arg("path"));

    // datagen
    m.def("gen_latent_pair", &gen_latent_pair, py::arg("config"));
    m.def("gen_positional_biased_pair", &gen_positional_biased_pair, py::arg("config"));
    m.def(
        "add_positional_bias",
        [](const EmbeddingSequence& seq, double alpha) {
            EmbeddingSequence out = seq;
            add_positional_bias(out, alpha);
            return out;
        },
        py::arg("seq"), py::arg("alpha"));
    m.def("inject_offset_fair", &inject_offset_fair, py::arg("pair"), py::arg("k"));
    m.def("inject_offset_leaky", &inject_offset_leaky, py::arg("pair"), py::arg("k"));
    m.def("sample_offset", &sample_offset, py::arg("seed"), py::arg("bound") = 30);
    m.def("write_manifest", &write_manifest, py::arg("pairs"), py::arg("dir"));
    m.def("read_manifest", &read_manifest, py::arg("manifest_path"));
    m.def("gen_fair_corpus", &gen_fair_corpus, py::arg("config"), py::arg("n_pairs"),
          py::arg("offset_bound") = 30);

    // eval
    m.def("abs_frame_error", &abs_frame_error, py::arg("prediction"), py::arg("truth"));
    m.def(
        "aggregate_report",
        [](const std::vector<long>& errors, const std::string& predictor,
           const std::string& dataset, std::uint64_t seed) {
            return aggregate_report(errors, predictor, dataset, seed);
        },
        py::arg("errors"), py::arg("predictor") = "", py::arg("dataset") = "",
        py::arg("seed") = 0);
    m.def(
        "run_benchmark",
        [](const std::vector<LabeledPair>& pairs, const std::vector<std::string>& predictors,
           const std::map<std::string, nn::ModelParams>& models, bool adjust, long bound) {
            BenchmarkOptions options;
            options.adjust = adjust;
            options.bound = bound;
            return run_benchmark(pairs, make_predictors(predictors, models), options);
        },
        py::arg("pairs"), py::arg("predictors"),
        py::arg("models") = std::map<std::string, nn::ModelParams>{}, py::arg("adjust") = false,
        py::arg("bound") = 30);
    m.def(
        "run_bias_experiment",
        [](const SynthConfig& cfg, std::size_t n_pairs, long bound) {
            const BiasExperimentResult r = run_bias_experiment(cfg, n_pairs, bound);
            return std::make_pair(r.leaky, r.fair);
        },
        py::arg("config"), py::arg("n_pairs"), py::arg("bound") = 30);
    m.def("run_duration_sweep",
          [](const SynthConfig& cfg, const std::vector<std::size_t>& durations,
             std::size_t n_pairs, const std::string& predictor) {
              const auto kind = predictor_from_name(predictor);
              if (!kind) throw ArgError("unknown predictor '" + predictor + "'");
              return run_duration_sweep(cfg, durations, n_pairs, *kind);
          },
          py::arg("config"), py::arg("durations"), py::arg("n_pairs"),
          py::arg("predictor") = "argmax");
}

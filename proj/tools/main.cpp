#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "framesync/datagen.hpp"
#include "framesync/eval.hpp"
#include "framesync/predictors.hpp"
#include "framesync/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace framesync;

namespace {

constexpr const char* kVersion = "1.0.0";

// Reproducibility sidecar written next to every produced artifact. No
// timestamps: identical invocations must leave identical bytes behind.
void write_run_record(const fs::path& path, const std::string& subcommand, const json& flags) {
    json rec;
    rec["tool"] = "framesync";
    rec["version"] = kVersion;
    rec["subcommand"] = subcommand;
    rec["flags"] = flags;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << rec.dump(2) << '\n';
}

fs::path record_path_for(const fs::path& output) { return output.string() + ".run.json"; }

struct GenArgs {
    std::size_t frames = 120, dim = 32, pairs = 0;
    double noise = 0.0, positional_weight = 0.0;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_gen(const GenArgs& a) {
    SynthConfig cfg;
    cfg.frames = a.frames;
    cfg.dim = a.dim;
    cfg.view_noise_sigma = a.noise;
    cfg.positional_weight = a.positional_weight;
    cfg.walk_sigma = 0.1;
    cfg.seed = a.seed;
    cfg.validate();

    const std::vector<LabeledPair> corpus = gen_fair_corpus(cfg, a.pairs);
    const fs::path manifest = write_manifest(corpus, a.out_dir);

    json flags{{"frames", a.frames},
               {"dim", a.dim},
               {"pairs", a.pairs},
               {"noise", a.noise},
               {"positional_weight", a.positional_weight},
               {"seed", a.seed},
               {"out_dir", a.out_dir}};
    write_run_record(fs::path(a.out_dir) / "run.json", "gen", flags);
    std::cout << "wrote " << corpus.size() << " pairs to " << manifest.string() << "\n";
    return 0;
}

struct FeaturesArgs {
    std::string frames_dir, out;
    bool temporal_diff = false;
};

int run_features(const FeaturesArgs& a) {
    const EmbeddingSequence seq = extract_pixel_features(a.frames_dir, a.temporal_diff);
    write_eseq(seq, a.out);
    json flags{{"frames_dir", a.frames_dir}, {"temporal_diff", a.temporal_diff}, {"out", a.out}};
    write_run_record(record_path_for(a.out), "features", flags);
    std::cout << "wrote " << seq.frames << "x" << seq.dim << " features to " << a.out << "\n";
    return 0;
}

struct SimmatArgs {
    std::string v1, v2, out, pgm;
    bool softmax = false;
    std::size_t pad = 0;
};

int run_simmat(const SimmatArgs& a) {
    const EmbeddingSequence e1 = read_eseq(a.v1);
    const EmbeddingSequence e2 = read_eseq(a.v2);
    SimilarityMatrix m = pairwise_neg_l2(e1, e2);
    if (a.softmax) m = row_softmax(m);
    if (a.pad > 0) m = pad_to_square(m, a.pad);
    write_eseq(matrix_as_eseq(m), a.out);
    if (!a.pgm.empty()) render_pgm(m, a.pgm);

    json flags{{"v1", a.v1},     {"v2", a.v2},   {"softmax", a.softmax},
               {"pad", a.pad},   {"out", a.out}, {"pgm", a.pgm}};
    write_run_record(record_path_for(a.out), "simmat", flags);
    std::cout << "wrote " << m.rows << "x" << m.cols << " matrix to " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string manifest, predictor, out_model;
    std::size_t epochs = 30, batch = 16, pad = 256;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
    const auto kind = predictor_from_name(a.predictor);
    if (!kind || !predictor_is_learned(*kind))
        throw ArgError("--predictor must be one of logreg|svm|mlp|cnn");

    const std::vector<LabeledPair> pairs = read_manifest(a.manifest);
    if (pairs.empty()) throw ArgError("manifest has no pairs");

    std::vector<std::pair<SimilarityMatrix, long>> data;
    data.reserve(pairs.size());
    for (const LabeledPair& pair : pairs)
        data.emplace_back(pairwise_neg_l2(pair.v1, pair.v2), pair.true_offset);

    PredictorConfig config;
    config.kind = *kind;
    config.pad_size = a.pad;
    config.train = {a.epochs, a.batch, a.lr, a.seed};
    const nn::ModelParams model = train_classifier(config, data);
    nn::serialize_model(model, a.out_model);

    std::size_t correct = 0;
    for (const auto& [matrix, offset] : data)
        if (predict_learned(model, matrix).offset == offset) ++correct;
    const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());

    json flags{{"manifest", a.manifest}, {"predictor", a.predictor}, {"epochs", a.epochs},
               {"batch", a.batch},       {"lr", a.lr},               {"seed", a.seed},
               {"pad", a.pad},           {"out_model", a.out_model}};
    write_run_record(record_path_for(a.out_model), "train", flags);
    std::printf("trained %s on %zu pairs, train accuracy %.4f\n", a.predictor.c_str(), data.size(),
                accuracy);
    return 0;
}

struct PredictArgs {
    std::string v1, v2, predictor, model, out;
    std::string format = "text";
    bool adjust = false;
};

int run_predict(const PredictArgs& a) {
    const auto kind = predictor_from_name(a.predictor);
    if (!kind) throw ArgError("unknown predictor '" + a.predictor + "'");
    if (predictor_is_learned(*kind) && a.model.empty())
        throw ArgError("predictor '" + a.predictor + "' needs --model");

    const EmbeddingSequence e1 = read_eseq(a.v1);
    const EmbeddingSequence e2 = read_eseq(a.v2);
    const SimilarityMatrix m = pairwise_neg_l2(e1, e2);

    SyncPrediction pred;
    if (predictor_is_learned(*kind)) {
        const nn::ModelParams model = nn::deserialize_model(a.model);
        pred = predict_learned(model, m);
    } else if (*kind == PredictorKind::naive) {
        pred = predict_naive(m);
    } else if (*kind == PredictorKind::argmax) {
        pred = predict_argmax(m);
    } else {
        pred = predict_dtw(m);
    }
    if (a.adjust) pred = adjust_extreme(pred);

    json rec;
    rec["offset"] = pred.offset;
    rec["predictor"] = predictor_name(pred.predictor);
    rec["adjusted"] = pred.adjusted;
    if (pred.raw_value) rec["raw_value"] = *pred.raw_value;
    rec["v1"] = a.v1;
    rec["v2"] = a.v2;

    if (a.format == "json")
        std::cout << rec.dump() << "\n";
    else
        std::cout << pred.offset << "\n";

    if (!a.out.empty()) {
        std::ofstream os(a.out);
        if (!os) throw IoError("cannot write " + a.out);
        os << rec.dump(2) << '\n';
        json flags{{"v1", a.v1},           {"v2", a.v2},         {"predictor", a.predictor},
                   {"model", a.model},     {"adjust", a.adjust}, {"format", a.format},
                   {"out", a.out}};
        write_run_record(record_path_for(a.out), "predict", flags);
    }
    return 0;
}

struct EvalArgs {
    std::string manifest, models_dir, out_dir;
    std::vector<std::string> predictors;
    std::string format = "json";
    bool adjust = false;
    std::size_t render_first = 0;
};

int run_eval(const EvalArgs& a) {
    const std::vector<LabeledPair> pairs = read_manifest(a.manifest);

    std::vector<nn::ModelParams> loaded;
    loaded.reserve(a.predictors.size()); // stable addresses for model pointers
    std::vector<BenchmarkPredictor> predictors;
    for (const std::string& name : a.predictors) {
        const auto kind = predictor_from_name(name);
        if (!kind) throw ArgError("unknown predictor '" + name + "'");
        BenchmarkPredictor p;
        p.kind = *kind;
        if (predictor_is_learned(*kind)) {
            if (a.models_dir.empty())
                throw ArgError("learned predictor '" + name + "' needs --models");
            loaded.push_back(nn::deserialize_model(fs::path(a.models_dir) / (name + ".vsmd")));
            p.model = &loaded.back();
        }
        predictors.push_back(p);
    }

    fs::create_directories(a.out_dir);
    BenchmarkOptions options;
    options.adjust = a.adjust;
    options.dataset_label = a.manifest;
    options.render_first = a.render_first;
    options.render_dir = fs::path(a.out_dir) / "renders";
    const std::vector<EvalReport> reports = run_benchmark(pairs, predictors, options);

    write_report_json(reports, fs::path(a.out_dir) / "report.json");
    const std::string table = report_table(reports);
    {
        std::ofstream os(fs::path(a.out_dir) / "report.txt");
        os << table;
    }
    if (a.format == "csv")
        for (const EvalReport& r : reports)
            write_errors_csv(r, fs::path(a.out_dir) / ("errors_" + r.predictor + ".csv"));

    json flags{{"manifest", a.manifest}, {"predictors", a.predictors},
               {"models", a.models_dir}, {"adjust", a.adjust},
               {"out", a.out_dir},       {"format", a.format},
               {"render_first", a.render_first}};
    write_run_record(fs::path(a.out_dir) / "run.json", "eval", flags);
    std::cout << table;

    std::size_t excluded = 0;
    for (const EvalReport& r : reports) excluded += r.excluded;
    if (excluded > 0) {
        std::cerr << "warning: " << excluded << " pair evaluations excluded\n";
        return 1;
    }
    return 0;
}

struct BiasArgs {
    std::size_t pairs = 200, frames = 120, dim = 32;
    double positional_weight = 8.0, noise = 0.0;
    std::uint64_t seed = 0;
    std::string out_dir;
};

int run_bias_exp(const BiasArgs& a) {
    SynthConfig cfg;
    cfg.frames = a.frames;
    cfg.dim = a.dim;
    cfg.walk_sigma = 0.1;
    cfg.view_noise_sigma = a.noise;
    cfg.positional_weight = a.positional_weight;
    cfg.seed = a.seed;

    const BiasExperimentResult result = run_bias_experiment(cfg, a.pairs);
    fs::create_directories(a.out_dir);
    write_report_json({result.leaky, result.fair}, fs::path(a.out_dir) / "report.json");
    const std::string table = report_table({result.leaky, result.fair});
    {
        std::ofstream os(fs::path(a.out_dir) / "report.txt");
        os << "leaky vs fair injection, argmax on noise-substituted content\n" << table;
    }
    json flags{{"pairs", a.pairs},
               {"frames", a.frames},
               {"dim", a.dim},
               {"positional_weight", a.positional_weight},
               {"noise", a.noise},
               {"seed", a.seed},
               {"out", a.out_dir}};
    write_run_record(fs::path(a.out_dir) / "run.json", "bias-exp", flags);

    std::printf("leaky injection: %.3f ± %.3f\n", result.leaky.mean_abs_error,
                result.leaky.ci_half_width);
    std::printf("fair  injection: %.3f ± %.3f\n", result.fair.mean_abs_error,
                result.fair.ci_half_width);
    return 0;
}

struct SweepArgs {
    std::vector<std::size_t> durations;
    std::size_t pairs = 100, dim = 32;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string predictor = "argmax", out_dir;
};

int run_duration_sweep_cmd(const SweepArgs& a) {
    const auto kind = predictor_from_name(a.predictor);
    if (!kind) throw ArgError("unknown predictor '" + a.predictor + "'");

    SynthConfig cfg;
    cfg.dim = a.dim;
    cfg.walk_sigma = 0.1;
    cfg.view_noise_sigma = a.noise;
    cfg.seed = a.seed;
    cfg.frames = 120; // replaced per duration

    const auto sweep = run_duration_sweep(cfg, a.durations, a.pairs, *kind);
    fs::create_directories(a.out_dir);
    std::vector<EvalReport> reports;
    for (const auto& [duration, report] : sweep) reports.push_back(report);
    write_report_json(reports, fs::path(a.out_dir) / "report.json");

    std::ostringstream table;
    table << "duration  mean_abs_error\n";
    for (const auto& [duration, report] : sweep) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "%8zu  %8.3f ± %.3f\n", duration, report.mean_abs_error,
                      report.ci_half_width);
        table << buf;
    }
    {
        std::ofstream os(fs::path(a.out_dir) / "report.txt");
        os << table.str();
    }
    json flags{{"durations", a.durations}, {"pairs", a.pairs}, {"dim", a.dim},
               {"noise", a.noise},         {"seed", a.seed},   {"out", a.out_dir},
               {"predictor", a.predictor}};
    write_run_record(fs::path(a.out_dir) / "run.json", "duration-sweep", flags);
    std::cout << table.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"frame-accurate video stream synchronization from per-frame embeddings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "generate a fair-injected synthetic corpus");
    gen->add_option("--frames", gen_args.frames, "frames per view before injection");
    gen->add_option("--dim", gen_args.dim, "embedding dimension");
    gen->add_option("--pairs", gen_args.pairs, "number of pairs")->required();
    gen->add_option("--noise", gen_args.noise, "per-view gaussian noise sigma");
    gen->add_option("--positional-weight", gen_args.positional_weight,
                    "shared positional component weight");
    gen->add_option("--seed", gen_args.seed, "base seed (pair i uses seed+i)")->required();
    gen->add_option("--out-dir", gen_args.out_dir, "corpus directory")->required();

    FeaturesArgs feat_args;
    CLI::App* features = app.add_subcommand("features", "extract pixel features from frames");
    features->add_option("--frames-dir", feat_args.frames_dir, "directory of PGM/PPM frames")
        ->required();
    features->add_flag("--temporal-diff", feat_args.temporal_diff,
                       "append per-cell temporal differences");
    features->add_option("--out", feat_args.out, "output ESEQ path")->required();

    SimmatArgs simmat_args;
    CLI::App* simmat = app.add_subcommand("simmat", "compute a similarity matrix");
    simmat->add_option("--v1", simmat_args.v1, "first embedding sequence")->required();
    simmat->add_option("--v2", simmat_args.v2, "second embedding sequence")->required();
    simmat->add_flag("--softmax", simmat_args.softmax, "row-softmax the matrix");
    simmat->add_option("--pad", simmat_args.pad, "zero-pad to this square size");
    simmat->add_option("--out", simmat_args.out, "output matrix (ESEQ container)")->required();
    simmat->add_option("--pgm", simmat_args.pgm, "also render a PGM image");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a learned offset predictor");
    train->add_option("--manifest", train_args.manifest, "training manifest")->required();
    train->add_option("--predictor", train_args.predictor, "logreg|svm|mlp|cnn")->required();
    train->add_option("--epochs", train_args.epochs, "training epochs");
    train->add_option("--batch", train_args.batch, "minibatch size");
    train->add_option("--lr", train_args.lr, "learning rate");
    train->add_option("--pad", train_args.pad, "similarity matrix pad size");
    train->add_option("--seed", train_args.seed, "training seed")->required();
    train->add_option("--out-model", train_args.out_model, "output VSMD path")->required();

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "predict the offset between two videos");
    predict->add_option("--v1", predict_args.v1, "first embedding sequence")->required();
    predict->add_option("--v2", predict_args.v2, "second embedding sequence")->required();
    predict
        ->add_option("--predictor", predict_args.predictor, "naive|argmax|dtw|logreg|svm|mlp|cnn")
        ->required();
    predict->add_option("--model", predict_args.model, "VSMD model (learned predictors)");
    predict->add_flag("--adjust", predict_args.adjust, "zero offsets beyond ±30");
    predict->add_option("--format", predict_args.format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));
    predict->add_option("--out", predict_args.out, "write the JSON record here");

    EvalArgs eval_args;
    CLI::App* evalc = app.add_subcommand("eval", "benchmark predictors over a manifest");
    evalc->add_option("--manifest", eval_args.manifest, "evaluation manifest")->required();
    evalc->add_option("--predictors", eval_args.predictors, "predictor names")
        ->required()
        ->delimiter(',');
    evalc->add_option("--models", eval_args.models_dir, "directory of <name>.vsmd files");
    evalc->add_flag("--adjust", eval_args.adjust, "apply the ±30 adjustment rule");
    evalc->add_option("--out", eval_args.out_dir, "report directory")->required();
    evalc->add_option("--format", eval_args.format, "json|csv (csv adds per-pair files)")
        ->check(CLI::IsMember({"json", "csv"}));
    evalc->add_option("--render-first", eval_args.render_first,
                      "PGM-render the first K matrices");

    BiasArgs bias_args;
    CLI::App* bias = app.add_subcommand("bias-exp", "leaky vs fair injection bias experiment");
    bias->add_option("--pairs", bias_args.pairs, "pairs per arm");
    bias->add_option("--frames", bias_args.frames, "frames per view");
    bias->add_option("--dim", bias_args.dim, "embedding dimension");
    bias->add_option("--positional-weight", bias_args.positional_weight,
                     "positional component weight (must be > 0)");
    bias->add_option("--noise", bias_args.noise, "per-view gaussian noise sigma");
    bias->add_option("--seed", bias_args.seed, "base seed")->required();
    bias->add_option("--out", bias_args.out_dir, "report directory")->required();

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("duration-sweep", "error vs video duration");
    sweep->add_option("--durations", sweep_args.durations, "durations in frames")
        ->required()
        ->delimiter(',');
    sweep->add_option("--pairs", sweep_args.pairs, "pairs per duration");
    sweep->add_option("--dim", sweep_args.dim, "embedding dimension");
    sweep->add_option("--noise", sweep_args.noise, "per-view gaussian noise sigma");
    sweep->add_option("--seed", sweep_args.seed, "base seed")->required();
    sweep->add_option("--predictor", sweep_args.predictor, "naive|argmax|dtw");
    sweep->add_option("--out", sweep_args.out_dir, "report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) return run_gen(gen_args);
        if (*features) return run_features(feat_args);
        if (*simmat) return run_simmat(simmat_args);
        if (*train) return run_train(train_args);
        if (*predict) return run_predict(predict_args);
        if (*evalc) return run_eval(eval_args);
        if (*bias) return run_bias_exp(bias_args);
        if (*sweep) return run_duration_sweep_cmd(sweep_args);
    } catch (const ArgError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

#include "framesync/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "framesync/rng.hpp"

namespace framesync {

namespace fs = std::filesystem;
using nlohmann::json;

long abs_frame_error(const SyncPrediction& pred, long truth) {
    return std::abs(pred.offset - truth);
}

EvalReport aggregate_report(const std::vector<long>& errors, std::string predictor,
                            std::string dataset, std::uint64_t seed) {
    if (errors.empty()) throw ArgError("cannot aggregate an empty error list");

    EvalReport r;
    r.per_pair_errors = errors;
    r.n = errors.size();
    r.predictor = std::move(predictor);
    r.dataset = std::move(dataset);
    r.seed = seed;

    double mean = 0.0;
    for (long e : errors) mean += static_cast<double>(e);
    mean /= static_cast<double>(errors.size());
    r.mean_abs_error = mean;

    if (errors.size() >= 2) {
        double ss = 0.0;
        for (long e : errors) {
            const double d = static_cast<double>(e) - mean;
            ss += d * d;
        }
        const double sample_std = std::sqrt(ss / static_cast<double>(errors.size() - 1));
        r.ci_half_width = 1.96 * sample_std / std::sqrt(static_cast<double>(errors.size()));
    }
    return r;
}

json EvalReport::to_json() const {
    json j;
    j["predictor"] = predictor;
    j["dataset"] = dataset;
    j["n"] = n;
    j["mean_abs_error"] = mean_abs_error;
    j["ci_half_width"] = ci_half_width;
    j["ci_definition"] = "1.96*sample_std/sqrt(n), 95% normal approximation";
    j["seed"] = seed;
    j["excluded"] = excluded;
    j["per_pair_errors"] = per_pair_errors;
    if (!metadata.is_null()) j["metadata"] = metadata;
    return j;
}

std::string EvalReport::to_text_row() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %6zu  %8.3f ± %-7.3f %8zu", predictor.c_str(), n,
                  mean_abs_error, ci_half_width, excluded);
    return buf;
}

std::string report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %6s  %-18s %8s", "predictor", "n", "mean_abs_error",
                  "excluded");
    os << buf << '\n';
    for (const EvalReport& r : reports) os << r.to_text_row() << '\n';
    return os.str();
}

void write_report_json(const std::vector<EvalReport>& reports, const fs::path& path) {
    json j = json::array();
    for (const EvalReport& r : reports) j.push_back(r.to_json());
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

void write_errors_csv(const EvalReport& report, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "pair_index,abs_error\n";
    for (std::size_t i = 0; i < report.per_pair_errors.size(); ++i)
        os << i << ',' << report.per_pair_errors[i] << '\n';
    if (!os) throw IoError("write failed for " + path.string());
}

namespace {

SyncPrediction dispatch_handcrafted(PredictorKind kind, const SimilarityMatrix& raw) {
    switch (kind) {
        case PredictorKind::naive: return predict_naive(raw);
        case PredictorKind::argmax: return predict_argmax(raw);
        case PredictorKind::dtw: return predict_dtw(raw);
        default:
            throw ArgError(std::string("predictor '") + predictor_name(kind) +
                           "' needs a trained model");
    }
}

} // namespace

std::vector<EvalReport> run_benchmark(const std::vector<LabeledPair>& pairs,
                                      const std::vector<BenchmarkPredictor>& predictors,
                                      const BenchmarkOptions& options) {
    if (pairs.empty()) throw ArgError("benchmark needs at least one pair");
    if (predictors.empty()) throw ArgError("benchmark needs at least one predictor");
    for (const BenchmarkPredictor& p : predictors)
        if (predictor_is_learned(p.kind) && p.model == nullptr)
            throw ArgError(std::string("predictor '") + predictor_name(p.kind) +
                           "' needs a trained model");

    std::vector<std::vector<long>> errors(predictors.size());
    std::vector<std::size_t> excluded(predictors.size(), 0);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const SimilarityMatrix raw = pairwise_neg_l2(pairs[i].v1, pairs[i].v2);
        if (i < options.render_first && !options.render_dir.empty()) {
            fs::create_directories(options.render_dir);
            render_pgm(raw, options.render_dir / ("simmatrix_" + std::to_string(i) + ".pgm"));
        }
        for (std::size_t p = 0; p < predictors.size(); ++p) {
            try {
                SyncPrediction pred =
                    predictor_is_learned(predictors[p].kind)
                        ? predict_learned(*predictors[p].model, raw)
                        : dispatch_handcrafted(predictors[p].kind, raw);
                if (options.adjust) pred = adjust_extreme(pred, options.bound);
                errors[p].push_back(abs_frame_error(pred, pairs[i].true_offset));
            } catch (const RangeError&) {
                excluded[p] += 1; // pair does not fit the model's pad size
            }
        }
    }

    std::vector<EvalReport> reports;
    for (std::size_t p = 0; p < predictors.size(); ++p) {
        if (errors[p].empty())
            throw std::runtime_error(std::string("all pairs failed for predictor '") +
                                     predictor_name(predictors[p].kind) + "'");
        EvalReport r = aggregate_report(errors[p], predictor_name(predictors[p].kind),
                                        options.dataset_label, 0);
        r.excluded = excluded[p];
        r.metadata["adjusted"] = options.adjust;
        if (options.adjust) r.metadata["adjust_bound"] = options.bound;
        reports.push_back(std::move(r));
    }
    return reports;
}

std::vector<LabeledPair> gen_fair_corpus(const SynthConfig& cfg, std::size_t n_pairs,
                                         long offset_bound) {
    cfg.validate();
    std::vector<LabeledPair> pairs;
    pairs.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        SynthConfig pair_cfg = cfg;
        pair_cfg.seed = cfg.seed + i; // documented per-pair seed policy
        LabeledPair pair = pair_cfg.positional_weight > 0.0
                               ? gen_positional_biased_pair(pair_cfg)
                               : gen_latent_pair(pair_cfg);
        const long k = sample_offset(pair_cfg.seed, offset_bound);
        pairs.push_back(inject_offset_fair(pair, k));
    }
    return pairs;
}

BiasExperimentResult run_bias_experiment(const SynthConfig& cfg, std::size_t n_pairs,
                                         long bound) {
    cfg.validate();
    if (!(cfg.positional_weight > 0.0))
        throw ArgError("bias experiment needs positional_weight > 0");
    if (n_pairs == 0) throw ArgError("bias experiment needs at least one pair");

    std::vector<long> leaky_errors, fair_errors;
    leaky_errors.reserve(n_pairs);
    fair_errors.reserve(n_pairs);

    for (std::size_t i = 0; i < n_pairs; ++i) {
        SynthConfig pair_cfg = cfg;
        pair_cfg.seed = cfg.seed + i;

        // Content carries no signal: one view is replaced by moment-matched
        // noise. The positional component is added after cropping, the way an
        // inference-time positional encoding would see the processed clip.
        LabeledPair content = gen_latent_pair(pair_cfg);
        content.v1 = noise_substitute(content.v1, mix_seed(pair_cfg.seed, 0x7375627374ULL));
        const long k = sample_offset(pair_cfg.seed, bound);

        LabeledPair leaky = inject_offset_leaky(content, k);
        LabeledPair fair = inject_offset_fair(content, k);
        for (EmbeddingSequence* seq : {&leaky.v1, &leaky.v2, &fair.v1, &fair.v2})
            add_positional_bias(*seq, cfg.positional_weight);

        leaky_errors.push_back(
            abs_frame_error(predict_argmax(pairwise_neg_l2(leaky.v1, leaky.v2)), k));
        fair_errors.push_back(
            abs_frame_error(predict_argmax(pairwise_neg_l2(fair.v1, fair.v2)), k));
    }

    BiasExperimentResult result;
    result.leaky = aggregate_report(leaky_errors, "argmax", "bias-exp/leaky", cfg.seed);
    result.fair = aggregate_report(fair_errors, "argmax", "bias-exp/fair", cfg.seed);
    for (EvalReport* r : {&result.leaky, &result.fair}) {
        r->metadata["positional_weight"] = cfg.positional_weight;
        r->metadata["frames"] = cfg.frames;
        r->metadata["dim"] = cfg.dim;
        r->metadata["noise_substituted_view"] = "v1";
    }
    return result;
}

std::vector<std::pair<std::size_t, EvalReport>> run_duration_sweep(
    const SynthConfig& base_cfg, const std::vector<std::size_t>& durations, std::size_t n_pairs,
    PredictorKind predictor) {
    if (predictor_is_learned(predictor))
        throw ArgError("duration sweep supports hand-crafted predictors only");
    if (durations.empty()) throw ArgError("duration sweep needs at least one duration");

    std::vector<std::pair<std::size_t, EvalReport>> out;
    for (std::size_t d = 0; d < durations.size(); ++d) {
        SynthConfig cfg = base_cfg;
        cfg.frames = durations[d];
        cfg.seed = base_cfg.seed + 1000000 * (d + 1); // fresh corpus per duration
        cfg.validate();

        const std::vector<LabeledPair> pairs = gen_fair_corpus(cfg, n_pairs);
        BenchmarkOptions options;
        options.dataset_label = "duration-sweep/" + std::to_string(durations[d]);
        std::vector<EvalReport> reports =
            run_benchmark(pairs, {BenchmarkPredictor{predictor, nullptr}}, options);
        reports[0].seed = cfg.seed;
        reports[0].metadata["duration"] = durations[d];
        out.emplace_back(durations[d], std::move(reports[0]));
    }
    return out;
}

} // namespace framesync

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "framesync/datagen.hpp"
#include "framesync/predictors.hpp"

namespace framesync {

// Absolute-frame-error aggregate for one predictor over one dataset.
// ci_half_width is the 95% normal-approximation half width of the mean,
// 1.96 * sample_std / sqrt(n), and 0 when n < 2.
struct EvalReport {
    std::vector<long> per_pair_errors;
    double mean_abs_error = 0.0;
    double ci_half_width = 0.0;
    std::size_t n = 0;
    std::string predictor;
    std::string dataset;
    std::uint64_t seed = 0;
    std::size_t excluded = 0; // pairs skipped due to per-pair failures
    nlohmann::json metadata;

    nlohmann::json to_json() const;
    std::string to_text_row() const;
};

std::string report_table(const std::vector<EvalReport>& reports);
void write_report_json(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
void write_errors_csv(const EvalReport& report, const std::filesystem::path& path);

long abs_frame_error(const SyncPrediction& pred, long truth);

EvalReport aggregate_report(const std::vector<long>& errors, std::string predictor,
                            std::string dataset, std::uint64_t seed);

struct BenchmarkPredictor {
    PredictorKind kind = PredictorKind::argmax;
    const nn::ModelParams* model = nullptr; // required for learned kinds
};

struct BenchmarkOptions {
    bool adjust = false; // apply adjust_extreme to every prediction
    long bound = 30;
    std::string dataset_label;
    std::size_t render_first = 0; // PGM-dump the first K similarity matrices
    std::filesystem::path render_dir;
};

// One report per predictor: pair -> pairwise_neg_l2 -> predict -> error.
// Hand-crafted predictors consume the raw matrix; learned predictors softmax
// and pad internally. Per-pair failures are excluded and counted.
std::vector<EvalReport> run_benchmark(const std::vector<LabeledPair>& pairs,
                                      const std::vector<BenchmarkPredictor>& predictors,
                                      const BenchmarkOptions& options);

struct BiasExperimentResult {
    EvalReport leaky;
    EvalReport fair;
};

// Positional-bias reproduction: noise-substituted content plus an
// inference-time positional component, argmax-evaluated under leaky and fair
// injection of identical sampled offsets.
BiasExperimentResult run_bias_experiment(const SynthConfig& cfg, std::size_t n_pairs,
                                         long bound = 30);

// One fair-injected benchmark per duration, all other settings fixed.
std::vector<std::pair<std::size_t, EvalReport>> run_duration_sweep(
    const SynthConfig& base_cfg, const std::vector<std::size_t>& durations, std::size_t n_pairs,
    PredictorKind predictor);

// Seed policy shared by corpus generators: pair i of a corpus uses
// base_seed + i, so corpora are reproducible regardless of evaluation order.
std::vector<LabeledPair> gen_fair_corpus(const SynthConfig& cfg, std::size_t n_pairs,
                                         long offset_bound = 30);

} // namespace framesync

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "framesync/nn.hpp"
#include "framesync/simmatrix.hpp"

namespace framesync {

enum class PredictorKind { naive, argmax, dtw, logreg, svm, mlp, cnn };

const char* predictor_name(PredictorKind kind);
std::optional<PredictorKind> predictor_from_name(const std::string& name);
bool predictor_is_learned(PredictorKind kind);

// Positive offset means v1 starts later: v1 frame i matches v2 frame i+offset.
struct SyncPrediction {
    long offset = 0;
    PredictorKind predictor = PredictorKind::naive;
    std::optional<double> raw_value; // pre-rounding value for regressors
    bool adjusted = false;
};

struct TrainSpec {
    std::size_t epochs = 30;
    std::size_t batch = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0; // callers must set this explicitly
};

struct PredictorConfig {
    PredictorKind kind = PredictorKind::argmax;
    std::size_t pad_size = 256;
    long offset_bound = 30;
    TrainSpec train;
    double svm_epsilon = 1.0;   // dead zone of the epsilon-insensitive loss
    double weight_decay = 0.01;

    std::size_t class_count() const { return static_cast<std::size_t>(2 * offset_bound + 1); }
    void validate() const;
};

// Constant zero guess.
SyncPrediction predict_naive(const SimilarityMatrix& m);

// Row-wise argmax minus row index, then the median. Argmax ties resolve to
// the lowest column; even-length medians take the lower middle element.
SyncPrediction predict_argmax(const SimilarityMatrix& m);

// Minimum-cost monotone path (cost = -values) from (0,0) to (rows-1, cols-1),
// steps {(1,0),(0,1),(1,1)}; backtrack ties prefer diagonal, then left, then
// up. Returned ascending.
std::vector<std::pair<std::size_t, std::size_t>> dtw_path(const SimilarityMatrix& m);

// Median of col - row over the DTW path.
SyncPrediction predict_dtw(const SimilarityMatrix& m);

// Reference CNN: four stride-2 convolutions, a flatten, and a dense head
// sized for the given square input. The head keeps spatial position, which
// the offset classes are a function of.
std::vector<nn::LayerSpec> reference_cnn_layers(std::size_t input_side, std::size_t class_count);

// Train a learned predictor (logreg / svm / mlp / cnn). Inputs go through
// row_softmax then pad_to_square(pad_size); labels are encoded as
// class = offset + offset_bound. Deterministic per TrainSpec::seed.
nn::ModelParams train_classifier(const PredictorConfig& config,
                                 const std::vector<std::pair<SimilarityMatrix, long>>& data);

// Classifiers: argmax class - offset_bound (ties to the lower class).
// Regressors: raw output rounded half away from zero, clamped to the bound.
SyncPrediction predict_learned(const nn::ModelParams& model, const SimilarityMatrix& m);

// Replace |offset| > bound with 0 and mark the prediction adjusted.
SyncPrediction adjust_extreme(SyncPrediction p, long bound = 30);

// Sort-and-take-lower-middle median used by argmax and DTW predictors.
long lower_median(std::vector<long> values);

} // namespace framesync

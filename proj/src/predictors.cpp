#include "framesync/predictors.hpp"

#include <algorithm>
#include <cmath>

#include "framesync/rng.hpp"

namespace framesync {

const char* predictor_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::naive: return "naive";
        case PredictorKind::argmax: return "argmax";
        case PredictorKind::dtw: return "dtw";
        case PredictorKind::logreg: return "logreg";
        case PredictorKind::svm: return "svm";
        case PredictorKind::mlp: return "mlp";
        case PredictorKind::cnn: return "cnn";
    }
    return "?";
}

std::optional<PredictorKind> predictor_from_name(const std::string& name) {
    for (PredictorKind k : {PredictorKind::naive, PredictorKind::argmax, PredictorKind::dtw,
                            PredictorKind::logreg, PredictorKind::svm, PredictorKind::mlp,
                            PredictorKind::cnn})
        if (name == predictor_name(k)) return k;
    return std::nullopt;
}

bool predictor_is_learned(PredictorKind kind) {
    return kind == PredictorKind::logreg || kind == PredictorKind::svm ||
           kind == PredictorKind::mlp || kind == PredictorKind::cnn;
}

void PredictorConfig::validate() const {
    if (offset_bound < 0) throw ArgError("offset_bound must be non-negative");
    if (pad_size < static_cast<std::size_t>(2 * offset_bound + 1))
        throw ArgError("pad_size " + std::to_string(pad_size) +
                       " smaller than the class count " + std::to_string(2 * offset_bound + 1));
    if (predictor_is_learned(kind)) {
        if (train.epochs == 0) throw ArgError("train epochs must be positive");
        if (train.batch == 0) throw ArgError("train batch must be positive");
        if (!(train.lr > 0.0)) throw ArgError("train lr must be positive");
    }
}

long lower_median(std::vector<long> values) {
    if (values.empty()) throw ArgError("median of an empty list");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

SyncPrediction predict_naive(const SimilarityMatrix&) {
    SyncPrediction p;
    p.offset = 0;
    p.predictor = PredictorKind::naive;
    return p;
}

SyncPrediction predict_argmax(const SimilarityMatrix& m) {
    if (m.rows == 0 || m.cols == 0) throw ArgError("argmax on an empty matrix");

    std::vector<long> offsets;
    offsets.reserve(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.values.data() + i * m.cols;
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.cols; ++j)
            if (row[j] > row[best]) best = j; // ties keep the lowest column
        offsets.push_back(static_cast<long>(best) - static_cast<long>(i));
    }
    SyncPrediction p;
    p.offset = lower_median(std::move(offsets));
    p.predictor = PredictorKind::argmax;
    return p;
}

std::vector<std::pair<std::size_t, std::size_t>> dtw_path(const SimilarityMatrix& m) {
    if (m.rows == 0 || m.cols == 0) throw ArgError("dtw on an empty matrix");
    if (m.normalized != MatrixNorm::raw) throw ArgError("dtw expects a raw matrix");

    const std::size_t R = m.rows, C = m.cols;
    std::vector<double> D(R * C);
    auto cost = [&](std::size_t i, std::size_t j) { return -m.values[i * C + j]; };

    D[0] = cost(0, 0);
    for (std::size_t j = 1; j < C; ++j) D[j] = cost(0, j) + D[j - 1];
    for (std::size_t i = 1; i < R; ++i) {
        D[i * C] = cost(i, 0) + D[(i - 1) * C];
        for (std::size_t j = 1; j < C; ++j) {
            const double best = std::min({D[(i - 1) * C + j - 1], D[i * C + j - 1],
                                          D[(i - 1) * C + j]});
            D[i * C + j] = cost(i, j) + best;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::size_t i = R - 1, j = C - 1;
    path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = D[(i - 1) * C + j - 1];
            const double left = D[i * C + j - 1];
            const double up = D[(i - 1) * C + j];
            const double best = std::min({diag, left, up});
            if (diag == best) {
                --i;
                --j;
            } else if (left == best) {
                --j;
            } else {
                --i;
            }
        }
        path.emplace_back(i, j);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

SyncPrediction predict_dtw(const SimilarityMatrix& m) {
    const auto path = dtw_path(m);
    std::vector<long> offsets;
    offsets.reserve(path.size());
    for (const auto& [i, j] : path)
        offsets.push_back(static_cast<long>(j) - static_cast<long>(i));
    SyncPrediction p;
    p.offset = lower_median(std::move(offsets));
    p.predictor = PredictorKind::dtw;
    return p;
}

namespace {

// Uniform model input: {1, pad, pad} tensor of the softmaxed, padded matrix.
nn::Tensor matrix_to_input(const SimilarityMatrix& m, std::size_t pad_size) {
    const SimilarityMatrix soft =
        m.normalized == MatrixNorm::raw ? row_softmax(m) : m;
    const SimilarityMatrix padded = pad_to_square(soft, pad_size);
    nn::Tensor t;
    t.shape = {1, pad_size, pad_size};
    t.v = padded.values;
    return t;
}

std::vector<nn::LayerSpec> architecture(PredictorKind kind, std::size_t pad_size,
                                        std::size_t class_count) {
    using nn::LayerSpec;
    const std::size_t flat = pad_size * pad_size;
    switch (kind) {
        case PredictorKind::logreg:
            return {LayerSpec::flatten(), LayerSpec::dense(flat, class_count)};
        case PredictorKind::svm:
            return {LayerSpec::flatten(), LayerSpec::dense(flat, 1)};
        case PredictorKind::mlp:
            return {LayerSpec::flatten(),
                    LayerSpec::dense(flat, 256),
                    LayerSpec::relu(),
                    LayerSpec::dense(256, 128),
                    LayerSpec::relu(),
                    LayerSpec::dense(128, 64),
                    LayerSpec::relu(),
                    LayerSpec::dense(64, class_count)};
        case PredictorKind::cnn:
            return reference_cnn_layers(pad_size, class_count);
        default:
            throw ArgError(std::string("predictor '") + predictor_name(kind) +
                           "' is not trainable");
    }
}

} // namespace

std::vector<nn::LayerSpec> reference_cnn_layers(std::size_t input_side, std::size_t class_count) {
    using nn::LayerSpec;
    std::size_t side = input_side;
    for (int i = 0; i < 4; ++i) side = (side - 1) / 2 + 1; // k3 s2 p1 per stage
    return {LayerSpec::conv2d(1, 8, 3, 2, 1),
            LayerSpec::relu(),
            LayerSpec::conv2d(8, 16, 3, 2, 1),
            LayerSpec::relu(),
            LayerSpec::conv2d(16, 32, 3, 2, 1),
            LayerSpec::relu(),
            LayerSpec::conv2d(32, 64, 3, 2, 1),
            LayerSpec::relu(),
            LayerSpec::flatten(),
            LayerSpec::dense(64 * side * side, class_count)};
}

nn::ModelParams train_classifier(const PredictorConfig& config,
                                 const std::vector<std::pair<SimilarityMatrix, long>>& data) {
    config.validate();
    if (!predictor_is_learned(config.kind))
        throw ArgError(std::string("predictor '") + predictor_name(config.kind) +
                       "' is not trainable");
    if (data.empty()) throw ArgError("empty training set");

    const bool regression = config.kind == PredictorKind::svm;
    const std::size_t class_count = regression ? 0 : config.class_count();

    // Preflight: label range and pad fit (pad_to_square throws RangeError).
    std::vector<nn::Tensor> inputs;
    std::vector<nn::Target> targets;
    inputs.reserve(data.size());
    targets.reserve(data.size());
    for (const auto& [matrix, offset] : data) {
        if (offset < -config.offset_bound || offset > config.offset_bound)
            throw ArgError("offset " + std::to_string(offset) + " outside the bound " +
                           std::to_string(config.offset_bound));
        inputs.push_back(matrix_to_input(matrix, config.pad_size));
        if (regression)
            targets.push_back(nn::Target::reg(static_cast<double>(offset)));
        else
            targets.push_back(
                nn::Target::cls(static_cast<std::size_t>(offset + config.offset_bound)));
    }

    nn::ModelParams model =
        nn::build_model(architecture(config.kind, config.pad_size, config.class_count()),
                        class_count);
    if (regression) {
        model.loss = nn::LossKind::epsilon_insensitive;
        model.loss_epsilon = config.svm_epsilon;
    }
    model.kind_tag = predictor_name(config.kind);
    model.input_pad = config.pad_size;
    model.offset_bound = config.offset_bound;
    nn::init_params(model, config.train.seed);

    nn::OptimizerState opt = nn::make_optimizer(model, config.train.lr, config.weight_decay);
    Rng shuffle_rng(mix_seed(config.train.seed, 0x73687566ULL)); // "shuf"

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    nn::Gradients batch_grad = nn::zero_gradients(model);
    nn::Gradients sample_grad;
    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        // Fisher-Yates with the library RNG so runs are reproducible.
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < order.size(); start += config.train.batch) {
            const std::size_t end = std::min(order.size(), start + config.train.batch);
            for (auto& layer : batch_grad.g)
                for (auto& t : layer) std::fill(t.v.begin(), t.v.end(), 0.0);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t idx = start; idx < end; ++idx) {
                nn::loss_and_grad(model, inputs[order[idx]], targets[order[idx]], sample_grad);
                nn::accumulate(batch_grad, sample_grad, inv);
            }
            nn::adamw_step(model, batch_grad, opt);
        }
    }

    nn::quantize_f32(model);
    return model;
}

SyncPrediction predict_learned(const nn::ModelParams& model, const SimilarityMatrix& m) {
    if (model.input_pad == 0) throw ArgError("model has no input pad size");
    const nn::Tensor input = matrix_to_input(m, model.input_pad);
    const nn::Tensor out = nn::forward(model, input);

    SyncPrediction p;
    p.predictor = predictor_from_name(model.kind_tag).value_or(PredictorKind::cnn);
    if (model.regression()) {
        const double raw = out.v[0];
        p.raw_value = raw;
        const long rounded = static_cast<long>(std::round(raw)); // half away from zero
        p.offset = std::clamp(rounded, -model.offset_bound, model.offset_bound);
    } else {
        std::size_t best = 0;
        for (std::size_t c = 1; c < out.v.size(); ++c)
            if (out.v[c] > out.v[best]) best = c; // ties keep the lower class
        p.offset = static_cast<long>(best) - model.offset_bound;
    }
    return p;
}

SyncPrediction adjust_extreme(SyncPrediction p, long bound) {
    if (p.offset > bound || p.offset < -bound) {
        p.offset = 0;
        p.adjusted = true;
    }
    return p;
}

} // namespace framesync

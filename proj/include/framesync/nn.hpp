#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "framesync/errors.hpp"

namespace framesync::nn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v; // row-major

    static Tensor zeros(std::vector<std::size_t> shape);
    std::size_t size() const { return v.size(); }
};

enum class LayerKind { dense, conv2d, relu, global_avg_pool, flatten };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    // dense
    std::size_t in = 0, out = 0;
    // conv2d
    std::size_t in_ch = 0, out_ch = 0, kernel = 0, stride = 1, pad = 0;

    static LayerSpec dense(std::size_t in, std::size_t out);
    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                            std::size_t stride, std::size_t pad);
    static LayerSpec relu();
    static LayerSpec global_avg_pool();
    static LayerSpec flatten();
};

enum class LossKind { softmax_ce, squared, epsilon_insensitive };

struct ModelParams {
    std::vector<LayerSpec> layers;
    std::vector<std::vector<Tensor>> weights; // per layer; dense/conv2d hold {W, b}
    std::size_t class_count = 0;              // 0 for regression (scalar output)
    LossKind loss = LossKind::softmax_ce;
    double loss_epsilon = 1.0; // dead-zone half width for epsilon_insensitive
    std::string kind_tag;      // predictor kind, embedded in the VSMD metadata
    std::size_t input_pad = 0; // square pad size the model expects
    long offset_bound = 30;    // predictions clamp/decode against this

    bool regression() const { return class_count == 0; }
    std::size_t param_count() const;
};

// Training label: class index for classifiers, real target for regressors.
struct Target {
    bool is_class = true;
    std::size_t label = 0;
    double value = 0.0;

    static Target cls(std::size_t label) { return {true, label, 0.0}; }
    static Target reg(double value) { return {false, 0, value}; }
};

struct Gradients {
    std::vector<std::vector<Tensor>> g; // same shapes as ModelParams::weights
};

struct OptimizerState {
    std::size_t step = 0;
    std::vector<std::vector<Tensor>> m, v; // first/second moments per parameter
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Allocates weight tensors matching the layer specs (zero-filled) and checks
// the specs are structurally sound.
ModelParams build_model(std::vector<LayerSpec> layers, std::size_t class_count);

// He-style fan-in uniform init, seeded; biases zero.
void init_params(ModelParams& model, std::uint64_t seed);

// Deterministic forward pass; returns logits (class_count) or a scalar.
// Throws ArgError naming the layer index on any shape mismatch.
Tensor forward(const ModelParams& model, const Tensor& input);

Gradients zero_gradients(const ModelParams& model);
void accumulate(Gradients& into, const Gradients& g, double scale);

// Returns the loss and writes exact analytic parameter gradients.
double loss_and_grad(const ModelParams& model, const Tensor& input, const Target& target,
                     Gradients& grads);
double loss_only(const ModelParams& model, const Tensor& input, const Target& target);

OptimizerState make_optimizer(const ModelParams& model, double lr, double weight_decay);

// Decoupled-decay update with bias-corrected moments; increments state.step.
void adamw_step(ModelParams& model, const Gradients& grads, OptimizerState& state);

// Max over parameters of |analytic - central difference| / max(|a|, |n|, 1e-12).
double grad_check(const ModelParams& model, const Tensor& input, const Target& target, double h);

// VSMD model file: magic "VSMD", u32 version (=1), u32 JSON metadata length,
// JSON metadata, then concatenated f32 little-endian parameter arrays in
// layer order. Little-endian throughout.
void serialize_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams deserialize_model(const std::filesystem::path& path);

// Round weights through f32 so in-memory parameters match their serialized
// form bit for bit.
void quantize_f32(ModelParams& model);

} // namespace framesync::nn

#include "framesync/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "framesync/rng.hpp"
#include "binio.hpp"

namespace framesync::nn {

using nlohmann::json;

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    t.shape = std::move(shape);
    t.v.assign(n, 0.0);
    return t;
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.in = in;
    s.out = out;
    return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                            std::size_t stride, std::size_t pad) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.kernel = kernel;
    s.stride = stride;
    s.pad = pad;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
}

LayerSpec LayerSpec::global_avg_pool() {
    LayerSpec s;
    s.kind = LayerKind::global_avg_pool;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : weights)
        for (const auto& t : layer) n += t.size();
    return n;
}

namespace {

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "{";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "}";
}

std::size_t shape_prod(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

[[noreturn]] void shape_error(std::size_t layer_idx, const LayerSpec& spec,
                              const std::vector<std::size_t>& got, const std::string& expected) {
    const char* names[] = {"dense", "conv2d", "relu", "global_avg_pool", "flatten"};
    throw ArgError("layer " + std::to_string(layer_idx) + " (" +
                   names[static_cast<int>(spec.kind)] + "): expected input " + expected +
                   ", got " + shape_str(got));
}

std::vector<std::size_t> output_shape(const LayerSpec& spec, const std::vector<std::size_t>& in,
                                      std::size_t layer_idx) {
    switch (spec.kind) {
        case LayerKind::dense:
            if (in.size() != 1 || in[0] != spec.in)
                shape_error(layer_idx, spec, in, "{" + std::to_string(spec.in) + "}");
            return {spec.out};
        case LayerKind::conv2d: {
            if (in.size() != 3 || in[0] != spec.in_ch)
                shape_error(layer_idx, spec, in,
                            "{" + std::to_string(spec.in_ch) + ",H,W}");
            const std::size_t h = in[1], w = in[2];
            if (h + 2 * spec.pad < spec.kernel || w + 2 * spec.pad < spec.kernel)
                shape_error(layer_idx, spec, in, "spatial size >= kernel");
            const std::size_t oh = (h + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            const std::size_t ow = (w + 2 * spec.pad - spec.kernel) / spec.stride + 1;
            return {spec.out_ch, oh, ow};
        }
        case LayerKind::relu:
            return in;
        case LayerKind::global_avg_pool:
            if (in.size() != 3) shape_error(layer_idx, spec, in, "{C,H,W}");
            return {in[0]};
        case LayerKind::flatten:
            return {shape_prod(in)};
    }
    throw ArgError("unknown layer kind");
}

void forward_one(const LayerSpec& spec, const std::vector<Tensor>& w, const Tensor& in,
                 Tensor& out) {
    switch (spec.kind) {
        case LayerKind::dense: {
            const Tensor& W = w[0]; // {out, in}
            const Tensor& b = w[1];
            for (std::size_t o = 0; o < spec.out; ++o) {
                double acc = b.v[o];
                const double* wrow = W.v.data() + o * spec.in;
                for (std::size_t i = 0; i < spec.in; ++i) acc += wrow[i] * in.v[i];
                out.v[o] = acc;
            }
            break;
        }
        case LayerKind::conv2d: {
            const Tensor& W = w[0]; // {oc, ic, k, k}
            const Tensor& b = w[1];
            const std::size_t h = in.shape[1], wd = in.shape[2];
            const std::size_t oh = out.shape[1], ow = out.shape[2];
            const std::size_t k = spec.kernel, s = spec.stride;
            const long p = static_cast<long>(spec.pad);
            for (std::size_t oc = 0; oc < spec.out_ch; ++oc) {
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        double acc = b.v[oc];
                        for (std::size_t ic = 0; ic < spec.in_ch; ++ic) {
                            const double* iplane = in.v.data() + ic * h * wd;
                            const double* wbase =
                                W.v.data() + ((oc * spec.in_ch + ic) * k) * k;
                            for (std::size_t ky = 0; ky < k; ++ky) {
                                const long iy = static_cast<long>(oy * s + ky) - p;
                                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                                const double* irow = iplane + static_cast<std::size_t>(iy) * wd;
                                const double* wrow = wbase + ky * k;
                                for (std::size_t kx = 0; kx < k; ++kx) {
                                    const long ix = static_cast<long>(ox * s + kx) - p;
                                    if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                                    acc += wrow[kx] * irow[static_cast<std::size_t>(ix)];
                                }
                            }
                        }
                        out.v[(oc * oh + oy) * ow + ox] = acc;
                    }
                }
            }
            break;
        }
        case LayerKind::relu:
            for (std::size_t i = 0; i < in.v.size(); ++i) out.v[i] = in.v[i] > 0.0 ? in.v[i] : 0.0;
            break;
        case LayerKind::global_avg_pool: {
            const std::size_t c = in.shape[0], hw = in.shape[1] * in.shape[2];
            const double inv = 1.0 / static_cast<double>(hw);
            for (std::size_t ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                const double* plane = in.v.data() + ch * hw;
                for (std::size_t i = 0; i < hw; ++i) acc += plane[i];
                out.v[ch] = acc * inv;
            }
            break;
        }
        case LayerKind::flatten:
            out.v = in.v;
            break;
    }
}

// dOut -> (dIn, dW); dIn is preallocated zeroed, grads accumulated in place.
void backward_one(const LayerSpec& spec, const std::vector<Tensor>& w, const Tensor& in,
                  const Tensor& dout, Tensor& din, std::vector<Tensor>& dw) {
    switch (spec.kind) {
        case LayerKind::dense: {
            const Tensor& W = w[0];
            for (std::size_t o = 0; o < spec.out; ++o) {
                const double g = dout.v[o];
                dw[1].v[o] += g;
                double* dwrow = dw[0].v.data() + o * spec.in;
                const double* wrow = W.v.data() + o * spec.in;
                for (std::size_t i = 0; i < spec.in; ++i) {
                    dwrow[i] += g * in.v[i];
                    din.v[i] += g * wrow[i];
                }
            }
            break;
        }
        case LayerKind::conv2d: {
            const Tensor& W = w[0];
            const std::size_t h = in.shape[1], wd = in.shape[2];
            const std::size_t oh = dout.shape[1], ow = dout.shape[2];
            const std::size_t k = spec.kernel, s = spec.stride;
            const long p = static_cast<long>(spec.pad);
            for (std::size_t oc = 0; oc < spec.out_ch; ++oc) {
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const double g = dout.v[(oc * oh + oy) * ow + ox];
                        if (g == 0.0) continue;
                        dw[1].v[oc] += g;
                        for (std::size_t ic = 0; ic < spec.in_ch; ++ic) {
                            const double* iplane = in.v.data() + ic * h * wd;
                            double* diplane = din.v.data() + ic * h * wd;
                            const std::size_t wbase = ((oc * spec.in_ch + ic) * k) * k;
                            for (std::size_t ky = 0; ky < k; ++ky) {
                                const long iy = static_cast<long>(oy * s + ky) - p;
                                if (iy < 0 || iy >= static_cast<long>(h)) continue;
                                const std::size_t row = static_cast<std::size_t>(iy) * wd;
                                for (std::size_t kx = 0; kx < k; ++kx) {
                                    const long ix = static_cast<long>(ox * s + kx) - p;
                                    if (ix < 0 || ix >= static_cast<long>(wd)) continue;
                                    const std::size_t ii = row + static_cast<std::size_t>(ix);
                                    dw[0].v[wbase + ky * k + kx] += g * iplane[ii];
                                    diplane[ii] += g * W.v[wbase + ky * k + kx];
                                }
                            }
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::relu:
            for (std::size_t i = 0; i < in.v.size(); ++i)
                din.v[i] = in.v[i] > 0.0 ? dout.v[i] : 0.0;
            break;
        case LayerKind::global_avg_pool: {
            const std::size_t c = in.shape[0], hw = in.shape[1] * in.shape[2];
            const double inv = 1.0 / static_cast<double>(hw);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = dout.v[ch] * inv;
                double* plane = din.v.data() + ch * hw;
                for (std::size_t i = 0; i < hw; ++i) plane[i] = g;
            }
            break;
        }
        case LayerKind::flatten:
            din.v = dout.v;
            break;
    }
}

std::vector<Tensor> forward_trace(const ModelParams& model, const Tensor& input) {
    std::vector<Tensor> acts;
    acts.reserve(model.layers.size() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerSpec& spec = model.layers[l];
        Tensor out = Tensor::zeros(output_shape(spec, acts.back().shape, l));
        forward_one(spec, model.weights[l], acts.back(), out);
        acts.push_back(std::move(out));
    }
    return acts;
}

// Loss of the network head given its final output; fills dOut when not null.
double head_loss(const ModelParams& model, const Tensor& out, const Target& target,
                 Tensor* dout) {
    double loss = 0.0;
    if (!model.regression()) {
        if (!target.is_class) throw ArgError("classifier model needs a class label");
        if (out.v.size() != model.class_count)
            throw ArgError("model emitted " + std::to_string(out.v.size()) +
                           " logits, class_count is " + std::to_string(model.class_count));
        if (target.label >= model.class_count)
            throw ArgError("label " + std::to_string(target.label) + " out of range for " +
                           std::to_string(model.class_count) + " classes");
        double mx = out.v[0];
        for (double v : out.v) mx = std::max(mx, v);
        double sum = 0.0;
        for (double v : out.v) sum += std::exp(v - mx);
        const double log_sum = std::log(sum) + mx;
        loss = log_sum - out.v[target.label];
        if (dout) {
            dout->shape = out.shape;
            dout->v.resize(out.v.size());
            for (std::size_t i = 0; i < out.v.size(); ++i)
                dout->v[i] = std::exp(out.v[i] - log_sum);
            dout->v[target.label] -= 1.0;
        }
    } else {
        if (target.is_class) throw ArgError("regression model needs a real target");
        if (out.v.size() != 1)
            throw ArgError("regression model emitted " + std::to_string(out.v.size()) +
                           " outputs, expected 1");
        const double d = out.v[0] - target.value;
        double dl = 0.0;
        if (model.loss == LossKind::squared) {
            loss = 0.5 * d * d;
            dl = d;
        } else if (model.loss == LossKind::epsilon_insensitive) {
            const double excess = std::abs(d) - model.loss_epsilon;
            loss = excess > 0.0 ? excess : 0.0;
            dl = excess > 0.0 ? (d > 0.0 ? 1.0 : -1.0) : 0.0;
        } else {
            throw ArgError("regression model with a classification loss");
        }
        if (dout) {
            dout->shape = out.shape;
            dout->v.assign(1, dl);
        }
    }
    if (!std::isfinite(loss)) throw NumericError("non-finite loss");
    return loss;
}

} // namespace

ModelParams build_model(std::vector<LayerSpec> layers, std::size_t class_count) {
    ModelParams model;
    model.class_count = class_count;
    model.weights.reserve(layers.size());
    for (const LayerSpec& spec : layers) {
        std::vector<Tensor> w;
        switch (spec.kind) {
            case LayerKind::dense:
                if (spec.in == 0 || spec.out == 0) throw ArgError("dense layer with zero size");
                w.push_back(Tensor::zeros({spec.out, spec.in}));
                w.push_back(Tensor::zeros({spec.out}));
                break;
            case LayerKind::conv2d:
                if (spec.in_ch == 0 || spec.out_ch == 0 || spec.kernel == 0 || spec.stride == 0)
                    throw ArgError("conv2d layer with zero size");
                w.push_back(Tensor::zeros({spec.out_ch, spec.in_ch, spec.kernel, spec.kernel}));
                w.push_back(Tensor::zeros({spec.out_ch}));
                break;
            default:
                break;
        }
        model.weights.push_back(std::move(w));
    }
    model.layers = std::move(layers);
    return model;
}

void init_params(ModelParams& model, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x696e6974ULL)); // "init"
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerSpec& spec = model.layers[l];
        if (spec.kind != LayerKind::dense && spec.kind != LayerKind::conv2d) continue;
        const std::size_t fan_in = spec.kind == LayerKind::dense
                                       ? spec.in
                                       : spec.in_ch * spec.kernel * spec.kernel;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : model.weights[l][0].v) w = (2.0 * rng.uniform01() - 1.0) * limit;
        std::fill(model.weights[l][1].v.begin(), model.weights[l][1].v.end(), 0.0);
    }
}

Tensor forward(const ModelParams& model, const Tensor& input) {
    if (input.v.size() != shape_prod(input.shape))
        throw ArgError("input tensor size does not match its shape");
    Tensor cur = input;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const LayerSpec& spec = model.layers[l];
        Tensor out = Tensor::zeros(output_shape(spec, cur.shape, l));
        forward_one(spec, model.weights[l], cur, out);
        cur = std::move(out);
    }
    return cur;
}

Gradients zero_gradients(const ModelParams& model) {
    Gradients g;
    g.g.reserve(model.weights.size());
    for (const auto& layer : model.weights) {
        std::vector<Tensor> lz;
        lz.reserve(layer.size());
        for (const auto& t : layer) lz.push_back(Tensor::zeros(t.shape));
        g.g.push_back(std::move(lz));
    }
    return g;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
    for (std::size_t l = 0; l < into.g.size(); ++l)
        for (std::size_t t = 0; t < into.g[l].size(); ++t)
            for (std::size_t i = 0; i < into.g[l][t].v.size(); ++i)
                into.g[l][t].v[i] += scale * g.g[l][t].v[i];
}

double loss_and_grad(const ModelParams& model, const Tensor& input, const Target& target,
                     Gradients& grads) {
    const std::vector<Tensor> acts = forward_trace(model, input);
    grads = zero_gradients(model);

    Tensor dout;
    const double loss = head_loss(model, acts.back(), target, &dout);

    for (std::size_t l = model.layers.size(); l-- > 0;) {
        Tensor din = Tensor::zeros(acts[l].shape);
        backward_one(model.layers[l], model.weights[l], acts[l], dout, din, grads.g[l]);
        dout = std::move(din);
    }
    return loss;
}

double loss_only(const ModelParams& model, const Tensor& input, const Target& target) {
    const Tensor out = forward(model, input);
    return head_loss(model, out, target, nullptr);
}

OptimizerState make_optimizer(const ModelParams& model, double lr, double weight_decay) {
    OptimizerState st;
    st.lr = lr;
    st.weight_decay = weight_decay;
    const Gradients z = zero_gradients(model);
    st.m = z.g;
    st.v = z.g;
    return st;
}

void adamw_step(ModelParams& model, const Gradients& grads, OptimizerState& state) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (std::size_t t = 0; t < model.weights[l].size(); ++t) {
            auto& w = model.weights[l][t].v;
            auto& m = state.m[l][t].v;
            auto& v = state.v[l][t].v;
            const auto& g = grads.g[l][t].v;
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
                v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= state.lr * (mhat / (std::sqrt(vhat) + state.eps) +
                                    state.weight_decay * w[i]);
            }
        }
    }
}

double grad_check(const ModelParams& model, const Tensor& input, const Target& target,
                  double h) {
    Gradients analytic;
    loss_and_grad(model, input, target, analytic);

    ModelParams probe = model;
    double max_rel = 0.0;
    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
        for (std::size_t t = 0; t < probe.weights[l].size(); ++t) {
            for (std::size_t i = 0; i < probe.weights[l][t].v.size(); ++i) {
                double& w = probe.weights[l][t].v[i];
                const double saved = w;
                w = saved + h;
                const double lp = loss_only(probe, input, target);
                w = saved - h;
                const double lm = loss_only(probe, input, target);
                w = saved;
                const double numeric = (lp - lm) / (2.0 * h);
                const double a = analytic.g[l][t].v[i];
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
                max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
            }
        }
    }
    return max_rel;
}

namespace {

constexpr char kVsmdMagic[4] = {'V', 'S', 'M', 'D'};
constexpr std::uint32_t kVsmdVersion = 1;

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

LayerSpec layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") return LayerSpec::dense(j.at("in"), j.at("out"));
    if (kind == "conv2d")
        return LayerSpec::conv2d(j.at("in_ch"), j.at("out_ch"), j.at("kernel"), j.at("stride"),
                                 j.at("pad"));
    if (kind == "relu") return LayerSpec::relu();
    if (kind == "global_avg_pool") return LayerSpec::global_avg_pool();
    if (kind == "flatten") return LayerSpec::flatten();
    throw FormatError("unknown layer kind '" + kind + "'");
}

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::softmax_ce: return "softmax_ce";
        case LossKind::squared: return "squared";
        case LossKind::epsilon_insensitive: return "epsilon_insensitive";
    }
    return "?";
}

LossKind loss_from_name(const std::string& s) {
    if (s == "softmax_ce") return LossKind::softmax_ce;
    if (s == "squared") return LossKind::squared;
    if (s == "epsilon_insensitive") return LossKind::epsilon_insensitive;
    throw FormatError("unknown loss kind '" + s + "'");
}

} // namespace

void serialize_model(const ModelParams& model, const std::filesystem::path& path) {
    json meta;
    meta["layers"] = json::array();
    for (const LayerSpec& spec : model.layers) {
        json j;
        j["kind"] = layer_kind_name(spec.kind);
        if (spec.kind == LayerKind::dense) {
            j["in"] = spec.in;
            j["out"] = spec.out;
        } else if (spec.kind == LayerKind::conv2d) {
            j["in_ch"] = spec.in_ch;
            j["out_ch"] = spec.out_ch;
            j["kernel"] = spec.kernel;
            j["stride"] = spec.stride;
            j["pad"] = spec.pad;
        }
        meta["layers"].push_back(j);
    }
    meta["class_count"] = model.class_count;
    meta["loss"] = loss_name(model.loss);
    meta["loss_epsilon"] = model.loss_epsilon;
    meta["kind"] = model.kind_tag;
    meta["input_pad"] = model.input_pad;
    meta["offset_bound"] = model.offset_bound;
    const std::string meta_str = meta.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(kVsmdMagic, 4);
    binio::put_u32(os, kVsmdVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(meta_str.size()));
    os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& layer : model.weights)
        for (const auto& t : layer)
            for (double w : t.v) binio::put_f32(os, static_cast<float>(w));
    if (!os) throw IoError("write failed for " + path.string());
}

ModelParams deserialize_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());

    char magic[4];
    if (!is.read(magic, 4)) throw FormatError(path.string() + ": truncated header");
    if (std::memcmp(magic, kVsmdMagic, 4) != 0)
        throw FormatError(path.string() + ": bad magic (expected VSMD)");
    std::uint32_t version = 0, meta_len = 0;
    if (!binio::get_u32(is, version)) throw FormatError(path.string() + ": truncated header");
    if (version != kVsmdVersion)
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    if (!binio::get_u32(is, meta_len)) throw FormatError(path.string() + ": truncated header");

    std::string meta_str(meta_len, '\0');
    if (!is.read(meta_str.data(), meta_len))
        throw FormatError(path.string() + ": truncated metadata");
    json meta;
    try {
        meta = json::parse(meta_str);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad metadata JSON: " + e.what());
    }

    std::vector<LayerSpec> layers;
    try {
        for (const json& j : meta.at("layers")) layers.push_back(layer_from_json(j));
        ModelParams model = build_model(std::move(layers), meta.at("class_count"));
        model.loss = loss_from_name(meta.at("loss"));
        model.loss_epsilon = meta.at("loss_epsilon");
        model.kind_tag = meta.at("kind");
        model.input_pad = meta.at("input_pad");
        model.offset_bound = meta.at("offset_bound");

        for (auto& layer : model.weights) {
            for (auto& t : layer) {
                for (double& w : t.v) {
                    float f;
                    if (!binio::get_f32(is, f))
                        throw FormatError(path.string() + ": truncated parameter payload");
                    w = static_cast<double>(f);
                }
            }
        }
        // Trailing bytes mean the payload does not match the layer specs.
        char extra;
        if (is.read(&extra, 1))
            throw FormatError(path.string() + ": parameter payload larger than layer specs");
        return model;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad metadata: " + e.what());
    }
}

void quantize_f32(ModelParams& model) {
    for (auto& layer : model.weights)
        for (auto& t : layer)
            for (double& w : t.v) w = static_cast<double>(static_cast<float>(w));
}

} // namespace framesync::nn

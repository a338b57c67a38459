#include "framesync/datagen.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "framesync/rng.hpp"

namespace framesync {

namespace fs = std::filesystem;
using nlohmann::json;

const char* injection_name(Injection inj) {
    switch (inj) {
        case Injection::none: return "none";
        case Injection::fair: return "fair";
        case Injection::leaky: return "leaky";
    }
    return "?";
}

namespace {

std::optional<Injection> injection_from_name(const std::string& s) {
    if (s == "none") return Injection::none;
    if (s == "fair") return Injection::fair;
    if (s == "leaky") return Injection::leaky;
    return std::nullopt;
}

// Generators emit f32-representable values so ESEQ writes round-trip bit
// exactly and in-memory corpora match their on-disk form.
void quantize_seq(EmbeddingSequence& seq) {
    for (double& v : seq.values) v = static_cast<double>(static_cast<float>(v));
}

// Stream tags for per-pair RNG derivation.
constexpr std::uint64_t kStreamLatent = 1;
constexpr std::uint64_t kStreamView1 = 2;
constexpr std::uint64_t kStreamView2 = 3;
constexpr std::uint64_t kStreamNoise1 = 4;
constexpr std::uint64_t kStreamNoise2 = 5;

EmbeddingSequence observe_view(const std::vector<double>& latent, const SynthConfig& cfg,
                               std::uint64_t map_stream, std::uint64_t noise_stream,
                               const std::string& label) {
    const std::size_t dim = cfg.dim;
    EmbeddingSequence view;
    view.frames = cfg.frames;
    view.dim = dim;
    view.source_id = label;
    view.values.resize(cfg.frames * dim);

    // Per-view random linear map and bias, frozen across frames. Views are
    // mild distortions of a shared space (M = I + delta*G); fully independent
    // maps would decorrelate the views and make alignment unrecoverable.
    constexpr double kViewDistortion = 0.05;
    std::vector<double> map(dim * dim, 0.0);
    std::vector<double> bias(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) map[d * dim + d] = 1.0;
    if (!cfg.identity_views) {
        Rng map_rng(mix_seed(cfg.seed, map_stream));
        const double scale = kViewDistortion / std::sqrt(static_cast<double>(dim));
        for (double& v : map) v += map_rng.gaussian() * scale;
        for (double& v : bias) v = map_rng.gaussian() * kViewDistortion;
    }

    Rng noise_rng(mix_seed(cfg.seed, noise_stream));
    for (std::size_t t = 0; t < cfg.frames; ++t) {
        const double* z = latent.data() + t * dim;
        for (std::size_t r = 0; r < dim; ++r) {
            double acc = bias[r];
            const double* mrow = map.data() + r * dim;
            for (std::size_t c = 0; c < dim; ++c) acc += mrow[c] * z[c];
            if (cfg.view_noise_sigma > 0.0) acc += cfg.view_noise_sigma * noise_rng.gaussian();
            view.at(t, r) = acc;
        }
    }
    return view;
}

} // namespace

void SynthConfig::validate() const {
    if (frames < 62)
        throw ArgError("frames must be at least 62 (got " + std::to_string(frames) + ")");
    if (dim == 0) throw ArgError("dim must be positive");
    if (walk_sigma < 0.0 || view_noise_sigma < 0.0 || positional_weight < 0.0)
        throw ArgError("sigmas and positional weight must be non-negative");
}

LabeledPair gen_latent_pair(const SynthConfig& cfg) {
    cfg.validate();

    std::vector<double> latent(cfg.frames * cfg.dim);
    Rng walk_rng(mix_seed(cfg.seed, kStreamLatent));
    for (std::size_t d = 0; d < cfg.dim; ++d) latent[d] = walk_rng.gaussian();
    for (std::size_t t = 1; t < cfg.frames; ++t)
        for (std::size_t d = 0; d < cfg.dim; ++d)
            latent[t * cfg.dim + d] =
                latent[(t - 1) * cfg.dim + d] + cfg.walk_sigma * walk_rng.gaussian();

    LabeledPair pair;
    pair.seed = cfg.seed;
    pair.true_offset = 0;
    pair.injection = Injection::none;
    pair.v1 = observe_view(latent, cfg, kStreamView1, kStreamNoise1,
                           "synth:" + std::to_string(cfg.seed) + ":v1");
    pair.v2 = observe_view(latent, cfg, kStreamView2, kStreamNoise2,
                           "synth:" + std::to_string(cfg.seed) + ":v2");
    quantize_seq(pair.v1);
    quantize_seq(pair.v2);
    return pair;
}

void add_positional_bias(EmbeddingSequence& seq, double alpha) {
    if (alpha < 0.0) throw ArgError("positional weight must be non-negative");
    if (alpha == 0.0) return;
    seq.validate();

    // Transformer-style sinusoid indexed by the frame's distance from the
    // clip end; shared across all sequences of the same dim.
    const std::size_t dim = seq.dim;
    for (std::size_t t = 0; t < seq.frames; ++t) {
        const double end_distance = static_cast<double>(seq.frames - 1 - t);
        for (std::size_t d = 0; d < dim; ++d) {
            const double exponent =
                static_cast<double>(2 * (d / 2)) / static_cast<double>(dim);
            const double angle = end_distance / std::pow(10000.0, exponent);
            seq.at(t, d) += alpha * ((d % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    }
}

LabeledPair gen_positional_biased_pair(const SynthConfig& cfg) {
    if (!(cfg.positional_weight > 0.0))
        throw ArgError("gen_positional_biased_pair needs positional_weight > 0");
    LabeledPair pair = gen_latent_pair(cfg);
    add_positional_bias(pair.v1, cfg.positional_weight);
    add_positional_bias(pair.v2, cfg.positional_weight);
    quantize_seq(pair.v1);
    quantize_seq(pair.v2);
    return pair;
}

namespace {

EmbeddingSequence crop_rows(const EmbeddingSequence& seq, std::size_t first, std::size_t count) {
    EmbeddingSequence out;
    out.frames = count;
    out.dim = seq.dim;
    out.fps = seq.fps;
    out.source_id = seq.source_id;
    out.values.assign(seq.values.begin() + static_cast<std::ptrdiff_t>(first * seq.dim),
                      seq.values.begin() + static_cast<std::ptrdiff_t>((first + count) * seq.dim));
    return out;
}

void check_injectable(const LabeledPair& pair, long k) {
    if (pair.injection != Injection::none)
        throw ArgError("pair already carries a '" + std::string(injection_name(pair.injection)) +
                       "' injection");
    if (pair.v1.frames != pair.v2.frames)
        throw ArgError("offset injection needs equal-length views (" +
                       std::to_string(pair.v1.frames) + " vs " + std::to_string(pair.v2.frames) +
                       ")");
    const long frames = static_cast<long>(pair.v1.frames);
    if (std::abs(k) >= frames - 1)
        throw ArgError("offset " + std::to_string(k) + " too large for " +
                       std::to_string(frames) + " frames");
}

} // namespace

LabeledPair inject_offset_fair(const LabeledPair& pair, long k) {
    check_injectable(pair, k);
    const std::size_t frames = pair.v1.frames;
    const std::size_t mag = static_cast<std::size_t>(std::abs(k));
    const std::size_t kept = frames - mag;

    LabeledPair out;
    out.seed = pair.seed;
    out.true_offset = k;
    out.injection = Injection::fair;
    if (k >= 0) {
        out.v1 = crop_rows(pair.v1, mag, kept);
        out.v2 = crop_rows(pair.v2, 0, kept);
    } else {
        out.v1 = crop_rows(pair.v1, 0, kept);
        out.v2 = crop_rows(pair.v2, mag, kept);
    }
    return out;
}

LabeledPair inject_offset_leaky(const LabeledPair& pair, long k) {
    check_injectable(pair, k);
    const std::size_t frames = pair.v1.frames;
    const std::size_t mag = static_cast<std::size_t>(std::abs(k));

    LabeledPair out;
    out.seed = pair.seed;
    out.true_offset = k;
    out.injection = Injection::leaky;
    if (k >= 0) {
        out.v1 = crop_rows(pair.v1, mag, frames - mag);
        out.v2 = pair.v2;
    } else {
        out.v1 = pair.v1;
        out.v2 = crop_rows(pair.v2, mag, frames - mag);
    }
    return out;
}

long sample_offset(std::uint64_t seed, long bound) {
    if (bound < 0) throw ArgError("offset bound must be non-negative");
    Rng rng(mix_seed(seed, 0x6f666673ULL)); // "offs"
    return rng.uniform_int(-bound, bound);
}

std::filesystem::path write_manifest(const std::vector<LabeledPair>& pairs,
                                     const std::filesystem::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());

    const fs::path manifest_path = dir / "manifest.jsonl";
    std::ofstream os(manifest_path);
    if (!os) throw IoError("cannot write " + manifest_path.string());

    char name[32];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::snprintf(name, sizeof name, "pair_%05zu", i);
        const std::string v1_name = std::string(name) + "_v1.eseq";
        const std::string v2_name = std::string(name) + "_v2.eseq";
        try {
            write_eseq(pairs[i].v1, dir / v1_name);
            write_eseq(pairs[i].v2, dir / v2_name);
        } catch (const std::exception& e) {
            throw IoError("pair " + std::to_string(i) + ": " + e.what());
        }
        json rec;
        rec["v1_path"] = v1_name;
        rec["v2_path"] = v2_name;
        rec["true_offset"] = pairs[i].true_offset;
        rec["injection"] = injection_name(pairs[i].injection);
        rec["seed"] = pairs[i].seed;
        os << rec.dump() << '\n';
    }
    if (!os) throw IoError("write failed for " + manifest_path.string());
    return manifest_path;
}

std::vector<LabeledPair> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot open " + manifest_path.string());
    const fs::path base = manifest_path.parent_path();

    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(manifest_path.string() + ": bad JSON at line " +
                              std::to_string(line_no) + ": " + e.what());
        }
        for (const char* field : {"v1_path", "v2_path", "true_offset", "injection", "seed"})
            if (!rec.contains(field))
                throw FormatError(manifest_path.string() + ": missing field '" + field +
                                  "' at line " + std::to_string(line_no));
        const auto injection = injection_from_name(rec["injection"].get<std::string>());
        if (!injection)
            throw FormatError(manifest_path.string() + ": unknown injection '" +
                              rec["injection"].get<std::string>() + "' at line " +
                              std::to_string(line_no));
        LabeledPair pair;
        pair.v1 = read_eseq(base / rec["v1_path"].get<std::string>());
        pair.v2 = read_eseq(base / rec["v2_path"].get<std::string>());
        pair.true_offset = rec["true_offset"].get<long>();
        pair.injection = *injection;
        pair.seed = rec["seed"].get<std::uint64_t>();
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

} // namespace framesync

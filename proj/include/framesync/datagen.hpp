#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "framesync/embeddings.hpp"

namespace framesync {

enum class Injection { none, fair, leaky };

const char* injection_name(Injection inj);

// Two views of the same scene plus the injected ground-truth offset.
struct LabeledPair {
    EmbeddingSequence v1, v2;
    long true_offset = 0;
    Injection injection = Injection::none;
    std::uint64_t seed = 0;
};

struct SynthConfig {
    std::size_t frames = 120;
    std::size_t dim = 32;
    double walk_sigma = 0.1;        // latent random-walk step scale
    double view_noise_sigma = 0.0;  // per-view additive gaussian noise
    double positional_weight = 0.0; // alpha for the positional-bias component
    std::uint64_t seed = 0;
    bool identity_views = false; // force M = I, b = 0 (degenerate test config)

    void validate() const; // frames >= 62, sigmas >= 0
};

// Latent gaussian random walk z_t observed through two seeded random linear
// views plus per-view noise. Deterministic per seed; injection = none.
LabeledPair gen_latent_pair(const SynthConfig& cfg);

// Adds alpha * P(distance from clip end) to every frame, where P is a fixed
// sinusoidal encoding shared by all sequences of the same dim. Models an
// inference-time positional encoding: apply it to the clip as it will be
// consumed (i.e. after any cropping).
void add_positional_bias(EmbeddingSequence& seq, double alpha);

// gen_latent_pair plus the positional component on both (uncropped) views.
LabeledPair gen_positional_biased_pair(const SynthConfig& cfg);

// Offset injection that keeps durations identical: for k >= 0 drop the first
// k rows of v1 and the last k rows of v2 (mirrored for k < 0). Ground truth:
// v1'[i] is simultaneous with v2'[i + k].
LabeledPair inject_offset_fair(const LabeledPair& pair, long k);

// Offset injection that crops only one side, leaving a duration difference
// of |k| - the leak under test.
LabeledPair inject_offset_leaky(const LabeledPair& pair, long k);

// Uniform integer in [-bound, +bound], deterministic per seed.
long sample_offset(std::uint64_t seed, long bound = 30);

// Writes each pair's views as ESEQ files plus a JSON-lines manifest
// ({v1_path, v2_path, true_offset, injection, seed} per line, paths relative
// to the manifest). Returns the manifest path.
std::filesystem::path write_manifest(const std::vector<LabeledPair>& pairs,
                                     const std::filesystem::path& dir);
std::vector<LabeledPair> read_manifest(const std::filesystem::path& manifest_path);

} // namespace framesync

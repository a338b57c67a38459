#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "framesync/errors.hpp"

namespace framesync {

// Per-frame embedding matrix (frames x dim, row-major). The unit every
// pipeline stage consumes. Values are doubles in memory; the on-disk ESEQ
// format stores f32, so sequences that came from disk are f32-representable.
struct EmbeddingSequence {
    std::size_t frames = 0;
    std::size_t dim = 0;
    double fps = 29.97;
    std::vector<double> values; // frames * dim
    std::string source_id;

    double at(std::size_t frame, std::size_t d) const { return values[frame * dim + d]; }
    double& at(std::size_t frame, std::size_t d) { return values[frame * dim + d]; }
    std::span<const double> row(std::size_t frame) const {
        return {values.data() + frame * dim, dim};
    }
    std::span<double> row(std::size_t frame) {
        return {values.data() + frame * dim, dim};
    }

    // Throws ArgError if the invariants do not hold (shape, finiteness).
    void validate() const;
};

// ESEQ binary format: magic "ESEQ", u32 version (=1), u32 frames, u32 dim,
// f32 fps, then frames*dim f32 values row-major, all little-endian.
// Paths ending in ".csv" dispatch to a text fallback: one frame per line,
// comma-separated reals, no header.
EmbeddingSequence read_eseq(const std::filesystem::path& path);
void write_eseq(const EmbeddingSequence& seq, const std::filesystem::path& path);

// Desk-scale pixel feature extractor: every PGM/PPM image in frame_dir
// (lexicographic filename order) is converted to grayscale, box-filtered down
// to 16x16, flattened to 256 values in [0,1]. With with_temporal_diff a
// second 256-value block of per-cell deltas against the previous frame is
// appended (first frame's block is all zeros), giving dim=512.
EmbeddingSequence extract_pixel_features(const std::filesystem::path& frame_dir,
                                         bool with_temporal_diff);

// Stride-1 mean pooling: output row i is the mean of input rows i..i+window-1.
EmbeddingSequence sliding_window_pool(const EmbeddingSequence& seq, std::size_t window);

// Replace contents with seeded gaussian noise rescaled so the global mean and
// variance match the input. Shape is preserved; zero-variance input yields a
// constant sequence at the input mean.
EmbeddingSequence noise_substitute(const EmbeddingSequence& seq, std::uint64_t seed);

} // namespace framesync

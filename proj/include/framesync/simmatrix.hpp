#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "framesync/embeddings.hpp"

namespace framesync {

enum class MatrixNorm { raw, row_softmax };

// Inter-video frame similarity matrix. Rows index frames of v1, columns
// frames of v2; entry (i, j) is the negative Euclidean distance between the
// two frame embeddings (raw), or a row-stochastic softmax of that.
struct SimilarityMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // rows * cols
    MatrixNorm normalized = MatrixNorm::raw;
    std::optional<std::size_t> padded_to;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

// values[i][j] = -||a.row(i) - b.row(j)||_2. Throws ArgError on dim mismatch.
SimilarityMatrix pairwise_neg_l2(const EmbeddingSequence& a, const EmbeddingSequence& b);

// Row-wise softmax with max subtraction. Input must be raw.
SimilarityMatrix row_softmax(const SimilarityMatrix& m);

// Zero-pad to size x size with the original block anchored at (0, 0).
// Throws RangeError if either dimension exceeds size.
SimilarityMatrix pad_to_square(const SimilarityMatrix& m, std::size_t size);

// Binary PGM (P5) render, min -> 0 and max -> 255; constant matrices map to 0.
void render_pgm(const SimilarityMatrix& m, const std::filesystem::path& path);

// Matrix export reusing the ESEQ container (frames = rows, dim = cols).
EmbeddingSequence matrix_as_eseq(const SimilarityMatrix& m);
SimilarityMatrix matrix_from_eseq(const EmbeddingSequence& seq);

} // namespace framesync

#include "framesync/simmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace framesync {

SimilarityMatrix pairwise_neg_l2(const EmbeddingSequence& a, const EmbeddingSequence& b) {
    if (a.dim != b.dim)
        throw ArgError("embedding dim mismatch: " + std::to_string(a.dim) + " vs " +
                       std::to_string(b.dim));
    a.validate();
    b.validate();

    SimilarityMatrix m;
    m.rows = a.frames;
    m.cols = b.frames;
    m.values.resize(m.rows * m.cols);
    const std::size_t dim = a.dim;
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* ra = a.values.data() + i * dim;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double* rb = b.values.data() + j * dim;
            double acc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = ra[d] - rb[d];
                acc += diff * diff;
            }
            m.values[i * m.cols + j] = -std::sqrt(acc);
        }
    }
    return m;
}

SimilarityMatrix row_softmax(const SimilarityMatrix& m) {
    if (m.normalized != MatrixNorm::raw)
        throw ArgError("row_softmax expects a raw matrix");

    SimilarityMatrix out = m;
    out.normalized = MatrixNorm::row_softmax;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = out.values.data() + i * m.cols;
        double mx = row[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) row[j] /= sum;
    }
    return out;
}

SimilarityMatrix pad_to_square(const SimilarityMatrix& m, std::size_t size) {
    if (m.rows > size || m.cols > size)
        throw RangeError("matrix " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                         " exceeds pad size " + std::to_string(size));

    SimilarityMatrix out;
    out.rows = size;
    out.cols = size;
    out.normalized = m.normalized;
    out.padded_to = size;
    out.values.assign(size * size, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        std::copy(m.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols),
                  m.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.cols),
                  out.values.begin() + static_cast<std::ptrdiff_t>(i * size));
    return out;
}

void render_pgm(const SimilarityMatrix& m, const std::filesystem::path& path) {
    if (m.rows == 0 || m.cols == 0) throw ArgError("cannot render an empty matrix");

    double lo = m.values[0], hi = m.values[0];
    for (double v : m.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << "P5\n" << m.cols << ' ' << m.rows << "\n255\n";
    for (double v : m.values) {
        const int pix = span == 0.0
                            ? 0
                            : static_cast<int>(std::lround((v - lo) / span * 255.0));
        os.put(static_cast<char>(pix));
    }
    if (!os) throw IoError("write failed for " + path.string());
}

EmbeddingSequence matrix_as_eseq(const SimilarityMatrix& m) {
    EmbeddingSequence seq;
    seq.frames = m.rows;
    seq.dim = m.cols;
    seq.values = m.values;
    seq.source_id = "simmatrix";
    return seq;
}

SimilarityMatrix matrix_from_eseq(const EmbeddingSequence& seq) {
    SimilarityMatrix m;
    m.rows = seq.frames;
    m.cols = seq.dim;
    m.values = seq.values;
    return m;
}

} // namespace framesync

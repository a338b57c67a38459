#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "framesync/embeddings.hpp"
#include "framesync/rng.hpp"
#include "framesync/simmatrix.hpp"

namespace testutil {

// Unique scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("framesync_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline framesync::EmbeddingSequence make_seq(std::size_t frames, std::size_t dim,
                                             std::uint64_t seed) {
    framesync::EmbeddingSequence seq;
    seq.frames = frames;
    seq.dim = dim;
    seq.values.resize(frames * dim);
    framesync::Rng rng(seed);
    for (double& v : seq.values) v = rng.gaussian();
    return seq;
}

// f32-representable variant, for bit-exact ESEQ round-trip checks.
inline framesync::EmbeddingSequence make_seq_f32(std::size_t frames, std::size_t dim,
                                                 std::uint64_t seed) {
    framesync::EmbeddingSequence seq = make_seq(frames, dim, seed);
    for (double& v : seq.values) v = static_cast<double>(static_cast<float>(v));
    return seq;
}

inline framesync::SimilarityMatrix make_matrix(std::size_t rows, std::size_t cols,
                                               std::uint64_t seed, double lo = -5.0,
                                               double hi = 0.0) {
    framesync::SimilarityMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(rows * cols);
    framesync::Rng rng(seed);
    for (double& v : m.values) v = lo + (hi - lo) * rng.uniform01();
    return m;
}

inline bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

inline std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Minimal binary PGM writer for fixture frames.
inline void write_pgm_fixture(const std::filesystem::path& p, std::size_t w, std::size_t h,
                              const std::vector<unsigned char>& pixels) {
    std::ofstream os(p, std::ios::binary);
    os << "P5\n" << w << ' ' << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()),
             static_cast<std::streamsize>(pixels.size()));
}

inline void write_const_pgm(const std::filesystem::path& p, std::size_t w, std::size_t h,
                            unsigned char value) {
    write_pgm_fixture(p, w, h, std::vector<unsigned char>(w * h, value));
}

} // namespace testutil

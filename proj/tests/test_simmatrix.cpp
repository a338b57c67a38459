#include <doctest.h>

#include <cmath>
#include <fstream>

#include "framesync/simmatrix.hpp"
#include "helpers.hpp"

using namespace framesync;
using testutil::TempDir;

namespace {

// Test-side oracle, kept independent of the library kernel.
double oracle_l2(const EmbeddingSequence& a, std::size_t i, const EmbeddingSequence& b,
                 std::size_t j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.dim; ++d)
        acc += (a.at(i, d) - b.at(j, d)) * (a.at(i, d) - b.at(j, d));
    return std::sqrt(acc);
}

} // namespace

TEST_SUITE("simmatrix") {

TEST_CASE("pairwise neg l2: hand-checked 2x2") {
    EmbeddingSequence a, b;
    a.frames = b.frames = 2;
    a.dim = b.dim = 2;
    a.values = {0, 0, 1, 0};
    b.values = {0, 0, 0, 1};
    const SimilarityMatrix m = pairwise_neg_l2(a, b);
    CHECK(m.rows == 2);
    CHECK(m.cols == 2);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(m.at(0, 1) == doctest::Approx(-1.0));
    CHECK(m.at(1, 0) == doctest::Approx(-1.0));
    CHECK(m.at(1, 1) == doctest::Approx(-std::sqrt(2.0)));
    CHECK(m.normalized == MatrixNorm::raw);
}

TEST_CASE("pairwise neg l2 matches the brute-force oracle") {
    const EmbeddingSequence a = testutil::make_seq(5, 3, 101);
    const EmbeddingSequence b = testutil::make_seq(7, 3, 202);
    const SimilarityMatrix m = pairwise_neg_l2(a, b);
    REQUIRE(m.rows == 5);
    REQUIRE(m.cols == 7);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 7; ++j)
            CHECK(m.at(i, j) == doctest::Approx(-oracle_l2(a, i, b, j)).epsilon(1e-6));
}

TEST_CASE("self-similarity is symmetric with a zero diagonal and entries <= 0") {
    const EmbeddingSequence a = testutil::make_seq(6, 4, 55);
    const SimilarityMatrix m = pairwise_neg_l2(a, a);
    for (std::size_t i = 0; i < m.rows; ++i) {
        CHECK(m.at(i, i) == 0.0);
        for (std::size_t j = 0; j < m.cols; ++j) {
            CHECK(m.at(i, j) <= 0.0);
            CHECK(m.at(i, j) == m.at(j, i));
        }
    }
}

TEST_CASE("dim mismatch names both dims") {
    const EmbeddingSequence a = testutil::make_seq(3, 4, 1);
    const EmbeddingSequence b = testutil::make_seq(3, 5, 2);
    try {
        pairwise_neg_l2(a, b);
        FAIL("expected ArgError");
    } catch (const ArgError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('4') != std::string::npos);
        CHECK(msg.find('5') != std::string::npos);
    }
}

TEST_CASE("row softmax: symmetric row") {
    SimilarityMatrix m;
    m.rows = 1;
    m.cols = 2;
    m.values = {0.0, 0.0};
    const SimilarityMatrix s = row_softmax(m);
    CHECK(s.at(0, 0) == doctest::Approx(0.5));
    CHECK(s.at(0, 1) == doctest::Approx(0.5));
    CHECK(s.normalized == MatrixNorm::row_softmax);
}

TEST_CASE("row softmax: closed forms") {
    SimilarityMatrix m;
    m.rows = 2;
    m.cols = 2;
    m.values = {std::log(2.0), 0.0, 1000.0, 999.0};
    const SimilarityMatrix s = row_softmax(m);
    CHECK(s.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // Max subtraction keeps huge logits finite.
    const double e = std::exp(1.0);
    CHECK(s.at(1, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(s.at(1, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
}

TEST_CASE("row softmax rows sum to one with positive entries") {
    const SimilarityMatrix m = testutil::make_matrix(8, 11, 9);
    const SimilarityMatrix s = row_softmax(m);
    for (std::size_t i = 0; i < s.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols; ++j) {
            CHECK(s.at(i, j) > 0.0);
            sum += s.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("row softmax preserves per-row argmax") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SimilarityMatrix m = testutil::make_matrix(6, 9, 300 + seed);
        const SimilarityMatrix s = row_softmax(m);
        for (std::size_t i = 0; i < m.rows; ++i) {
            std::size_t raw_best = 0, soft_best = 0;
            for (std::size_t j = 1; j < m.cols; ++j) {
                if (m.at(i, j) > m.at(i, raw_best)) raw_best = j;
                if (s.at(i, j) > s.at(i, soft_best)) soft_best = j;
            }
            CHECK(raw_best == soft_best);
        }
    }
}

TEST_CASE("row softmax rejects an already-softmaxed matrix") {
    const SimilarityMatrix m = testutil::make_matrix(2, 2, 4);
    CHECK_THROWS_AS(row_softmax(row_softmax(m)), ArgError);
}

TEST_CASE("pad anchors the original block top-left and zero-fills the rest") {
    SimilarityMatrix m;
    m.rows = m.cols = 2;
    m.values = {1, 2, 3, 4};
    const SimilarityMatrix p = pad_to_square(m, 4);
    CHECK(p.rows == 4);
    CHECK(p.cols == 4);
    CHECK(p.padded_to == 4);
    CHECK(p.at(0, 0) == 1.0);
    CHECK(p.at(0, 1) == 2.0);
    CHECK(p.at(1, 0) == 3.0);
    CHECK(p.at(1, 1) == 4.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i > 1 || j > 1) CHECK(p.at(i, j) == 0.0);
}

TEST_CASE("pad of an exact-size matrix keeps the values") {
    const SimilarityMatrix m = testutil::make_matrix(5, 5, 77);
    const SimilarityMatrix p = pad_to_square(m, 5);
    CHECK(testutil::same_values(p.values, m.values));
}

TEST_CASE("pad overflow is a range error") {
    const SimilarityMatrix m = testutil::make_matrix(300, 120, 5);
    CHECK_THROWS_AS(pad_to_square(m, 256), RangeError);
}

TEST_CASE("render pgm: endpoints, header, constant case") {
    TempDir tmp;
    SimilarityMatrix m;
    m.rows = m.cols = 2;
    m.values = {0.0, -1.0, -1.0, 0.0};
    const auto path = tmp.path / "m.pgm";
    render_pgm(m, path);
    const auto bytes = testutil::read_bytes(path);
    const std::string header = "P5\n2 2\n255\n";
    REQUIRE(bytes.size() == header.size() + 4);
    CHECK(std::string(bytes.begin(),
                      bytes.begin() + static_cast<std::ptrdiff_t>(header.size())) == header);
    const auto* pix = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
    CHECK(pix[0] == 255);
    CHECK(pix[1] == 0);
    CHECK(pix[2] == 0);
    CHECK(pix[3] == 255);

    SimilarityMatrix flat;
    flat.rows = flat.cols = 3;
    flat.values.assign(9, -2.0);
    const auto flat_path = tmp.path / "flat.pgm";
    render_pgm(flat, flat_path);
    const auto flat_bytes = testutil::read_bytes(flat_path);
    REQUIRE(flat_bytes.size() == header.size() + 9);
    for (std::size_t i = header.size(); i < flat_bytes.size(); ++i)
        CHECK(static_cast<unsigned char>(flat_bytes[i]) == 0);
}

TEST_CASE("matrix round-trips through the eseq container") {
    const SimilarityMatrix m = testutil::make_matrix(4, 6, 88);
    const SimilarityMatrix back = matrix_from_eseq(matrix_as_eseq(m));
    CHECK(back.rows == m.rows);
    CHECK(back.cols == m.cols);
    CHECK(testutil::same_values(back.values, m.values));
}

} // TEST_SUITE

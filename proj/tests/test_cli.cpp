#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "framesync/datagen.hpp"
#include "framesync/simmatrix.hpp"
#include "helpers.hpp"

using namespace framesync;
using testutil::TempDir;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const auto out_file = std::filesystem::temp_directory_path() /
                          ("framesync_cli_out_" + std::to_string(::getpid()) + "_" +
                           std::to_string(counter++));
    const std::string cmd =
        std::string("\"") + FRAMESYNC_CLI_PATH + "\" " + args + " > " + out_file.string() + " 2>&1";
    const int status = std::system(cmd.c_str());

    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream is(out_file);
    std::stringstream ss;
    ss << is.rdbuf();
    r.output = ss.str();
    std::filesystem::remove(out_file);
    return r;
}

std::size_t count_lines(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line))
        if (!line.empty()) ++n;
    return n;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes the corpus and is byte-reproducible") {
    TempDir tmp;
    const std::string dir1 = (tmp.path / "c1").string();
    const std::string dir2 = (tmp.path / "c2").string();
    const std::string flags = "gen --pairs 3 --frames 70 --dim 8 --seed 5 --out-dir ";
    CHECK(run_cli(flags + dir1).exit_code == 0);
    CHECK(run_cli(flags + dir2).exit_code == 0);

    CHECK(count_lines(tmp.path / "c1" / "manifest.jsonl") == 3);
    std::size_t eseq_count = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp.path / "c1"))
        if (e.path().extension() == ".eseq") ++eseq_count;
    CHECK(eseq_count == 6);
    CHECK(std::filesystem::exists(tmp.path / "c1" / "run.json"));

    CHECK(testutil::read_bytes(tmp.path / "c1" / "manifest.jsonl") ==
          testutil::read_bytes(tmp.path / "c2" / "manifest.jsonl"));
    CHECK(testutil::read_bytes(tmp.path / "c1" / "pair_00000_v1.eseq") ==
          testutil::read_bytes(tmp.path / "c2" / "pair_00000_v1.eseq"));
}

TEST_CASE("gen below the minimum frame count is a usage error") {
    TempDir tmp;
    const CliResult r = run_cli("gen --pairs 1 --frames 50 --dim 4 --seed 1 --out-dir " +
                                (tmp.path / "x").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("62") != std::string::npos);
}

TEST_CASE("gen without a seed is a usage error") {
    TempDir tmp;
    const CliResult r = run_cli("gen --pairs 1 --out-dir " + (tmp.path / "x").string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("features extracts pixel features from a frame directory") {
    TempDir tmp;
    const auto frames = tmp.path / "frames";
    std::filesystem::create_directories(frames);
    for (int i = 0; i < 3; ++i)
        testutil::write_const_pgm(frames / ("f" + std::to_string(i) + ".pgm"), 16, 16,
                                  static_cast<unsigned char>(50 + i));
    const auto out = tmp.path / "feat.eseq";
    CHECK(run_cli("features --frames-dir " + frames.string() + " --out " + out.string())
              .exit_code == 0);
    const EmbeddingSequence seq = read_eseq(out);
    CHECK(seq.frames == 3);
    CHECK(seq.dim == 256);
    CHECK(std::filesystem::exists(tmp.path / "feat.eseq.run.json"));

    const auto out2 = tmp.path / "feat2.eseq";
    CHECK(run_cli("features --frames-dir " + frames.string() + " --temporal-diff --out " +
                  out2.string())
              .exit_code == 0);
    CHECK(read_eseq(out2).dim == 512);
}

TEST_CASE("simmat produces the matrix and optional pgm") {
    TempDir tmp;
    const EmbeddingSequence seq = testutil::make_seq_f32(20, 6, 9);
    write_eseq(seq, tmp.path / "v.eseq");
    const auto out = tmp.path / "m.eseq";
    const auto pgm = tmp.path / "m.pgm";
    const CliResult r = run_cli("simmat --v1 " + (tmp.path / "v.eseq").string() + " --v2 " +
                                (tmp.path / "v.eseq").string() + " --out " + out.string() +
                                " --pgm " + pgm.string());
    CHECK(r.exit_code == 0);

    const SimilarityMatrix m = matrix_from_eseq(read_eseq(out));
    CHECK(m.rows == 20);
    CHECK(m.cols == 20);
    for (std::size_t i = 0; i < m.rows; ++i) CHECK(m.at(i, i) == 0.0);

    const auto bytes = testutil::read_bytes(pgm);
    CHECK(std::string(bytes.begin(), bytes.begin() + 3) == "P5\n");
}

TEST_CASE("simmat dim mismatch exits nonzero with a message") {
    TempDir tmp;
    write_eseq(testutil::make_seq_f32(5, 4, 1), tmp.path / "a.eseq");
    write_eseq(testutil::make_seq_f32(5, 6, 2), tmp.path / "b.eseq");
    const CliResult r = run_cli("simmat --v1 " + (tmp.path / "a.eseq").string() + " --v2 " +
                                (tmp.path / "b.eseq").string() + " --out " +
                                (tmp.path / "m.eseq").string());
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("mismatch") != std::string::npos);
}

TEST_CASE("predict prints exactly one integer line in text format") {
    TempDir tmp;
    const EmbeddingSequence seq = testutil::make_seq_f32(30, 8, 10);
    write_eseq(seq, tmp.path / "v.eseq");
    const CliResult r = run_cli("predict --v1 " + (tmp.path / "v.eseq").string() + " --v2 " +
                                (tmp.path / "v.eseq").string() + " --predictor argmax");
    CHECK(r.exit_code == 0);
    CHECK(r.output == "0\n");
}

TEST_CASE("predict json format emits a parseable record") {
    TempDir tmp;
    write_eseq(testutil::make_seq_f32(30, 8, 11), tmp.path / "v.eseq");
    const CliResult r = run_cli("predict --v1 " + (tmp.path / "v.eseq").string() + " --v2 " +
                                (tmp.path / "v.eseq").string() + " --predictor dtw --format json");
    CHECK(r.exit_code == 0);
    const auto rec = nlohmann::json::parse(r.output);
    CHECK(rec["offset"] == 0);
    CHECK(rec["predictor"] == "dtw");
}

TEST_CASE("predict with --adjust zeroes an extreme hand-crafted offset") {
    TempDir tmp;
    // v1 is the tail of v2, so the true alignment sits at +80, beyond ±30.
    const EmbeddingSequence full = testutil::make_seq_f32(120, 8, 12);
    EmbeddingSequence tail;
    tail.frames = 40;
    tail.dim = 8;
    tail.values.assign(full.values.begin() + 80 * 8, full.values.end());
    write_eseq(tail, tmp.path / "v1.eseq");
    write_eseq(full, tmp.path / "v2.eseq");

    const std::string base = "predict --v1 " + (tmp.path / "v1.eseq").string() + " --v2 " +
                             (tmp.path / "v2.eseq").string() + " --predictor argmax";
    CHECK(run_cli(base).output == "80\n");
    CHECK(run_cli(base + " --adjust").output == "0\n");
}

TEST_CASE("predict with a learned predictor requires --model") {
    TempDir tmp;
    write_eseq(testutil::make_seq_f32(30, 8, 13), tmp.path / "v.eseq");
    const CliResult r = run_cli("predict --v1 " + (tmp.path / "v.eseq").string() + " --v2 " +
                                (tmp.path / "v.eseq").string() + " --predictor cnn");
    CHECK(r.exit_code == 2);
}

TEST_CASE("predict on a missing file is a runtime failure") {
    const CliResult r =
        run_cli("predict --v1 /nonexistent/a.eseq --v2 /nonexistent/b.eseq --predictor naive");
    CHECK(r.exit_code == 1);
}

TEST_CASE("unknown predictor name is a usage error") {
    TempDir tmp;
    write_eseq(testutil::make_seq_f32(30, 8, 14), tmp.path / "v.eseq");
    const CliResult r = run_cli("predict --v1 " + (tmp.path / "v.eseq").string() + " --v2 " +
                                (tmp.path / "v.eseq").string() + " --predictor oracle");
    CHECK(r.exit_code == 2);
}

TEST_CASE("train reaches full accuracy on a separable toy manifest and is reproducible") {
    TempDir tmp;
    // Noiseless identity views with offsets in {-1, 0, 1} are separable.
    std::vector<LabeledPair> pairs;
    for (std::uint64_t i = 0; i < 6; ++i) {
        SynthConfig cfg;
        cfg.frames = 62;
        cfg.dim = 8;
        cfg.identity_views = true;
        cfg.seed = 40 + i;
        pairs.push_back(inject_offset_fair(gen_latent_pair(cfg), static_cast<long>(i % 3) - 1));
    }
    const auto manifest = write_manifest(pairs, tmp.path / "toy");

    const std::string flags = "train --manifest " + manifest.string() +
                              " --predictor logreg --pad 64 --epochs 150 --seed 99 --out-model ";
    const CliResult r = run_cli(flags + (tmp.path / "m1.vsmd").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("train accuracy 1.0000") != std::string::npos);

    CHECK(run_cli(flags + (tmp.path / "m2.vsmd").string()).exit_code == 0);
    CHECK(testutil::read_bytes(tmp.path / "m1.vsmd") == testutil::read_bytes(tmp.path / "m2.vsmd"));

    const CliResult bad = run_cli("train --manifest " + manifest.string() +
                                  " --predictor parzen --seed 1 --out-model " +
                                  (tmp.path / "x.vsmd").string());
    CHECK(bad.exit_code == 2);
}

TEST_CASE("eval writes reports and exits zero on a clean run") {
    TempDir tmp;
    std::vector<LabeledPair> pairs;
    for (std::uint64_t i = 0; i < 5; ++i) {
        SynthConfig cfg;
        cfg.frames = 80;
        cfg.dim = 8;
        cfg.identity_views = true;
        cfg.seed = 60 + i;
        pairs.push_back(inject_offset_fair(gen_latent_pair(cfg), sample_offset(60 + i, 20)));
    }
    const auto manifest = write_manifest(pairs, tmp.path / "corpus");
    const auto out = tmp.path / "reports";
    const CliResult r = run_cli("eval --manifest " + manifest.string() +
                                " --predictors argmax,naive --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK(std::filesystem::exists(out / "report.txt"));
    CHECK(std::filesystem::exists(out / "run.json"));

    std::ifstream is(out / "report.json");
    const auto reports = nlohmann::json::parse(is);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0]["predictor"] == "argmax");
    CHECK(reports[0]["mean_abs_error"] == 0.0);
    CHECK(reports[0]["n"] == 5);
}

TEST_CASE("bias-exp writes both arms of the experiment") {
    TempDir tmp;
    const auto out = tmp.path / "bias";
    const CliResult r = run_cli(
        "bias-exp --pairs 15 --frames 80 --dim 16 --positional-weight 8 --seed 3 --out " +
        out.string());
    CHECK(r.exit_code == 0);
    std::ifstream is(out / "report.json");
    const auto reports = nlohmann::json::parse(is);
    REQUIRE(reports.size() == 2);
    const double leaky = reports[0]["mean_abs_error"];
    const double fair = reports[1]["mean_abs_error"];
    CHECK(leaky < fair);
}

TEST_CASE("duration-sweep emits one report per duration") {
    TempDir tmp;
    const auto out = tmp.path / "sweep";
    const CliResult r =
        run_cli("duration-sweep --durations 70,90 --pairs 4 --seed 8 --out " + out.string());
    CHECK(r.exit_code == 0);
    std::ifstream is(out / "report.json");
    const auto reports = nlohmann::json::parse(is);
    CHECK(reports.size() == 2);
}

} // TEST_SUITE

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "framesync/eval.hpp"
#include "helpers.hpp"

using namespace framesync;
using testutil::TempDir;

namespace {

SynthConfig noiseless_config(std::uint64_t seed, std::size_t frames = 100) {
    SynthConfig cfg;
    cfg.frames = frames;
    cfg.dim = 16;
    cfg.walk_sigma = 0.1;
    cfg.view_noise_sigma = 0.0;
    cfg.identity_views = true;
    cfg.seed = seed;
    return cfg;
}

LabeledPair manual_pair(std::size_t frames, std::size_t dim, std::uint64_t seed) {
    LabeledPair pair;
    pair.v1 = testutil::make_seq(frames, dim, seed);
    pair.v2 = testutil::make_seq(frames, dim, seed + 1);
    pair.true_offset = 0;
    pair.injection = Injection::fair;
    pair.seed = seed;
    return pair;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("absolute frame error") {
    SyncPrediction p;
    p.offset = 5;
    CHECK(abs_frame_error(p, -3) == 8);
    p.offset = -3;
    CHECK(abs_frame_error(p, -3) == 0);
    // Sign symmetry: error(p, t) = error(-p, -t).
    p.offset = 7;
    const long a = abs_frame_error(p, 2);
    p.offset = -7;
    CHECK(abs_frame_error(p, -2) == a);
}

TEST_CASE("aggregate: hand-computed mean and confidence half-width") {
    const EvalReport r = aggregate_report({0, 3, 6}, "argmax", "toy", 1);
    CHECK(r.n == 3);
    CHECK(r.mean_abs_error == doctest::Approx(3.0));
    CHECK(r.ci_half_width == doctest::Approx(1.96 * 3.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("aggregate: singleton and constant lists have zero width") {
    CHECK(aggregate_report({7}, "p", "d", 0).ci_half_width == 0.0);
    CHECK(aggregate_report({7}, "p", "d", 0).mean_abs_error == 7.0);
    CHECK(aggregate_report({4, 4, 4, 4}, "p", "d", 0).ci_half_width == 0.0);
}

TEST_CASE("aggregate rejects an empty list") {
    CHECK_THROWS_AS(aggregate_report({}, "p", "d", 0), ArgError);
}

TEST_CASE("aggregate mean is permutation invariant") {
    std::vector<long> errors = {9, 1, 4, 4, 0, 12, 3};
    const EvalReport a = aggregate_report(errors, "p", "d", 0);
    std::sort(errors.begin(), errors.end());
    const EvalReport b = aggregate_report(errors, "p", "d", 0);
    CHECK(a.mean_abs_error == b.mean_abs_error);
    CHECK(a.ci_half_width == doctest::Approx(b.ci_half_width).epsilon(1e-12));
}

TEST_CASE("benchmark: argmax recovers noiseless fair corpora exactly") {
    const std::vector<LabeledPair> pairs = gen_fair_corpus(noiseless_config(10, 120), 20);
    BenchmarkOptions options;
    options.dataset_label = "noiseless";
    const auto reports = run_benchmark(pairs, {{PredictorKind::argmax, nullptr}}, options);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].mean_abs_error == 0.0);
    CHECK(reports[0].n == 20);
    CHECK(reports[0].excluded == 0);
}

TEST_CASE("benchmark: naive mean error on uniform offsets sits near 930/61") {
    const std::vector<LabeledPair> pairs = gen_fair_corpus(noiseless_config(20), 500);
    BenchmarkOptions options;
    const auto reports = run_benchmark(pairs, {{PredictorKind::naive, nullptr}}, options);
    CHECK(reports[0].mean_abs_error > 930.0 / 61.0 - 1.0);
    CHECK(reports[0].mean_abs_error < 930.0 / 61.0 + 1.0);
}

TEST_CASE("benchmark is deterministic") {
    const std::vector<LabeledPair> pairs = gen_fair_corpus(noiseless_config(30), 10);
    BenchmarkOptions options;
    const auto a = run_benchmark(pairs, {{PredictorKind::argmax, nullptr}}, options);
    const auto b = run_benchmark(pairs, {{PredictorKind::argmax, nullptr}}, options);
    CHECK(a[0].per_pair_errors == b[0].per_pair_errors);
}

TEST_CASE("benchmark: adjust option zeroes extreme hand-crafted outputs") {
    // One pair whose v2 is much longer, so argmax can emit a large offset.
    std::vector<LabeledPair> pairs;
    LabeledPair pair;
    pair.v1 = testutil::make_seq(64, 8, 3);
    pair.v2 = testutil::make_seq(200, 8, 4);
    pair.true_offset = 0;
    pair.injection = Injection::none;
    pairs.push_back(std::move(pair));

    BenchmarkOptions adjusted;
    adjusted.adjust = true;
    const auto rep = run_benchmark(pairs, {{PredictorKind::argmax, nullptr}}, adjusted);
    CHECK(rep[0].per_pair_errors[0] <= 30); // adjusted predictions stay in band
    CHECK(rep[0].metadata["adjusted"] == true);
}

TEST_CASE("benchmark: oversized pairs are excluded for learned predictors") {
    nn::ModelParams model =
        nn::build_model({nn::LayerSpec::flatten(), nn::LayerSpec::dense(64 * 64, 61)}, 61);
    model.kind_tag = "logreg";
    model.input_pad = 64;
    model.weights[1][1].v[30] = 1.0;

    std::vector<LabeledPair> pairs;
    pairs.push_back(manual_pair(50, 8, 100)); // fits
    pairs.push_back(manual_pair(90, 8, 200)); // exceeds pad 64
    const auto reports =
        run_benchmark(pairs, {{PredictorKind::logreg, &model}}, BenchmarkOptions{});
    CHECK(reports[0].n == 1);
    CHECK(reports[0].excluded == 1);

    std::vector<LabeledPair> all_big;
    all_big.push_back(manual_pair(90, 8, 300));
    CHECK_THROWS_AS(run_benchmark(all_big, {{PredictorKind::logreg, &model}}, BenchmarkOptions{}),
                    std::runtime_error);
}

TEST_CASE("benchmark: learned predictor without a model is an argument error") {
    std::vector<LabeledPair> pairs;
    pairs.push_back(manual_pair(30, 4, 5));
    CHECK_THROWS_AS(run_benchmark(pairs, {{PredictorKind::cnn, nullptr}}, BenchmarkOptions{}),
                    ArgError);
}

TEST_CASE("benchmark can render the first similarity matrices") {
    TempDir tmp;
    const std::vector<LabeledPair> pairs = gen_fair_corpus(noiseless_config(40), 3);
    BenchmarkOptions options;
    options.render_first = 2;
    options.render_dir = tmp.path / "renders";
    run_benchmark(pairs, {{PredictorKind::naive, nullptr}}, options);
    CHECK(std::filesystem::exists(options.render_dir / "simmatrix_0.pgm"));
    CHECK(std::filesystem::exists(options.render_dir / "simmatrix_1.pgm"));
    CHECK_FALSE(std::filesystem::exists(options.render_dir / "simmatrix_2.pgm"));
}

TEST_CASE("bias experiment: leaky beats fair and fair sits at naive level") {
    SynthConfig cfg;
    cfg.frames = 120;
    cfg.dim = 32;
    cfg.walk_sigma = 0.1;
    cfg.positional_weight = 8.0;
    cfg.seed = 77;
    const BiasExperimentResult result = run_bias_experiment(cfg, 60);
    CHECK(result.leaky.mean_abs_error <= 5.0);
    CHECK(result.leaky.mean_abs_error < result.fair.mean_abs_error);
    CHECK(result.fair.mean_abs_error > 930.0 / 61.0 - 3.0);
    CHECK(result.fair.mean_abs_error < 930.0 / 61.0 + 3.0);
    CHECK(result.leaky.n == 60);
    CHECK(result.fair.n == 60);

    // Paired dominance across a few seeds.
    for (std::uint64_t seed : {500UL, 600UL, 700UL}) {
        SynthConfig c = cfg;
        c.seed = seed;
        const BiasExperimentResult r = run_bias_experiment(c, 25);
        CHECK(r.leaky.mean_abs_error < r.fair.mean_abs_error);
    }
}

TEST_CASE("bias experiment requires a positive positional weight") {
    SynthConfig cfg;
    cfg.frames = 80;
    cfg.positional_weight = 0.0;
    cfg.seed = 1;
    CHECK_THROWS_AS(run_bias_experiment(cfg, 10), ArgError);
}

TEST_CASE("duration sweep: one report per duration, noiseless means are zero") {
    SynthConfig cfg = noiseless_config(50);
    const auto sweep = run_duration_sweep(cfg, {80, 160}, 8, PredictorKind::argmax);
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[0].first == 80);
    CHECK(sweep[1].first == 160);
    CHECK(sweep[0].second.mean_abs_error == 0.0);
    CHECK(sweep[1].second.mean_abs_error == 0.0);
}

TEST_CASE("duration sweep rejects learned predictors") {
    CHECK_THROWS_AS(run_duration_sweep(noiseless_config(1), {80}, 2, PredictorKind::cnn),
                    ArgError);
}

TEST_CASE("report writers produce JSON and CSV") {
    TempDir tmp;
    const EvalReport r = aggregate_report({1, 2, 3}, "argmax", "toy", 9);
    write_report_json({r}, tmp.path / "report.json");
    write_errors_csv(r, tmp.path / "errors.csv");

    std::ifstream json_in(tmp.path / "report.json");
    const std::string json_text((std::istreambuf_iterator<char>(json_in)),
                                std::istreambuf_iterator<char>());
    CHECK(json_text.find("\"mean_abs_error\": 2.0") != std::string::npos);
    CHECK(json_text.find("\"predictor\": \"argmax\"") != std::string::npos);

    std::ifstream csv_in(tmp.path / "errors.csv");
    std::string line;
    std::getline(csv_in, line);
    CHECK(line == "pair_index,abs_error");
    std::getline(csv_in, line);
    CHECK(line == "0,1");

    const std::string table = report_table({r});
    CHECK(table.find("argmax") != std::string::npos);
}

} // TEST_SUITE

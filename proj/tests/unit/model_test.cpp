#include "deeptrend/dataio.hpp"
#include "deeptrend/model.hpp"

#include "doctest.h"
#include "gradient_check.hpp"

#include <cmath>

using namespace deeptrend;
using deeptrend::testing::check_parameters;

namespace {

const DeepTrendShape tiny{4, 3, 3};

std::vector<double> random_window(RandomSource& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

/// Standardized flow and tiled average trend of a one-station generator run.
struct Prepared {
    std::vector<double> flow;
    std::vector<double> trend;
};

Prepared prepared_synthetic(const SyntheticSpec& spec) {
    const auto series = generate_synthetic(spec).station(0);
    const auto profile = compute_trend(series);
    const auto tiled = tile_trend(profile, series.start, series.size());
    const auto scaler = Standardizer::fit(series.samples);
    return {scaler.apply(series.samples), scaler.apply(tiled)};
}

void pass_phases(DeepTrendModel& model, const WindowedDataset& data) {
    model.pretrain_extraction(data, {0.001, 1, 64, 1});
    model.pretrain_prediction(data, {0.005, 1, 64, 2});
    model.finetune(data, {0.00002, 1, 64, 3});
}

} // namespace

TEST_CASE("default protocol hyperparameters") {
    const auto e = DeepTrendModel::default_extraction_config();
    const auto p = DeepTrendModel::default_prediction_config();
    const auto f = DeepTrendModel::default_finetune_config();
    CHECK(e.learning_rate == 0.001);
    CHECK(e.epochs == 20);
    CHECK(p.learning_rate == 0.005);
    CHECK(p.epochs == 10);
    CHECK(f.learning_rate == 0.00002);
    CHECK(f.epochs == 7);
    const DeepTrendShape shape;
    CHECK(shape.window == 12);
    CHECK(shape.extraction_hidden == 128);
    CHECK(shape.prediction_hidden == 128);
}

TEST_CASE("layer shapes") {
    const DeepTrendModel model({12, 16, 8}, 1);
    CHECK(model.extraction_hidden.input_size() == 24);
    CHECK(model.extraction_hidden.output_size() == 16);
    CHECK(model.extraction_hidden.activation == Activation::relu);
    CHECK(model.extraction_output.output_size() == 12);
    CHECK(model.predictor.input_size() == 2);
    CHECK(model.predictor.hidden_size() == 8);
    CHECK(model.head.output_size() == 2);
    CHECK(model.head.activation == Activation::identity);
    CHECK_THROWS_AS(DeepTrendModel({0, 1, 1}, 1), ShapeError);
}

TEST_CASE("all-zero extraction weights give an all-zero trend window") {
    DeepTrendModel model(tiny, 3);
    for (auto p : model.extraction_parameters()) p.value->fill(0.0);
    RandomSource rng(1);
    const auto out = model.extract_trend(random_window(rng, 4), random_window(rng, 4));
    CHECK(out == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(model.extract_trend(std::vector<double>(3), std::vector<double>(4)), ShapeError);
}

TEST_CASE("composed graph gradients match finite differences") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        DeepTrendModel model(tiny, seed);
        RandomSource rng(seed + 100);
        const auto flow = random_window(rng, 4);
        const auto trend = random_window(rng, 4);
        const double target = rng.normal();
        FinetuneObjective objective(model);
        const auto params = model.all_parameters();
        zero_grad(params);
        objective.accumulate(flow, trend, target);
        const auto loss = [&] {
            const auto h = model.forward_heads(flow, trend);
            const double d = h.trend + h.residual - target;
            return d * d;
        };
        const auto report = check_parameters(params, loss);
        INFO("seed ", seed, " worst ", report.worst, " err ", report.max_relative_error);
        CHECK(report.max_relative_error < 1e-4);
    }
}

TEST_CASE("pre-training objectives have exact gradients") {
    RandomSource rng(9);
    std::vector<double> flow(12), trend(12);
    for (std::size_t i = 0; i < 12; ++i) {
        flow[i] = rng.normal();
        trend[i] = rng.normal();
    }
    const auto data = make_deeptrend_windows(flow, trend, 4);

    SUBCASE("extraction") {
        DeepTrendModel model(tiny, 4);
        ExtractionObjective objective(model);
        const auto params = objective.parameters();
        zero_grad(params);
        objective.accumulate_sample(data, 3);
        const auto report = check_parameters(params, [&] { return objective.accumulate_sample(data, 3); });
        INFO(report.worst);
        CHECK(report.max_relative_error < 1e-4);
    }
    SUBCASE("prediction") {
        DeepTrendModel model(tiny, 5);
        PredictionObjective objective(model);
        const auto params = objective.parameters();
        zero_grad(params);
        objective.accumulate_sample(data, 2);
        const auto report = check_parameters(params, [&] { return objective.accumulate_sample(data, 2); });
        INFO(report.worst);
        CHECK(report.max_relative_error < 1e-4);
    }
}

TEST_CASE("zero upstream gradient reaches neither sub-network") {
    DeepTrendModel model(tiny, 7);
    RandomSource rng(2);
    FinetuneObjective objective(model);
    const auto params = model.all_parameters();
    zero_grad(params);
    objective.accumulate(random_window(rng, 4), random_window(rng, 4), 0.3, 0.0);
    for (const auto& p : params) CHECK(*p.grad == Matrix(p.grad->rows(), p.grad->cols()));
}

TEST_CASE("phase machine enforces the training order") {
    RandomSource rng(5);
    const auto flow = random_window(rng, 40);
    const auto trend = random_window(rng, 40);
    const auto data = make_deeptrend_windows(flow, trend, 4);
    DeepTrendModel model(tiny, 1);
    const std::vector<double> w(4, 0.0);
    CHECK(model.phase() == Phase::untrained);
    CHECK_THROWS_AS(model.predict(w, w), PhaseError);
    CHECK_THROWS_AS(model.pretrain_prediction(data, {}), PhaseError);
    CHECK_THROWS_AS(model.finetune(data, {}), PhaseError);
    model.pretrain_extraction(data, {0.001, 1, 8, 0});
    CHECK(model.phase() == Phase::extraction_pretrained);
    CHECK_THROWS_AS(model.pretrain_extraction(data, {0.001, 1, 8, 0}), PhaseError);
    model.pretrain_prediction(data, {0.005, 1, 8, 0});
    CHECK(model.phase() == Phase::prediction_pretrained);
    CHECK_THROWS_AS(model.predict(w, w), PhaseError);
    model.finetune(data, {0.00002, 1, 8, 0});
    CHECK(model.phase() == Phase::finetuned);
    CHECK_NOTHROW(model.predict(w, w));
    try {
        model.finetune(data, {0.00002, 1, 8, 0});
    } catch (const PhaseError& e) {
        CHECK(std::string(e.what()) == "finetune requires phase prediction-pretrained, model is finetuned");
    }
}

TEST_CASE("prediction pre-training leaves the extraction stack untouched") {
    RandomSource rng(6);
    const auto data = make_deeptrend_windows(random_window(rng, 60), random_window(rng, 60), 4);
    DeepTrendModel model(tiny, 2);
    model.pretrain_extraction(data, {0.001, 2, 8, 0});
    const auto hidden = model.extraction_hidden;
    const auto output = model.extraction_output;
    const auto lstm_before = model.predictor.input_weights[0];
    model.pretrain_prediction(data, {0.005, 3, 8, 0});
    CHECK(model.extraction_hidden.weight == hidden.weight);
    CHECK(model.extraction_hidden.bias == hidden.bias);
    CHECK(model.extraction_output.weight == output.weight);
    CHECK(model.extraction_output.bias == output.bias);
    CHECK(!(model.predictor.input_weights[0] == lstm_before));
}

TEST_CASE("forecast is the sum of the heads") {
    RandomSource rng(8);
    const auto data = make_deeptrend_windows(random_window(rng, 40), random_window(rng, 40), 4);
    DeepTrendModel model(tiny, 9);
    pass_phases(model, data);
    model.set_scaler({100.0, 20.0});
    model.head.weight(1, 0) = model.head.weight(1, 1) = model.head.weight(1, 2) = 0.0;
    model.head.bias[1] = 0.0;
    const std::vector<double> flow{90, 110, 130, 100}, trend{95, 105, 120, 100};
    const auto heads = model.forward_heads(Standardizer{100.0, 20.0}.apply(flow),
                                           Standardizer{100.0, 20.0}.apply(trend));
    CHECK(heads.residual == 0.0);
    CHECK(model.predict(flow, trend) == 100.0 + 20.0 * heads.trend);
    CHECK(model.predict(flow, trend) == model.predict(flow, trend));
}

TEST_CASE("extraction pre-training reconstructs a noiseless trend") {
    SyntheticSpec spec;
    spec.weeks = 2;
    spec.stations = 1;
    spec.noise_std = 0.0;
    spec.ar_coefficient = 0.0;
    const auto prepared = prepared_synthetic(spec);
    const std::size_t cut = slots_per_week + slots_per_week / 2;
    const auto all = make_deeptrend_windows(prepared.flow, prepared.trend, 12);
    const auto train = all.select_targets(0, cut);
    const auto test = all.select_targets(cut, prepared.flow.size());

    DeepTrendModel model({12, 32, 4}, 11);
    const auto history = model.pretrain_extraction(train, DeepTrendModel::default_extraction_config());
    REQUIRE(history.size() == 20);
    CHECK(history.back() < 0.05);
    for (std::size_t e = history.size() - 5; e + 1 < history.size(); ++e) {
        CHECK(history[e + 1] <= history[e]);
    }

    double mean_abs = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto in = test.input(i);
        std::vector<double> flow(12), trend(12);
        for (std::size_t s = 0; s < 12; ++s) {
            flow[s] = in[2 * s];
            trend[s] = in[2 * s + 1];
        }
        const auto out = model.extract_trend(flow, trend);
        for (std::size_t s = 0; s < 12; ++s) mean_abs += std::abs(out[s] - trend[s]);
    }
    mean_abs /= static_cast<double>(test.size() * 12);
    CHECK(mean_abs < 0.1);
}

TEST_CASE("extracted trend depends on the flow window") {
    RandomSource rng(12);
    const auto data = make_deeptrend_windows(random_window(rng, 200), random_window(rng, 200), 4);
    DeepTrendModel model(tiny, 13);
    model.pretrain_extraction(data, {0.001, 3, 16, 0});
    const auto trend = random_window(rng, 4);
    const auto a = model.extract_trend(random_window(rng, 4), trend);
    const auto b = model.extract_trend(random_window(rng, 4), trend);
    CHECK(a != b);
}

TEST_CASE("training is reproducible") {
    RandomSource rng(14);
    const auto flow = random_window(rng, 80);
    const auto trend = random_window(rng, 80);
    const auto data = make_deeptrend_windows(flow, trend, 4);
    DeepTrendModel a(tiny, 5), b(tiny, 5);
    pass_phases(a, data);
    pass_phases(b, data);
    const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
    CHECK(a.predict(w, w) == b.predict(w, w));
}

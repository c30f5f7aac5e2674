#include "deeptrend/checkpoint.hpp"
#include "deeptrend/dataio.hpp"

#include "doctest.h"

#include <bit>
#include <filesystem>
#include <sstream>

using namespace deeptrend;

namespace {

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

DeepTrendModel trained_deeptrend() {
    RandomSource rng(4);
    std::vector<double> flow(80), trend(80);
    for (std::size_t i = 0; i < 80; ++i) {
        flow[i] = rng.normal();
        trend[i] = rng.normal();
    }
    const auto data = make_deeptrend_windows(flow, trend, 4);
    DeepTrendModel model({4, 5, 3}, 8);
    model.pretrain_extraction(data, {0.001, 1, 16, 0});
    model.pretrain_prediction(data, {0.005, 1, 16, 0});
    model.finetune(data, {0.00002, 1, 16, 0});
    model.set_scaler({123.25, 17.5});
    return model;
}

} // namespace

TEST_CASE("deeptrend checkpoint round trip is bitwise") {
    const auto model = trained_deeptrend();
    std::stringstream buf;
    write_checkpoint(buf, model);
    CHECK(buf.str().substr(0, 8) == "DTRNDCKP");
    const auto back = read_deeptrend_checkpoint(buf);
    CHECK(back.phase() == Phase::finetuned);
    CHECK(back.shape().extraction_hidden == 5);
    CHECK(back.head.weight == model.head.weight);
    RandomSource rng(1);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> f(4), t(4);
        for (auto& v : f) v = rng.uniform(0, 300);
        for (auto& v : t) v = rng.uniform(0, 300);
        CHECK(same_bits(back.predict(f, t), model.predict(f, t)));
    }
}

TEST_CASE("baseline checkpoints round trip for every kind") {
    SyntheticSpec spec;
    spec.weeks = 2;
    spec.stations = 1;
    const auto s = generate_synthetic(spec).station(0);
    const auto trend = compute_trend(s);
    BaselineOptions options;
    options.hidden = 3;
    options.train = {0.01, 1, 64, 0};
    for (auto kind : {BaselineKind::lstm_original, BaselineKind::lstm_detrended,
                      BaselineKind::mvlr_original, BaselineKind::mvlr_detrended,
                      BaselineKind::seasonal_naive}) {
        const auto pred = fit_baseline(kind, s, trend, options);
        std::stringstream buf;
        write_checkpoint(buf, pred);
        const auto back = read_baseline_checkpoint(buf);
        CHECK(back.kind == kind);
        for (std::size_t t = 12; t < s.size(); t += 401) {
            const std::span<const double> w(s.samples.data() + t - 12, 12);
            const auto when = s.start + static_cast<long>(t) * sample_period;
            CHECK(same_bits(predict_baseline(back, w, when), predict_baseline(pred, w, when)));
        }
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    const auto model = trained_deeptrend();
    std::stringstream buf;
    write_checkpoint(buf, model);
    const std::string bytes = buf.str();

    std::stringstream bad_magic("XXXXXXXX" + bytes.substr(8));
    CHECK_THROWS(read_deeptrend_checkpoint(bad_magic));

    std::stringstream truncated(bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS(read_deeptrend_checkpoint(truncated));

    std::stringstream wrong_kind(bytes);
    CHECK_THROWS(read_baseline_checkpoint(wrong_kind));

    std::string bumped = bytes;
    bumped[8] = 9; // version
    std::stringstream future(bumped);
    CHECK_THROWS(read_deeptrend_checkpoint(future));

    CHECK_THROWS(load_deeptrend_checkpoint("/nonexistent/model.ckpt"));
}

TEST_CASE("checkpoint files round trip") {
    const auto model = trained_deeptrend();
    const auto path = std::filesystem::temp_directory_path() / "deeptrend_ckpt_test.ckpt";
    save_checkpoint(path, model);
    const auto back = load_deeptrend_checkpoint(path);
    std::filesystem::remove(path);
    const std::vector<double> w{100, 110, 120, 130};
    CHECK(same_bits(back.predict(w, w), model.predict(w, w)));
}

#include "deeptrend/baselines.hpp"
#include "deeptrend/dataio.hpp"

#include "doctest.h"
#include "gradient_check.hpp"

#include <cmath>

using namespace deeptrend;

namespace {

StationSeries synthetic_station(double noise, double ar, std::size_t weeks = 3) {
    SyntheticSpec spec;
    spec.weeks = weeks;
    spec.stations = 1;
    spec.noise_std = noise;
    spec.ar_coefficient = ar;
    return generate_synthetic(spec).station(0);
}

TrendProfile zero_trend(Timestamp anchor) {
    TrendProfile t;
    t.anchor = anchor;
    t.weeks_used = 1;
    t.values.assign(slots_per_week, 0.0);
    return t;
}

Timestamp target_time(const StationSeries& s, std::size_t index) {
    return s.start + static_cast<long>(index) * sample_period;
}

} // namespace

TEST_CASE("linear regression recovers exact coefficients") {
    RandomSource rng(2);
    std::vector<double> x(400);
    for (auto& v : x) v = rng.normal();
    const std::vector<double> c{0.3, -0.7, 1.1}; // oldest step first
    std::vector<double> y(400, 0.0);
    for (std::size_t t = 3; t < 400; ++t) {
        // target at t from inputs t-3, t-2, t-1
        y[t] = c[0] * x[t - 3] + c[1] * x[t - 2] + c[2] * x[t - 1] + 2.0;
    }
    const auto data = make_windows({x}, {y}, 3);
    const auto fit = LinearRegression::fit(data);
    REQUIRE(fit.coefficients.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(fit.coefficients[k] - c[k]) < 1e-6);
    CHECK(std::abs(fit.intercept - 2.0) < 1e-6);
    const std::vector<double> w{1.0, 2.0, 3.0};
    CHECK(fit.predict(w) == doctest::Approx(0.3 - 1.4 + 3.3 + 2.0).epsilon(1e-9));
}

TEST_CASE("linear regression rejects singular systems") {
    std::vector<double> flat(50, 3.0);
    const auto data = make_windows({flat}, {flat}, 4);
    CHECK_THROWS_AS(LinearRegression::fit(data, 0.0), SingularSystem);
}

TEST_CASE("seasonal-naive is exact on noiseless data") {
    const auto s = synthetic_station(0.0, 0.0);
    const auto trend = compute_trend(s);
    const auto pred = fit_baseline(BaselineKind::seasonal_naive, s, trend, {});
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 12; t < s.size(); t += 7) {
        const std::span<const double> window(s.samples.data() + t - 12, 12);
        const double d = predict_baseline(pred, window, target_time(s, t)) - s.samples[t];
        sq += d * d;
        ++n;
    }
    CHECK(sq / static_cast<double>(n) <= 1e-12);
}

TEST_CASE("detrended variants with a zero trend equal the original variants") {
    const auto s = synthetic_station(3.0, 0.8, 2);
    const auto trend = zero_trend(s.start);
    BaselineOptions options;
    options.hidden = 4;
    options.train = {0.01, 2, 64, 3};
    options.seed = 77;
    const auto lo = fit_baseline(BaselineKind::lstm_original, s, trend, options);
    const auto ld = fit_baseline(BaselineKind::lstm_detrended, s, trend, options);
    const auto mo = fit_baseline(BaselineKind::mvlr_original, s, trend, options);
    const auto md = fit_baseline(BaselineKind::mvlr_detrended, s, trend, options);
    CHECK(lo.loss_history == ld.loss_history);
    for (std::size_t t : {12u, 500u, 3000u}) {
        const std::span<const double> w(s.samples.data() + t - 12, 12);
        CHECK(predict_baseline(lo, w, target_time(s, t)) == predict_baseline(ld, w, target_time(s, t)));
        CHECK(predict_baseline(mo, w, target_time(s, t)) == predict_baseline(md, w, target_time(s, t)));
    }
}

TEST_CASE("detrended predictions add back the trend slot value") {
    const auto s = synthetic_station(3.0, 0.8);
    const auto trend = compute_trend(s);
    const auto md = fit_baseline(BaselineKind::mvlr_detrended, s, trend, {});
    const std::size_t t = 4000;
    const std::span<const double> w(s.samples.data() + t - 12, 12);
    std::vector<double> residual(12);
    for (std::size_t k = 0; k < 12; ++k) residual[k] = w[k] - trend.at_slot(t - 12 + k);
    CHECK(predict_baseline(md, w, target_time(s, t)) ==
          doctest::Approx(trend.at_slot(t) + md.linear->predict(residual)).epsilon(1e-12));
    CHECK_THROWS_AS(predict_baseline(md, std::span<const double>(w.data(), 11), target_time(s, t)),
                    ShapeError);
}

TEST_CASE("lstm regressor gradients match finite differences") {
    RandomSource rng(3);
    std::vector<double> x(30);
    for (auto& v : x) v = rng.normal();
    const auto data = make_windows({x}, {x}, 5);
    LstmRegressor model(3, 9);
    const auto params = model.parameters();
    zero_grad(params);
    model.accumulate_sample(data, 4);
    const auto report =
        deeptrend::testing::check_parameters(params, [&] { return model.accumulate_sample(data, 4); });
    INFO(report.worst);
    CHECK(report.max_relative_error < 1e-4);
}

TEST_CASE("baseline names") {
    CHECK(to_string(BaselineKind::lstm_original) == "lstm-original");
    CHECK(baseline_from_string("LSTM-D") == BaselineKind::lstm_detrended);
    CHECK(baseline_from_string("MVLR-O") == BaselineKind::mvlr_original);
    CHECK(baseline_from_string("seasonal-naive") == BaselineKind::seasonal_naive);
    CHECK_THROWS(baseline_from_string("arima"));
    CHECK(is_detrended(BaselineKind::mvlr_detrended));
    CHECK(!is_detrended(BaselineKind::seasonal_naive));
}

TEST_CASE("fitting requires imputed data") {
    auto s = synthetic_station(3.0, 0.8, 2);
    s.samples[5] = missing_value();
    CHECK_THROWS_AS(fit_baseline(BaselineKind::mvlr_original, s, zero_trend(s.start), {}), DataError);
}

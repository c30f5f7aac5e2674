#include "deeptrend/eval.hpp"
#include "deeptrend/tensor.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace deeptrend;

TEST_CASE("metric examples") {
    const std::vector<double> a{0, 3}, p{1, 1};
    CHECK(mse(a, p) == 2.5);
    CHECK(mae(a, p) == 1.5);
    CHECK(mse(a, a) == 0.0);
    CHECK(mae(a, a) == 0.0);
    CHECK_THROWS(mse(a, std::vector<double>{1}));
    CHECK_THROWS(mse(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("metrics match loop computation") {
    RandomSource rng(10);
    std::vector<double> a(500), p(500);
    for (std::size_t i = 0; i < 500; ++i) {
        a[i] = rng.uniform(0, 400);
        p[i] = rng.uniform(0, 400);
    }
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < 500; ++i) {
        sq += (a[i] - p[i]) * (a[i] - p[i]);
        ab += std::abs(a[i] - p[i]);
    }
    CHECK(std::abs(mse(a, p) - sq / 500) <= 1e-12 * sq / 500);
    CHECK(std::abs(mae(a, p) - ab / 500) <= 1e-12 * ab / 500);
    const auto r = MetricReport::compute("S1", "m", a, p);
    CHECK(r.mae * r.mae <= r.mse);
    CHECK(r.count == 500);
}

TEST_CASE("normalization across models") {
    const std::vector<double> v{10, 20, 30};
    CHECK(normalize_across_models(v) == std::vector<double>{0, 0.5, 1});
    CHECK(normalize_across_models(std::vector<double>{4, 4, 4}) == std::vector<double>{0, 0, 0});
    CHECK_THROWS(normalize_across_models(std::vector<double>{1}));

    RandomSource rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(5);
        for (auto& e : x) e = rng.uniform(0, 100);
        const auto n = normalize_across_models(x);
        const auto best = std::min_element(x.begin(), x.end()) - x.begin();
        const auto worst = std::max_element(x.begin(), x.end()) - x.begin();
        CHECK(n[static_cast<std::size_t>(best)] == 0.0);
        CHECK(n[static_cast<std::size_t>(worst)] == 1.0);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                if (x[i] < x[j]) CHECK(n[i] <= n[j]);
    }
}

TEST_CASE("normalized reports per station") {
    std::vector<MetricReport> reports{
        {"S1", "a", 10, 1, 5}, {"S1", "b", 30, 3, 5}, {"S2", "a", 8, 2, 5}, {"S2", "b", 4, 1, 5}};
    const auto n = normalize_reports(reports, &MetricReport::mse);
    CHECK(n.stations == std::vector<std::string>{"S1", "S2"});
    CHECK(n.by_model.at("a") == std::vector<double>{0, 1});
    CHECK(n.by_model.at("b") == std::vector<double>{1, 0});
}

TEST_CASE("empirical cdf examples") {
    const auto c = empirical_cdf(std::vector<double>{3, 1, 2});
    CHECK(c.values == std::vector<double>{1, 2, 3});
    CHECK(c.probabilities[0] == doctest::Approx(1.0 / 3));
    CHECK(c.probabilities[1] == doctest::Approx(2.0 / 3));
    CHECK(c.probabilities[2] == 1.0);
    const auto flat = empirical_cdf(std::vector<double>{5, 5, 5});
    CHECK(flat.values == std::vector<double>{5});
    CHECK(flat.probabilities == std::vector<double>{1.0});
}

TEST_CASE("empirical cdf matches brute-force counting and ignores order") {
    RandomSource rng(6);
    std::vector<double> v(200);
    for (auto& x : v) x = static_cast<double>(rng.below(50));
    const auto c = empirical_cdf(v);
    for (std::size_t i = 0; i < c.values.size(); ++i) {
        const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x <= c.values[i]; });
        CHECK(c.probabilities[i] == static_cast<double>(below) / 200.0);
        if (i > 0) {
            CHECK(c.values[i] > c.values[i - 1]);
            CHECK(c.probabilities[i] >= c.probabilities[i - 1]);
        }
    }
    CHECK(c.probabilities.back() == 1.0);
    auto shuffled = v;
    rng.shuffle(shuffled);
    const auto d = empirical_cdf(shuffled);
    CHECK(d.values == c.values);
    CHECK(d.probabilities == c.probabilities);
}

TEST_CASE("metric and cdf csv layouts") {
    std::ostringstream m;
    write_metrics_csv(m, {{"S1", "deeptrend", 2.5, 1.5, 2}}, {"seed=1"});
    CHECK(m.str() == "# seed=1\nstation,model,mse,mae,n\nS1,deeptrend,2.5,1.5,2\n");
    std::ostringstream c;
    write_cdf_csv(c, empirical_cdf(std::vector<double>{0, 1}));
    CHECK(c.str() == "value,probability\n0,0.5\n1,1\n");
}

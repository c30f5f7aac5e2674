#include "deeptrend/dataio.hpp"
#include "deeptrend/detrend.hpp"
#include "deeptrend/text.hpp"
#include "deeptrend/windows.hpp"

#include "doctest.h"

#include <bit>
#include <cmath>
#include <filesystem>
#include <sstream>

using namespace deeptrend;

namespace {

std::string csv_for(std::size_t rows, std::size_t stations) {
    std::ostringstream out;
    out << "timestamp";
    for (std::size_t s = 0; s < stations; ++s) out << ",S" << s + 1;
    out << '\n';
    const auto t0 = parse_timestamp("2016-01-04T00:00:00");
    for (std::size_t r = 0; r < rows; ++r) {
        out << format_timestamp(t0 + static_cast<long>(r) * sample_period);
        for (std::size_t s = 0; s < stations; ++s) out << ',' << (r % 97) + 10 * s;
        out << '\n';
    }
    return out.str();
}

std::string error_of(const std::string& text) {
    std::istringstream in(text);
    try {
        read_csv(in, "flows.csv");
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("timestamps parse and format") {
    const auto t = parse_timestamp("2016-01-04T00:05:00");
    CHECK(format_timestamp(t) == "2016-01-04T00:05:00");
    CHECK(parse_timestamp("2016-01-04 00:05:00") == t);
    CHECK(parse_timestamp("2016-01-04T00:05:00Z") == t);
    CHECK(parse_timestamp("2016-02-29T23:55:00") - parse_timestamp("2016-02-29T00:00:00") ==
          std::chrono::seconds{86100});
    CHECK_THROWS_AS(parse_timestamp("2016-13-01T00:00:00"), DataError);
    CHECK_THROWS_AS(parse_timestamp("2016-01-04"), DataError);
    CHECK_THROWS_AS(parse_timestamp("2016-01-04T25:00:00"), DataError);
}

TEST_CASE("two-week two-station file loads with its shape") {
    std::istringstream in(csv_for(4032, 2));
    const auto table = read_csv(in);
    CHECK(table.stations == std::vector<std::string>{"S1", "S2"});
    CHECK(table.columns.size() == 2);
    CHECK(table.rows() == 4032);
    CHECK(table.complete_weeks() == 2);
    CHECK(table.station("S2").samples[1] == 11.0);
}

TEST_CASE("csv errors name the line") {
    auto text = csv_for(5, 1);
    const auto dup = text + "2016-01-04T00:20:00,1\n";
    CHECK(error_of(dup).find("flows.csv:7") != std::string::npos);
    CHECK(error_of(dup).find("not after") != std::string::npos);
    CHECK(error_of(text + "2016-01-04T00:35:00,1\n").find("gap") != std::string::npos);
    CHECK(error_of(text + "2016-01-04T00:25:00,1,2\n").find("flows.csv:7: row has 3 cells") !=
          std::string::npos);
    CHECK(error_of(text + "2016-01-04T00:25:00,abc\n").find("cannot parse 'abc'") !=
          std::string::npos);
    CHECK(error_of("time,S1\n").find("header") != std::string::npos);
    CHECK(error_of("# only a comment\n").find("missing header") != std::string::npos);
    CHECK(error_of("timestamp,S1,S1\n").find("duplicate station") != std::string::npos);
    CHECK(error_of(text).empty());
}

TEST_CASE("empty cells are missing samples and comments are skipped") {
    std::istringstream in("# note\n# more\ntimestamp,A,B\n2016-01-04T00:00:00,1,\n"
                          "2016-01-04T00:05:00,,4.5\n");
    const auto table = read_csv(in);
    CHECK(is_missing(table.columns[1][0]));
    CHECK(is_missing(table.columns[0][1]));
    CHECK(table.columns[1][1] == 4.5);
    CHECK(table.station("A").missing_count() == 1);
}

TEST_CASE("csv round trip reproduces the table") {
    SyntheticSpec spec;
    spec.weeks = 2;
    spec.stations = 3;
    auto table = generate_synthetic(spec);
    table.columns[1][10] = missing_value();
    std::ostringstream out;
    write_csv(out, table, {"seed=1", "config_hash=abc"});
    CHECK(out.str().rfind("# seed=1\n# config_hash=abc\ntimestamp,", 0) == 0);
    std::istringstream in(out.str());
    const auto back = read_csv(in);
    CHECK(back == table);
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (!is_missing(table.columns[s][r])) {
                CHECK(std::bit_cast<std::uint64_t>(back.columns[s][r]) ==
                      std::bit_cast<std::uint64_t>(table.columns[s][r]));
            }
        }
    }

    const auto path = std::filesystem::temp_directory_path() / "deeptrend_dataio_roundtrip.csv";
    save_csv(path, table);
    CHECK(load_csv(path) == table);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_csv(path), DataError);
}

TEST_CASE("train/test split by whole weeks") {
    SyntheticSpec spec;
    spec.weeks = 16;
    spec.stations = 1;
    const auto table = generate_synthetic(spec);
    const auto [train, test] = split_train_test(table, 12);
    CHECK(train.complete_weeks() == 12);
    CHECK(test.complete_weeks() == 4);
    CHECK(train.rows() + test.rows() == table.rows());
    CHECK(test.timestamps.front() == table.timestamps[12 * slots_per_week]);

    FlowTable joined = train;
    joined.timestamps.insert(joined.timestamps.end(), test.timestamps.begin(), test.timestamps.end());
    joined.columns[0].insert(joined.columns[0].end(), test.columns[0].begin(), test.columns[0].end());
    CHECK(joined == table);

    spec.weeks = 2;
    CHECK_THROWS_AS(split_train_test(generate_synthetic(spec), 2), DataError);
}

TEST_CASE("window counting and first window") {
    std::vector<double> series(20);
    for (std::size_t i = 0; i < 20; ++i) series[i] = static_cast<double>(i + 1);
    const auto data = make_windows({series}, {series}, 12);
    CHECK(data.size() == 8);
    const auto first = data.input(0);
    for (std::size_t i = 0; i < 12; ++i) CHECK(first[i] == static_cast<double>(i + 1));
    CHECK(data.target(0)[0] == 13.0);
    CHECK(data.target_index[0] == 12);
    CHECK(data.target(7)[0] == 20.0);
    CHECK_THROWS_AS(make_windows({series}, {series}, 20), DataError);
    CHECK_THROWS(make_windows({series}, {series}, 0));
}

TEST_CASE("windows match direct slicing on random series") {
    RandomSource rng(19);
    std::vector<double> a(57), b(57), y(57), z(57);
    for (auto* v : {&a, &b, &y, &z})
        for (auto& x : *v) x = rng.normal();
    const std::size_t n = 5;
    const auto data = make_windows({a, b}, {y, z}, n);
    REQUIRE(data.size() == 57 - n);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t t = i + n - 1;
        const auto in = data.input(i);
        const auto m = data.input_matrix(i);
        for (std::size_t s = 0; s < n; ++s) {
            CHECK(in[2 * s] == a[t - n + 1 + s]);
            CHECK(in[2 * s + 1] == b[t - n + 1 + s]);
            CHECK(m(s, 0) == a[t - n + 1 + s]);
        }
        CHECK(data.target(i)[0] == y[t + 1]);
        CHECK(data.target(i)[1] == z[t + 1]);
        CHECK(data.target_index[i] == t + 1);
    }
    const auto tail = data.select_targets(40, 57);
    CHECK(tail.size() == 17);
    CHECK(tail.target_index.front() == 40);
    CHECK(tail.target(0)[0] == y[40]);
}

TEST_CASE("noiseless generator is exactly weekly periodic") {
    SyntheticSpec spec;
    spec.weeks = 3;
    spec.stations = 2;
    spec.noise_std = 0.0;
    spec.ar_coefficient = 0.0;
    const auto table = generate_synthetic(spec);
    for (std::size_t s = 0; s < 2; ++s) {
        const auto series = table.station(s);
        for (std::size_t i = slots_per_week; i < series.size(); ++i) {
            CHECK(series.samples[i] == series.samples[i - slots_per_week]);
        }
        const auto trend = compute_trend(series, 3);
        const auto truth = synthetic_trend(spec, s);
        for (std::size_t k = 0; k < slots_per_week; ++k) {
            CHECK(std::abs(trend.values[k] - series.samples[k]) <= 1e-12);
            CHECK(series.samples[k] == truth[k]);
        }
    }
}

TEST_CASE("generator is deterministic per seed") {
    SyntheticSpec spec;
    spec.weeks = 2;
    CHECK(generate_synthetic(spec) == generate_synthetic(spec));
    auto other = spec;
    other.seed = 2;
    CHECK(!(generate_synthetic(other) == generate_synthetic(spec)));
    spec.weeks = 1;
    CHECK_THROWS(generate_synthetic(spec));
}

TEST_CASE("generated residual has the requested lag-1 autocorrelation") {
    SyntheticSpec spec;
    spec.weeks = 6;
    spec.stations = 1;
    spec.ar_coefficient = 0.8;
    spec.noise_std = 1.0;
    const auto series = generate_synthetic(spec).station(0);
    const auto residual = compute_residual(series, compute_trend(series));
    const auto& r = residual.values;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        den += (r[i] - mean) * (r[i] - mean);
        if (i > 0) num += (r[i] - mean) * (r[i - 1] - mean);
    }
    CHECK(std::abs(num / den - 0.8) < 0.05);
    CHECK(spec.residual_variance() == doctest::Approx(1.0 / 0.36));
}

TEST_CASE("default generator trend dominates the residual") {
    const SyntheticSpec spec;
    const auto trend = synthetic_trend(spec, 0);
    double mean = 0.0, var = 0.0;
    for (double v : trend) mean += v;
    mean /= static_cast<double>(trend.size());
    for (double v : trend) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trend.size());
    CHECK(std::sqrt(var) >= 3.0 * std::sqrt(spec.residual_variance()));
}

TEST_CASE("number text round trips") {
    RandomSource rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-10, 10));
        const auto back = parse_number(format_number(v));
        REQUIRE(back.has_value());
        CHECK(std::bit_cast<std::uint64_t>(*back) == std::bit_cast<std::uint64_t>(v));
    }
    CHECK(!parse_number("1.5x").has_value());
    CHECK(!parse_number("").has_value());
    CHECK(format_number(0.1) == "0.1");
}

#pragma once

#include "deeptrend/series.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace deeptrend {

/// "YYYY-MM-DDTHH:MM:SS" with an optional trailing 'Z'; a space is accepted
/// in place of the 'T'. Times are treated as UTC ticks.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Multi-station flow table on a regular 5-minute grid.
struct FlowTable {
    std::vector<Timestamp> timestamps;
    std::vector<std::string> stations;
    std::vector<std::vector<double>> columns; // one per station, NaN = missing

    std::size_t rows() const noexcept { return timestamps.size(); }
    std::size_t complete_weeks() const noexcept { return rows() / slots_per_week; }

    std::size_t station_index(std::string_view id) const;
    StationSeries station(std::string_view id) const;
    StationSeries station(std::size_t index) const;

    /// Throws DataError on ragged columns, duplicate station ids, or a
    /// timestamp grid that is not strictly increasing by 5 minutes.
    void validate() const;

    friend bool operator==(const FlowTable& a, const FlowTable& b);
};

/// Header `timestamp,<station>,...`; empty cells are missing samples.
/// Lines beginning with '#' before the header are ignored.
FlowTable read_csv(std::istream& in, const std::string& source = "<stream>");
FlowTable load_csv(const std::filesystem::path& path);

/// `comments` are written as leading `# ` lines.
void write_csv(std::ostream& out, const FlowTable& table,
               const std::vector<std::string>& comments = {});
void save_csv(const std::filesystem::path& path, const FlowTable& table,
              const std::vector<std::string>& comments = {});

/// First `train_weeks` whole weeks and the remainder. Throws DataError when
/// the table does not extend past the training span.
std::pair<FlowTable, FlowTable> split_train_test(const FlowTable& table, std::size_t train_weeks);

/// Parameters of the synthetic weekly-periodic flow generator.
///
/// Each station's flow is a weekly trend plus an AR(1) residual:
///   trend(k) = scale_s * (base_level + day_factor(k) * sum_h a_h sin(2 pi h k / 288 + phase_{s,h}))
///   r_t      = ar_coefficient * r_{t-1} + noise_std * e_t
/// where day_factor is weekend_factor on the last two days of each week and 1
/// otherwise. The residual starts from its stationary distribution.
struct SyntheticSpec {
    std::size_t weeks = 6;
    std::size_t stations = 2;
    double base_level = 120.0;
    std::vector<double> daily_amplitudes{40, 25, 18, 14, 12, 10, 9, 8, 7, 6, 5, 5};
    double weekend_factor = 0.5;
    double ar_coefficient = 0.8;
    double noise_std = 3.0;
    std::uint64_t seed = 1;
    Timestamp start = parse_timestamp("2016-01-04T00:00:00");

    void validate() const;
    /// noise_std^2 / (1 - ar_coefficient^2), the stationary residual variance.
    double residual_variance() const;
};

FlowTable generate_synthetic(const SyntheticSpec& spec);

/// The noiseless weekly trend of one station of the generator, one value per slot.
std::vector<double> synthetic_trend(const SyntheticSpec& spec, std::size_t station);

} // namespace deeptrend

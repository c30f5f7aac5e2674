#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds sample_period{300};
inline constexpr std::size_t slots_per_day = 288;
inline constexpr std::size_t slots_per_week = slots_per_day * 7;

/// Violation of a data-shape or data-content contract (bad CSV, misaligned
/// series, too much missing data, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing samples are stored as quiet NaN.
inline double missing_value() noexcept {
    return std::numeric_limits<double>::quiet_NaN();
}
inline bool is_missing(double v) noexcept {
    return std::isnan(v);
}

/// One detector station's 5-minute flow samples.
struct StationSeries {
    std::string id;
    Timestamp start{};
    std::vector<double> samples;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t complete_weeks() const noexcept { return samples.size() / slots_per_week; }
    std::size_t missing_count() const noexcept;
};

inline std::size_t StationSeries::missing_count() const noexcept {
    std::size_t n = 0;
    for (double v : samples) {
        n += is_missing(v) ? 1 : 0;
    }
    return n;
}

} // namespace deeptrend

#pragma once

#include "deeptrend/series.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace deeptrend {

/// Weekly simple-average trend: one value per 5-minute slot of the week.
/// Slot 0 is the anchor timestamp (the first sample of the series the
/// profile was computed from).
struct TrendProfile {
    std::vector<double> values; // slots_per_week entries
    std::size_t weeks_used = 0;
    Timestamp anchor{};

    double at_slot(std::size_t slot) const { return values.at(slot % slots_per_week); }
};

/// Slot-wise mean over the last `weeks` complete weeks of the series.
/// Throws DataError if fewer complete weeks exist or if a used sample is missing.
TrendProfile compute_trend(const StationSeries& series, std::size_t weeks);
/// Average over every complete week of the series.
TrendProfile compute_trend(const StationSeries& series);

/// Weekly slot of `start` relative to the profile anchor. Throws DataError if
/// `start` precedes the anchor or is not on the 5-minute grid.
std::size_t slot_of(const TrendProfile& trend, Timestamp start);

/// Trend values covering `length` samples beginning at `start`.
std::vector<double> tile_trend(const TrendProfile& trend, Timestamp start, std::size_t length);

/// Source series minus the trend at each sample's weekly slot.
struct ResidualSeries {
    std::string id;
    Timestamp start{};
    std::vector<double> values;
};

ResidualSeries compute_residual(const StationSeries& series, const TrendProfile& trend);

struct ImputeOptions {
    double max_missing_fraction = 0.01;
};

/// Replaces each missing sample with the mean of the present samples in the
/// same weekly slot (slot 0 = series start). Present samples are untouched.
StationSeries impute_missing(const StationSeries& series, const ImputeOptions& options = {});

/// Per-station affine map to zero mean and unit population std.
struct Standardizer {
    double mean = 0.0;
    double std = 1.0;

    static constexpr double min_std = 1e-12;

    static Standardizer fit(std::span<const double> values);

    double apply(double x) const noexcept { return (x - mean) / std; }
    double invert(double z) const noexcept { return z * std + mean; }
    std::vector<double> apply(std::span<const double> xs) const;
    std::vector<double> invert(std::span<const double> zs) const;
};

/// CSV with header `slot,value` and one row per weekly slot.
void write_trend_csv(std::ostream& out, const TrendProfile& trend);

} // namespace deeptrend

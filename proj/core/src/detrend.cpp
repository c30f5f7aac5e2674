#include "deeptrend/detrend.hpp"

#include "deeptrend/text.hpp"

#include <ostream>
#include <sstream>

namespace deeptrend {

TrendProfile compute_trend(const StationSeries& series, std::size_t weeks) {
    const std::size_t available = series.complete_weeks();
    if (weeks == 0) {
        throw DataError("compute_trend: number of weeks must be positive");
    }
    if (available < weeks) {
        throw DataError("compute_trend: station '" + series.id + "' has " +
                        std::to_string(available) + " complete weeks, " + std::to_string(weeks) +
                        " requested");
    }
    TrendProfile trend;
    trend.values.assign(slots_per_week, 0.0);
    trend.weeks_used = weeks;
    trend.anchor = series.start;
    const std::size_t first_week = available - weeks;
    for (std::size_t w = first_week; w < available; ++w) {
        const std::size_t offset = w * slots_per_week;
        for (std::size_t k = 0; k < slots_per_week; ++k) {
            const double v = series.samples[offset + k];
            if (is_missing(v)) {
                throw DataError("compute_trend: station '" + series.id +
                                "' has a missing sample at index " + std::to_string(offset + k) +
                                "; impute first");
            }
            trend.values[k] += v;
        }
    }
    const double d = static_cast<double>(weeks);
    for (double& v : trend.values) {
        v /= d;
    }
    return trend;
}

TrendProfile compute_trend(const StationSeries& series) {
    return compute_trend(series, series.complete_weeks());
}

std::size_t slot_of(const TrendProfile& trend, Timestamp start) {
    if (start < trend.anchor) {
        throw DataError("series starts before the trend anchor");
    }
    const auto offset = start - trend.anchor;
    if (offset % sample_period != std::chrono::seconds{0}) {
        throw DataError("series start is not aligned to the 5-minute grid of the trend anchor");
    }
    return static_cast<std::size_t>(offset / sample_period) % slots_per_week;
}

std::vector<double> tile_trend(const TrendProfile& trend, Timestamp start, std::size_t length) {
    if (trend.values.size() != slots_per_week) {
        throw DataError("trend profile must have " + std::to_string(slots_per_week) + " slots");
    }
    const std::size_t first = slot_of(trend, start);
    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        out[i] = trend.values[(first + i) % slots_per_week];
    }
    return out;
}

ResidualSeries compute_residual(const StationSeries& series, const TrendProfile& trend) {
    const auto tiled = tile_trend(trend, series.start, series.size());
    ResidualSeries out{series.id, series.start, std::vector<double>(series.size())};
    for (std::size_t i = 0; i < series.size(); ++i) {
        out.values[i] = series.samples[i] - tiled[i];
    }
    return out;
}

StationSeries impute_missing(const StationSeries& series, const ImputeOptions& options) {
    const std::size_t missing = series.missing_count();
    if (missing == 0) {
        return series;
    }
    const double fraction = static_cast<double>(missing) / static_cast<double>(series.size());
    if (fraction > options.max_missing_fraction) {
        std::ostringstream msg;
        msg << "impute_missing: station '" << series.id << "' is missing " << fraction * 100.0
            << "% of samples (cap " << options.max_missing_fraction * 100.0 << "%)";
        throw DataError(msg.str());
    }
    std::vector<double> sum(slots_per_week, 0.0);
    std::vector<std::size_t> count(slots_per_week, 0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double v = series.samples[i];
        if (!is_missing(v)) {
            sum[i % slots_per_week] += v;
            ++count[i % slots_per_week];
        }
    }
    StationSeries out = series;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!is_missing(out.samples[i])) continue;
        const std::size_t slot = i % slots_per_week;
        if (count[slot] == 0) {
            throw DataError("impute_missing: station '" + series.id + "' has no present sample "
                            "in weekly slot " + std::to_string(slot));
        }
        out.samples[i] = sum[slot] / static_cast<double>(count[slot]);
    }
    return out;
}

Standardizer Standardizer::fit(std::span<const double> values) {
    if (values.empty()) {
        throw DataError("fit_standardizer: no values");
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    for (double v : values) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    double sd = std::sqrt(var);
    if (sd < min_std) {
        sd = 1.0;
    }
    return Standardizer{mean, sd};
}

std::vector<double> Standardizer::apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = apply(xs[i]);
    }
    return out;
}

std::vector<double> Standardizer::invert(std::span<const double> zs) const {
    std::vector<double> out(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        out[i] = invert(zs[i]);
    }
    return out;
}

void write_trend_csv(std::ostream& out, const TrendProfile& trend) {
    out << "slot,value\n";
    for (std::size_t k = 0; k < trend.values.size(); ++k) {
        out << k << ',' << format_number(trend.values[k]) << '\n';
    }
}

} // namespace deeptrend

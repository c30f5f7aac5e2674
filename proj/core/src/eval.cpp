#include "deeptrend/eval.hpp"

#include "deeptrend/text.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace deeptrend {

namespace {

void check_lengths(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) {
        throw std::invalid_argument("metric: empty input");
    }
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("metric: " + std::to_string(actual.size()) + " actual vs " +
                                    std::to_string(predicted.size()) + " predicted values");
    }
}

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
    for (const auto& c : comments) {
        out << "# " << c << '\n';
    }
}

} // namespace

double mse(std::span<const double> actual, std::span<const double> predicted) {
    check_lengths(actual, predicted);
    double sum = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        const double e = actual[t] - predicted[t];
        sum += e * e;
    }
    return sum / static_cast<double>(actual.size());
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
    check_lengths(actual, predicted);
    double sum = 0.0;
    for (std::size_t t = 0; t < actual.size(); ++t) {
        sum += std::abs(actual[t] - predicted[t]);
    }
    return sum / static_cast<double>(actual.size());
}

MetricReport MetricReport::compute(std::string station, std::string model,
                                   std::span<const double> actual,
                                   std::span<const double> predicted) {
    MetricReport r{std::move(station), std::move(model), deeptrend::mse(actual, predicted),
                   deeptrend::mae(actual, predicted), actual.size()};
    if (!std::isfinite(r.mse) || !std::isfinite(r.mae)) {
        throw std::runtime_error("metric report for " + r.station + "/" + r.model +
                                 " is not finite");
    }
    // Cauchy-Schwarz; the slack covers rounding when every error is equal.
    if (r.mae * r.mae > r.mse * (1.0 + 1e-12)) {
        throw std::logic_error("metric report for " + r.station + "/" + r.model +
                               " violates mae^2 <= mse");
    }
    return r;
}

std::vector<double> normalize_across_models(std::span<const double> values) {
    if (values.size() < 2) {
        throw std::invalid_argument("normalize_across_models: need at least two models");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo;
    const double range = *hi - *lo;
    std::vector<double> out(values.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out[i] = (values[i] - min) / range;
        }
    }
    return out;
}

NormalizedMetric normalize_reports(const std::vector<MetricReport>& reports,
                                   double MetricReport::*metric) {
    NormalizedMetric out;
    for (const auto& r : reports) {
        if (std::find(out.stations.begin(), out.stations.end(), r.station) == out.stations.end()) {
            out.stations.push_back(r.station);
        }
    }
    for (const auto& station : out.stations) {
        std::vector<std::string> models;
        std::vector<double> values;
        for (const auto& r : reports) {
            if (r.station == station) {
                models.push_back(r.model);
                values.push_back(r.*metric);
            }
        }
        const auto normalized = normalize_across_models(values);
        for (std::size_t m = 0; m < models.size(); ++m) {
            out.by_model[models[m]].push_back(normalized[m]);
        }
    }
    return out;
}

CdfTable empirical_cdf(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("empirical_cdf: empty input");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double total = static_cast<double>(sorted.size());
    CdfTable table;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        table.values.push_back(sorted[i]);
        table.probabilities.push_back(static_cast<double>(i + 1) / total);
    }
    return table;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricReport>& reports,
                       const std::vector<std::string>& comments) {
    write_comments(out, comments);
    out << "station,model,mse,mae,n\n";
    for (const auto& r : reports) {
        out << r.station << ',' << r.model << ',' << format_number(r.mse) << ','
            << format_number(r.mae) << ',' << r.count << '\n';
    }
}

void write_cdf_csv(std::ostream& out, const CdfTable& table,
                   const std::vector<std::string>& comments) {
    write_comments(out, comments);
    out << "value,probability\n";
    for (std::size_t i = 0; i < table.values.size(); ++i) {
        out << format_number(table.values[i]) << ',' << format_number(table.probabilities[i])
            << '\n';
    }
}

} // namespace deeptrend

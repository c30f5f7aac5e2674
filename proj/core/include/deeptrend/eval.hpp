#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace deeptrend {

/// (1/T) sum (y - y_hat)^2
double mse(std::span<const double> actual, std::span<const double> predicted);
/// (1/T) sum |y - y_hat|
double mae(std::span<const double> actual, std::span<const double> predicted);

struct MetricReport {
    std::string station;
    std::string model;
    double mse = 0.0;
    double mae = 0.0;
    std::size_t count = 0;

    /// Computes both metrics and checks mse >= 0, mae >= 0 and mae^2 <= mse.
    static MetricReport compute(std::string station, std::string model,
                                std::span<const double> actual, std::span<const double> predicted);
};

/// Min-max normalization of one station's per-model values: the best
/// (smallest) maps to 0, the worst to 1, and all zeros when every value is
/// equal. Needs at least two models.
std::vector<double> normalize_across_models(std::span<const double> values);

/// Applies normalize_across_models per station to one metric.
/// Result is indexed [model][station] over the stations present in `reports`,
/// in first-appearance order.
struct NormalizedMetric {
    std::vector<std::string> stations;
    std::map<std::string, std::vector<double>> by_model;
};
NormalizedMetric normalize_reports(const std::vector<MetricReport>& reports,
                                   double MetricReport::*metric);

/// Step-function empirical CDF: one point per distinct value with
/// P(X <= value).
struct CdfTable {
    std::vector<double> values;
    std::vector<double> probabilities;
};

CdfTable empirical_cdf(std::span<const double> values);

/// `station,model,mse,mae,n` with optional leading `# ` comment lines.
void write_metrics_csv(std::ostream& out, const std::vector<MetricReport>& reports,
                       const std::vector<std::string>& comments = {});
/// `value,probability`.
void write_cdf_csv(std::ostream& out, const CdfTable& table,
                   const std::vector<std::string>& comments = {});

} // namespace deeptrend

#pragma once

#include "deeptrend/baselines.hpp"
#include "deeptrend/dataio.hpp"
#include "deeptrend/eval.hpp"
#include "deeptrend/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace deeptrend {

inline constexpr const char* deeptrend_model_name = "deeptrend";

/// Every model name the experiment runner understands, in report order.
const std::vector<std::string>& known_model_names();

/// Hyperparameters for one comparison run. Defaults are the full-size
/// settings (window 12, 128 units, 12 training weeks).
struct ExperimentSettings {
    std::size_t window = 12;
    std::size_t train_weeks = 12;
    std::uint64_t seed = 2016;
    std::vector<std::string> models = known_model_names();
    double max_missing_fraction = 0.01;

    DeepTrendShape deeptrend{12, 128, 128};
    TrainConfig extraction_train = DeepTrendModel::default_extraction_config();
    TrainConfig prediction_train = DeepTrendModel::default_prediction_config();
    TrainConfig finetune_train = DeepTrendModel::default_finetune_config();

    std::size_t lstm_hidden = 128;
    TrainConfig lstm_train{0.001, 20, 64, 0};
    double ridge = LinearRegression::default_ridge;
};

/// One station prepared for modelling: imputed flow over the whole loaded
/// span, the simple-average trend fitted on the training weeks, and that
/// trend tiled over the whole span.
struct StationData {
    std::string id;
    Timestamp start{};
    std::vector<double> flow;
    std::vector<double> trend;
    TrendProfile profile;
    std::size_t train_length = 0;

    StationSeries train_series() const;
    Timestamp time_at(std::size_t index) const { return start + static_cast<long>(index) * sample_period; }
};

StationData prepare_station(const FlowTable& table, std::size_t station, std::size_t train_weeks,
                            double max_missing_fraction);

/// A trained model of either family.
struct TrainedModel {
    std::string station;
    std::string name;
    std::optional<DeepTrendModel> deeptrend;
    std::optional<BaselinePredictor> baseline;
    std::map<std::string, std::vector<double>> loss_history;
};

/// Seed used for a (station, model) job; independent of job scheduling and
/// of which other models are requested. The two LSTM baselines share a seed.
std::uint64_t job_seed(std::uint64_t base, std::size_t station, const std::string& model);

TrainedModel train_model(const StationData& data, const std::string& model,
                         const ExperimentSettings& settings, std::uint64_t seed);

/// One-step-ahead forecasts (vehicle counts) for every test target, i.e.
/// indices train_length .. flow.size()-1; windows may reach back into the
/// final training samples.
std::vector<double> forecast_test(const TrainedModel& model, const StationData& data);

std::vector<double> test_actuals(const StationData& data);

struct ExperimentResult {
    std::vector<MetricReport> reports; // station-major, models in settings order
    std::vector<TrainedModel> models;  // same order as reports
};

/// Trains and evaluates every (station, model) pair, running up to `jobs`
/// pairs concurrently. Results do not depend on `jobs`.
ExperimentResult run_experiment(const FlowTable& table, const std::vector<std::string>& stations,
                                const ExperimentSettings& settings, std::size_t jobs = 1);

/// Runs fn(0..count-1) on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

} // namespace deeptrend

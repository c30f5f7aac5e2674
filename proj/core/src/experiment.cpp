#include "deeptrend/experiment.hpp"

#include "deeptrend/text.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace deeptrend {

const std::vector<std::string>& known_model_names() {
    static const std::vector<std::string> names = {
        deeptrend_model_name, "lstm-original", "lstm-detrended",
        "mvlr-original",      "mvlr-detrended", "seasonal-naive"};
    return names;
}

StationSeries StationData::train_series() const {
    return StationSeries{id, start,
                         std::vector<double>(flow.begin(),
                                             flow.begin() + static_cast<std::ptrdiff_t>(train_length))};
}

StationData prepare_station(const FlowTable& table, std::size_t station, std::size_t train_weeks,
                            double max_missing_fraction) {
    const auto imputed = impute_missing(table.station(station), {max_missing_fraction});
    StationData data;
    data.id = imputed.id;
    data.start = imputed.start;
    data.train_length = train_weeks * slots_per_week;
    if (train_weeks == 0 || imputed.size() <= data.train_length) {
        throw DataError("station '" + data.id + "' has " + std::to_string(imputed.size()) +
                        " samples, which leaves no test data after " +
                        std::to_string(train_weeks) + " training weeks");
    }
    data.flow = imputed.samples;
    data.profile = compute_trend(data.train_series(), train_weeks);
    data.trend = tile_trend(data.profile, data.start, data.flow.size());
    return data;
}

std::uint64_t job_seed(std::uint64_t base, std::size_t station, const std::string& model) {
    std::string family = model;
    if (model == "lstm-original" || model == "lstm-detrended") {
        family = "lstm";
    }
    return derive_seed(base, station, fnv1a64(family));
}

namespace {

TrainConfig with_seed(TrainConfig config, std::uint64_t seed, std::uint64_t stream) {
    config.shuffle_seed = derive_seed(seed, stream);
    return config;
}

TrainedModel train_deeptrend(const StationData& data, const ExperimentSettings& settings,
                             std::uint64_t seed) {
    DeepTrendShape shape = settings.deeptrend;
    shape.window = settings.window;
    DeepTrendModel model(shape, seed);

    const std::span<const double> train_flow(data.flow.data(), data.train_length);
    const auto scaler = Standardizer::fit(train_flow);
    model.set_scaler(scaler);
    const auto flow_z = scaler.apply(data.flow);
    const auto trend_z = scaler.apply(data.trend);
    const auto windows = make_deeptrend_windows(flow_z, trend_z, settings.window)
                             .select_targets(0, data.train_length);

    TrainedModel out{data.id, deeptrend_model_name, std::nullopt, std::nullopt, {}};
    out.loss_history["extraction"] =
        model.pretrain_extraction(windows, with_seed(settings.extraction_train, seed, 1));
    out.loss_history["prediction"] =
        model.pretrain_prediction(windows, with_seed(settings.prediction_train, seed, 2));
    out.loss_history["finetune"] =
        model.finetune(windows, with_seed(settings.finetune_train, seed, 3));
    out.deeptrend = std::move(model);
    return out;
}

} // namespace

TrainedModel train_model(const StationData& data, const std::string& model,
                         const ExperimentSettings& settings, std::uint64_t seed) {
    if (model == deeptrend_model_name) {
        return train_deeptrend(data, settings, seed);
    }
    const BaselineKind kind = baseline_from_string(model);
    BaselineOptions options;
    options.window = settings.window;
    options.hidden = settings.lstm_hidden;
    options.train = with_seed(settings.lstm_train, seed, 1);
    options.seed = seed;
    options.ridge = settings.ridge;
    TrainedModel out{data.id, model, std::nullopt, std::nullopt, {}};
    out.baseline = fit_baseline(kind, data.train_series(), data.profile, options);
    if (!out.baseline->loss_history.empty()) {
        out.loss_history["train"] = out.baseline->loss_history;
    }
    return out;
}

std::vector<double> forecast_test(const TrainedModel& model, const StationData& data) {
    const std::size_t n = model.deeptrend ? model.deeptrend->window() : model.baseline->window;
    if (data.train_length < n) {
        throw DataError("training span is shorter than the window");
    }
    std::vector<double> out;
    out.reserve(data.flow.size() - data.train_length);
    for (std::size_t t = data.train_length; t < data.flow.size(); ++t) {
        const std::span<const double> flow_window(data.flow.data() + (t - n), n);
        if (model.deeptrend) {
            const std::span<const double> trend_window(data.trend.data() + (t - n), n);
            out.push_back(model.deeptrend->predict(flow_window, trend_window));
        } else {
            out.push_back(predict_baseline(*model.baseline, flow_window, data.time_at(t)));
        }
    }
    return out;
}

std::vector<double> test_actuals(const StationData& data) {
    return {data.flow.begin() + static_cast<std::ptrdiff_t>(data.train_length), data.flow.end()};
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ExperimentResult run_experiment(const FlowTable& table, const std::vector<std::string>& stations,
                                const ExperimentSettings& settings, std::size_t jobs) {
    std::vector<StationData> prepared;
    std::vector<std::size_t> station_index;
    for (const auto& id : stations) {
        station_index.push_back(table.station_index(id));
        prepared.push_back(prepare_station(table, station_index.back(), settings.train_weeks,
                                           settings.max_missing_fraction));
    }
    const std::size_t model_count = settings.models.size();
    const std::size_t total = prepared.size() * model_count;
    ExperimentResult result;
    result.reports.resize(total);
    result.models.resize(total);
    parallel_for(total, jobs, [&](std::size_t job) {
        const std::size_t s = job / model_count;
        const std::string& name = settings.models[job % model_count];
        const auto seed = job_seed(settings.seed, station_index[s], name);
        TrainedModel model = train_model(prepared[s], name, settings, seed);
        const auto predicted = forecast_test(model, prepared[s]);
        const auto actual = test_actuals(prepared[s]);
        result.reports[job] = MetricReport::compute(prepared[s].id, name, actual, predicted);
        result.models[job] = std::move(model);
    });
    return result;
}

} // namespace deeptrend

#include "deeptrend/model.hpp"

namespace deeptrend {

namespace {

struct Windows {
    std::vector<double> flow;
    std::vector<double> trend;
};

Windows split_features(const WindowedDataset& data, std::size_t sample) {
    if (data.features != 2) {
        throw ShapeError("DeepTrend datasets carry 2 features per step, got " +
                         std::to_string(data.features));
    }
    Windows w{std::vector<double>(data.window), std::vector<double>(data.window)};
    const auto in = data.input(sample);
    for (std::size_t s = 0; s < data.window; ++s) {
        w.flow[s] = in[2 * s];
        w.trend[s] = in[2 * s + 1];
    }
    return w;
}

Matrix concat_column(std::span<const double> a, std::span<const double> b) {
    Matrix z(a.size() + b.size(), 1);
    std::copy(a.begin(), a.end(), z.values().begin());
    std::copy(b.begin(), b.end(), z.values().begin() + static_cast<std::ptrdiff_t>(a.size()));
    return z;
}

/// Per-step (trend, flow - trend) rows fed to the prediction LSTM.
Matrix prediction_features(std::span<const double> flow, std::span<const double> trend) {
    Matrix seq(flow.size(), 2);
    for (std::size_t s = 0; s < flow.size(); ++s) {
        seq(s, 0) = trend[s];
        seq(s, 1) = flow[s] - trend[s];
    }
    return seq;
}

void check_window(std::size_t expected, std::span<const double> flow,
                  std::span<const double> trend) {
    if (flow.size() != expected || trend.size() != expected) {
        throw ShapeError("DeepTrend expects windows of length " + std::to_string(expected) +
                         ", got " + std::to_string(flow.size()) + " and " +
                         std::to_string(trend.size()));
    }
}

} // namespace

std::string to_string(Phase phase) {
    switch (phase) {
    case Phase::untrained: return "untrained";
    case Phase::extraction_pretrained: return "extraction-pretrained";
    case Phase::prediction_pretrained: return "prediction-pretrained";
    case Phase::finetuned: return "finetuned";
    }
    return "unknown";
}

DeepTrendModel::DeepTrendModel(const DeepTrendShape& shape, std::uint64_t seed) : shape_(shape) {
    if (shape.window == 0 || shape.extraction_hidden == 0 || shape.prediction_hidden == 0) {
        throw ShapeError("DeepTrend sizes must be positive");
    }
    RandomSource rng(seed);
    extraction_hidden = DenseLayer::random(2 * shape.window, shape.extraction_hidden,
                                           Activation::relu, rng);
    extraction_output = DenseLayer::random(shape.extraction_hidden, shape.window,
                                           Activation::identity, rng);
    predictor = LstmLayer::random(2, shape.prediction_hidden, rng);
    head = DenseLayer::random(shape.prediction_hidden, 2, Activation::identity, rng);
}

std::vector<double> DeepTrendModel::extract_trend(std::span<const double> flow_window,
                                                  std::span<const double> trend_window) const {
    check_window(shape_.window, flow_window, trend_window);
    const Matrix hidden = dense_forward(extraction_hidden, concat_column(flow_window, trend_window));
    const Matrix out = dense_forward(extraction_output, hidden);
    return {out.values().begin(), out.values().end()};
}

DeepTrendModel::Heads DeepTrendModel::forward_heads(std::span<const double> flow_window,
                                                    std::span<const double> trend_window) const {
    const auto extracted = extract_trend(flow_window, trend_window);
    const LstmTrace trace = lstm_forward(predictor, prediction_features(flow_window, extracted));
    const Matrix out = dense_forward(head, Matrix::column(trace.final_hidden()));
    return {out[0], out[1]};
}

double DeepTrendModel::predict(std::span<const double> flow_window,
                               std::span<const double> trend_window) const {
    require_phase(Phase::finetuned, "predict");
    check_window(shape_.window, flow_window, trend_window);
    const auto flow_z = scaler_.apply(flow_window);
    const auto trend_z = scaler_.apply(trend_window);
    const Heads heads = forward_heads(flow_z, trend_z);
    return scaler_.invert(heads.trend + heads.residual);
}

void DeepTrendModel::require_phase(Phase expected, const char* operation) const {
    if (phase_ != expected) {
        throw PhaseError(std::string(operation) + " requires phase " + to_string(expected) +
                         ", model is " + to_string(phase_));
    }
}

std::vector<double> DeepTrendModel::pretrain_extraction(const WindowedDataset& data,
                                                        const TrainConfig& config) {
    require_phase(Phase::untrained, "pretrain_extraction");
    ExtractionObjective objective(*this);
    auto history = train(objective, data, config);
    phase_ = Phase::extraction_pretrained;
    return history;
}

std::vector<double> DeepTrendModel::pretrain_prediction(const WindowedDataset& data,
                                                        const TrainConfig& config) {
    require_phase(Phase::extraction_pretrained, "pretrain_prediction");
    PredictionObjective objective(*this);
    auto history = train(objective, data, config);
    phase_ = Phase::prediction_pretrained;
    return history;
}

std::vector<double> DeepTrendModel::finetune(const WindowedDataset& data, const TrainConfig& config) {
    require_phase(Phase::prediction_pretrained, "finetune");
    FinetuneObjective objective(*this);
    auto history = train(objective, data, config);
    phase_ = Phase::finetuned;
    return history;
}

TrainConfig DeepTrendModel::default_extraction_config() {
    return TrainConfig{0.001, 20, 64, 0};
}

TrainConfig DeepTrendModel::default_prediction_config() {
    return TrainConfig{0.005, 10, 64, 0};
}

TrainConfig DeepTrendModel::default_finetune_config() {
    return TrainConfig{0.00002, 7, 64, 0};
}

std::vector<ParameterRef> DeepTrendModel::extraction_parameters() {
    std::vector<ParameterRef> out;
    extraction_hidden.append_parameters(out, "extraction.hidden.");
    extraction_output.append_parameters(out, "extraction.output.");
    return out;
}

std::vector<ParameterRef> DeepTrendModel::prediction_parameters() {
    std::vector<ParameterRef> out;
    predictor.append_parameters(out, "prediction.lstm.");
    head.append_parameters(out, "prediction.head.");
    return out;
}

std::vector<ParameterRef> DeepTrendModel::all_parameters() {
    auto out = extraction_parameters();
    auto rest = prediction_parameters();
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

WindowedDataset make_deeptrend_windows(std::span<const double> flow, std::span<const double> trend,
                                       std::size_t window) {
    return make_windows({flow, trend}, {flow, trend}, window);
}

double ExtractionObjective::accumulate_sample(const WindowedDataset& data, std::size_t sample) {
    const Windows w = split_features(data, sample);
    const Matrix hidden =
        dense_forward(model_.extraction_hidden, concat_column(w.flow, w.trend), hidden_cache_);
    const Matrix extracted = dense_forward(model_.extraction_output, hidden, output_cache_);
    const LossGrad loss = mse_loss(extracted, Matrix::column(w.trend));
    const Matrix d_hidden = dense_backward(model_.extraction_output, output_cache_, loss.grad);
    dense_backward(model_.extraction_hidden, hidden_cache_, d_hidden);
    return loss.loss;
}

double PredictionObjective::accumulate_sample(const WindowedDataset& data, std::size_t sample) {
    if (data.target_size != 2) {
        throw ShapeError("prediction pre-training needs (flow, trend) targets");
    }
    const Windows w = split_features(data, sample);
    const auto extracted = model_.extract_trend(w.flow, w.trend);
    lstm_forward(model_.predictor, prediction_features(w.flow, extracted), trace_);
    const Matrix out =
        dense_forward(model_.head, Matrix::column(trace_.final_hidden()), head_cache_);
    const auto target = data.target(sample);
    const double next_flow = target[0];
    const double next_trend = target[1];
    const LossGrad loss = mse_loss(out, Matrix{{next_trend}, {next_flow - next_trend}});
    const Matrix dh = dense_backward(model_.head, head_cache_, loss.grad);
    lstm_backward(model_.predictor, trace_, dh.values());
    return loss.loss;
}

double FinetuneObjective::accumulate_sample(const WindowedDataset& data, std::size_t sample) {
    const Windows w = split_features(data, sample);
    return accumulate(w.flow, w.trend, data.target(sample)[0]);
}

double FinetuneObjective::accumulate(std::span<const double> flow_window,
                                     std::span<const double> trend_window, double target,
                                     double upstream) {
    check_window(model_.window(), flow_window, trend_window);
    const Matrix hidden = dense_forward(model_.extraction_hidden,
                                        concat_column(flow_window, trend_window), hidden_cache_);
    const Matrix extracted = dense_forward(model_.extraction_output, hidden, output_cache_);
    lstm_forward(model_.predictor, prediction_features(flow_window, extracted.values()), trace_);
    const Matrix out =
        dense_forward(model_.head, Matrix::column(trace_.final_hidden()), head_cache_);

    const double forecast = out[0] + out[1];
    const double diff = forecast - target;
    const double d_forecast = upstream * 2.0 * diff;
    const Matrix d_out{{d_forecast}, {d_forecast}};
    const Matrix dh = dense_backward(model_.head, head_cache_, d_out);
    const Matrix d_seq = lstm_backward(model_.predictor, trace_, dh.values());

    // Feature 0 is the extracted trend, feature 1 is flow - extracted trend.
    Matrix d_extracted(model_.window(), 1);
    for (std::size_t s = 0; s < model_.window(); ++s) {
        d_extracted[s] = d_seq(s, 0) - d_seq(s, 1);
    }
    const Matrix d_hidden = dense_backward(model_.extraction_output, output_cache_, d_extracted);
    dense_backward(model_.extraction_hidden, hidden_cache_, d_hidden);
    return diff * diff;
}

} // namespace deeptrend

#pragma once

#include "deeptrend/detrend.hpp"
#include "deeptrend/layers.hpp"
#include "deeptrend/optim.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend {

/// A training or inference call made out of protocol order.
class PhaseError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class Phase { untrained, extraction_pretrained, prediction_pretrained, finetuned };

std::string to_string(Phase phase);

struct DeepTrendShape {
    std::size_t window = 12;
    std::size_t extraction_hidden = 128;
    std::size_t prediction_hidden = 128;
};

/// Hierarchical trend/residual forecaster.
///
/// The extraction stack maps a flow window concatenated with its simple-average
/// trend window (2N values) through a relu hidden layer back to an N-step
/// time-variant trend. The prediction LSTM reads, per step, the extracted trend
/// and the residual flow - trend, and a linear head emits the next-step trend
/// and residual. The forecast is their sum.
///
/// All windows passed to the training objectives and to extract_trend /
/// forward_heads are in standardized units; predict() takes and returns
/// vehicle counts.
///
/// Training runs in three phases that must happen in order:
/// pretrain_extraction, pretrain_prediction, finetune.
class DeepTrendModel {
public:
    DeepTrendModel(const DeepTrendShape& shape, std::uint64_t seed);

    const DeepTrendShape& shape() const noexcept { return shape_; }
    std::size_t window() const noexcept { return shape_.window; }
    Phase phase() const noexcept { return phase_; }

    const Standardizer& scaler() const noexcept { return scaler_; }
    void set_scaler(const Standardizer& scaler) { scaler_ = scaler; }

    DenseLayer extraction_hidden; // 2N -> E, relu
    DenseLayer extraction_output; // E -> N, identity
    LstmLayer predictor;          // 2 features -> H
    DenseLayer head;              // H -> 2 (trend, residual), identity

    std::vector<double> extract_trend(std::span<const double> flow_window,
                                      std::span<const double> trend_window) const;

    struct Heads {
        double trend = 0.0;
        double residual = 0.0;
    };
    Heads forward_heads(std::span<const double> flow_window,
                        std::span<const double> trend_window) const;

    /// Next-step flow in vehicle counts from raw flow and average-trend windows.
    /// Requires the finetuned phase.
    double predict(std::span<const double> flow_window, std::span<const double> trend_window) const;

    // Dataset layout for all three phases: two features per step
    // (standardized flow, standardized simple-average trend) and two targets
    // (next-step flow, next-step simple-average trend), as built by
    // make_deeptrend_windows.
    std::vector<double> pretrain_extraction(const WindowedDataset& data, const TrainConfig& config);
    std::vector<double> pretrain_prediction(const WindowedDataset& data, const TrainConfig& config);
    std::vector<double> finetune(const WindowedDataset& data, const TrainConfig& config);

    static TrainConfig default_extraction_config();
    static TrainConfig default_prediction_config();
    static TrainConfig default_finetune_config();

    std::vector<ParameterRef> extraction_parameters();
    std::vector<ParameterRef> prediction_parameters();
    std::vector<ParameterRef> all_parameters();

    /// Restores a phase marker; used when loading checkpoints.
    void restore_phase(Phase phase) { phase_ = phase; }

private:
    void require_phase(Phase expected, const char* operation) const;

    DeepTrendShape shape_;
    Phase phase_ = Phase::untrained;
    Standardizer scaler_;
};

/// Windows of (flow, trend) feature pairs with (next flow, next trend) targets.
WindowedDataset make_deeptrend_windows(std::span<const double> flow, std::span<const double> trend,
                                       std::size_t window);

/// Phase-one objective: reconstruct the average-trend window from
/// [flow || trend]. Trains the extraction stack only.
class ExtractionObjective final : public Trainable {
public:
    explicit ExtractionObjective(DeepTrendModel& model) : model_(model) {}
    std::vector<ParameterRef> parameters() override { return model_.extraction_parameters(); }
    double accumulate_sample(const WindowedDataset& data, std::size_t sample) override;

private:
    DeepTrendModel& model_;
    DenseCache hidden_cache_;
    DenseCache output_cache_;
};

/// Phase-two objective: with the extraction stack frozen, predict the
/// next-step (average trend, flow - average trend) pair.
class PredictionObjective final : public Trainable {
public:
    explicit PredictionObjective(DeepTrendModel& model) : model_(model) {}
    std::vector<ParameterRef> parameters() override { return model_.prediction_parameters(); }
    double accumulate_sample(const WindowedDataset& data, std::size_t sample) override;

private:
    DeepTrendModel& model_;
    LstmTrace trace_;
    DenseCache head_cache_;
};

/// Phase-three objective: squared error of trend head + residual head against
/// the next-step flow, differentiated through the whole graph including the
/// residual subtraction.
class FinetuneObjective final : public Trainable {
public:
    explicit FinetuneObjective(DeepTrendModel& model) : model_(model) {}
    std::vector<ParameterRef> parameters() override { return model_.all_parameters(); }
    double accumulate_sample(const WindowedDataset& data, std::size_t sample) override;

    /// Loss and gradients for a prescribed upstream gradient scale; exposed
    /// for gradient checks. `upstream` multiplies d(loss)/d(forecast).
    double accumulate(std::span<const double> flow_window, std::span<const double> trend_window,
                      double target, double upstream = 1.0);

private:
    DeepTrendModel& model_;
    DenseCache hidden_cache_;
    DenseCache output_cache_;
    LstmTrace trace_;
    DenseCache head_cache_;
};

} // namespace deeptrend

#pragma once

#include "deeptrend/layers.hpp"
#include "deeptrend/windows.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend {

class NonFiniteGradient : public std::runtime_error {
public:
    explicit NonFiniteGradient(const std::string& parameter)
        : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"),
          parameter_(parameter) {}
    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(std::size_t epoch)
        : std::runtime_error("training diverged: non-finite loss in epoch " +
                             std::to_string(epoch)),
          epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

/// Bias-corrected Adam. Moment buffers are created on the first step and
/// follow the order of the parameter list passed to adam_step.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;

    explicit AdamState(double lr = 0.001);
};

/// One Adam update of every parameter from its gradient buffer.
/// Throws NonFiniteGradient naming the first offending parameter, before any
/// parameter is modified.
void adam_step(std::span<const ParameterRef> params, AdamState& state);

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    std::uint64_t shuffle_seed = 0;

    /// Throws std::invalid_argument on lr <= 0, epochs == 0 or batch_size == 0.
    void validate() const;
};

/// Anything the training loop can drive: exposes its parameters and
/// accumulates the gradient of one sample's loss.
class Trainable {
public:
    virtual ~Trainable() = default;
    virtual std::vector<ParameterRef> parameters() = 0;
    /// Forward and backward on one sample. Adds d(loss)/d(param) into the
    /// gradient buffers and returns the sample loss.
    virtual double accumulate_sample(const WindowedDataset& data, std::size_t sample) = 0;
};

void zero_grad(std::span<const ParameterRef> params);

/// Mini-batch Adam over shuffled samples; returns the mean training loss of
/// each epoch. Each batch step uses the mean gradient over the batch.
std::vector<double> train(Trainable& model, const WindowedDataset& data, const TrainConfig& config);

} // namespace deeptrend

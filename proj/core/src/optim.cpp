#include "deeptrend/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deeptrend {

AdamState::AdamState(double lr) : learning_rate(lr) {}

void adam_step(std::span<const ParameterRef> params, AdamState& state) {
    if (!(state.beta1 >= 0.0 && state.beta1 < 1.0 && state.beta2 >= 0.0 && state.beta2 < 1.0)) {
        throw std::invalid_argument("adam: betas must lie in [0, 1)");
    }
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.value->rows(), p.value->cols());
            state.second_moment.emplace_back(p.value->rows(), p.value->cols());
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam: state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (!p.grad->same_shape(*p.value) || !state.first_moment[k].same_shape(*p.value)) {
            throw ShapeError("adam: shape mismatch for parameter '" + p.name + "' (" +
                             p.value->shape_string() + ")");
        }
        if (!p.grad->all_finite()) {
            throw NonFiniteGradient(p.name);
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].value->values();
        const auto g = params[k].grad->values();
        auto m = state.first_moment[k].values();
        auto v = state.second_moment[k].values();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            theta[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("train config: learning_rate must be positive");
    }
    if (epochs == 0) {
        throw std::invalid_argument("train config: epochs must be at least 1");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("train config: batch_size must be at least 1");
    }
}

void zero_grad(std::span<const ParameterRef> params) {
    for (const auto& p : params) {
        p.grad->fill(0.0);
    }
}

std::vector<double> train(Trainable& model, const WindowedDataset& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) {
        throw std::invalid_argument("train: dataset is empty");
    }
    const auto params = model.parameters();
    AdamState adam(config.learning_rate);
    RandomSource rng(config.shuffle_seed);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> history;
    history.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            zero_grad(params);
            for (std::size_t k = start; k < stop; ++k) {
                epoch_loss += model.accumulate_sample(data, order[k]);
            }
            if (!std::isfinite(epoch_loss)) {
                throw DivergenceError(epoch);
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (const auto& p : params) {
                for (double& g : p.grad->values()) {
                    g *= scale;
                }
            }
            adam_step(params, adam);
        }
        history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return history;
}

} // namespace deeptrend

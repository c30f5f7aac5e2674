#pragma once

#include "deeptrend/detrend.hpp"
#include "deeptrend/layers.hpp"
#include "deeptrend/optim.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend {

class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One-layer LSTM over a univariate window, a ReLU dense head on the final
/// hidden state, and a linear output: x_hat = W_o relu(W_h h_N + b_h) + b_o.
class LstmRegressor final : public Trainable {
public:
    LstmRegressor() = default;
    LstmRegressor(std::size_t hidden, std::uint64_t seed);

    LstmLayer lstm;
    DenseLayer head;   // H -> H, relu
    DenseLayer output; // H -> 1, identity

    std::vector<ParameterRef> parameters() override;
    double accumulate_sample(const WindowedDataset& data, std::size_t sample) override;
    double predict(std::span<const double> window) const;

private:
    LstmTrace trace_;
    DenseCache head_cache_;
    DenseCache output_cache_;
};

/// Ordinary least squares on the window plus an intercept, solved through the
/// ridge-regularized normal equations.
struct LinearRegression {
    std::vector<double> coefficients; // oldest step first
    double intercept = 0.0;

    static constexpr double default_ridge = 1e-8;

    /// Throws SingularSystem when the regularized normal matrix is not
    /// numerically positive definite.
    static LinearRegression fit(const WindowedDataset& data, double ridge = default_ridge);
    double predict(std::span<const double> window) const;
};

enum class BaselineKind { lstm_original, lstm_detrended, mvlr_original, mvlr_detrended, seasonal_naive };

std::string to_string(BaselineKind kind);
/// Accepts lstm-original, lstm-detrended, mvlr-original, mvlr-detrended,
/// seasonal-naive and the short forms LSTM-O, LSTM-D, MVLR-O, MVLR-D.
BaselineKind baseline_from_string(const std::string& name);
bool is_detrended(BaselineKind kind) noexcept;

struct BaselineOptions {
    std::size_t window = 12;
    std::size_t hidden = 128;
    TrainConfig train{0.001, 20, 64, 0};
    std::uint64_t seed = 0;
    double ridge = LinearRegression::default_ridge;
};

/// A fitted comparison model. Detrended kinds and seasonal-naive keep the
/// training trend profile and add its slot value back to every forecast.
struct BaselinePredictor {
    BaselineKind kind = BaselineKind::seasonal_naive;
    std::size_t window = 12;
    Standardizer scaler;
    TrendProfile trend;
    std::optional<LstmRegressor> lstm;
    std::optional<LinearRegression> linear;
    std::vector<double> loss_history;
};

/// Fits on a complete (imputed) training series. `trend` is the profile fitted
/// on the same training weeks; its anchor must not be later than the series.
BaselinePredictor fit_baseline(BaselineKind kind, const StationSeries& train_series,
                               const TrendProfile& trend, const BaselineOptions& options);

/// Forecast in vehicle counts for the sample at `target_time`, given the N raw
/// flow samples immediately preceding it.
double predict_baseline(const BaselinePredictor& predictor, std::span<const double> flow_window,
                        Timestamp target_time);

} // namespace deeptrend

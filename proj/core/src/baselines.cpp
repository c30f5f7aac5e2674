#include "deeptrend/baselines.hpp"

#include <cmath>

namespace deeptrend {

LstmRegressor::LstmRegressor(std::size_t hidden, std::uint64_t seed) {
    RandomSource rng(seed);
    lstm = LstmLayer::random(1, hidden, rng);
    head = DenseLayer::random(hidden, hidden, Activation::relu, rng);
    output = DenseLayer::random(hidden, 1, Activation::identity, rng);
}

std::vector<ParameterRef> LstmRegressor::parameters() {
    std::vector<ParameterRef> out;
    lstm.append_parameters(out, "lstm.");
    head.append_parameters(out, "head.");
    output.append_parameters(out, "output.");
    return out;
}

double LstmRegressor::accumulate_sample(const WindowedDataset& data, std::size_t sample) {
    if (data.features != 1 || data.target_size != 1) {
        throw ShapeError("LSTM regressor expects univariate windows and targets");
    }
    lstm_forward(lstm, data.input_matrix(sample), trace_);
    const Matrix z = dense_forward(head, Matrix::column(trace_.final_hidden()), head_cache_);
    const Matrix y = dense_forward(output, z, output_cache_);
    const LossGrad loss = mse_loss(y, Matrix::column(data.target(sample)));
    const Matrix dz = dense_backward(output, output_cache_, loss.grad);
    const Matrix dh = dense_backward(head, head_cache_, dz);
    lstm_backward(lstm, trace_, dh.values());
    return loss.loss;
}

double LstmRegressor::predict(std::span<const double> window) const {
    const LstmTrace trace = lstm_forward(lstm, Matrix::column(window));
    return dense_forward(output, dense_forward(head, Matrix::column(trace.final_hidden())))[0];
}

LinearRegression LinearRegression::fit(const WindowedDataset& data, double ridge) {
    if (data.empty() || data.features != 1 || data.target_size != 1) {
        throw ShapeError("linear regression expects a nonempty univariate windowed dataset");
    }
    const std::size_t p = data.window + 1; // last column is the intercept
    Matrix gram(p, p);
    std::vector<double> rhs(p, 0.0);
    std::vector<double> row(p);
    for (std::size_t s = 0; s < data.size(); ++s) {
        const auto x = data.input(s);
        std::copy(x.begin(), x.end(), row.begin());
        row[p - 1] = 1.0;
        const double y = data.target(s)[0];
        for (std::size_t i = 0; i < p; ++i) {
            rhs[i] += row[i] * y;
            for (std::size_t j = 0; j <= i; ++j) {
                gram(i, j) += row[i] * row[j];
            }
        }
    }
    double max_diag = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        gram(i, i) += ridge;
        max_diag = std::max(max_diag, gram(i, i));
    }

    // Cholesky on the lower triangle: gram = L L^T.
    Matrix chol(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        double diag = gram(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            diag -= chol(j, k) * chol(j, k);
        }
        if (!(diag > 1e-14 * max_diag) || !std::isfinite(diag)) {
            throw SingularSystem("normal equations are singular at column " + std::to_string(j) +
                                 " even with ridge " + std::to_string(ridge));
        }
        chol(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < p; ++i) {
            double v = gram(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                v -= chol(i, k) * chol(j, k);
            }
            chol(i, j) = v / chol(j, j);
        }
    }
    std::vector<double> z(p);
    for (std::size_t i = 0; i < p; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) {
            v -= chol(i, k) * z[k];
        }
        z[i] = v / chol(i, i);
    }
    std::vector<double> beta(p);
    for (std::size_t i = p; i-- > 0;) {
        double v = z[i];
        for (std::size_t k = i + 1; k < p; ++k) {
            v -= chol(k, i) * beta[k];
        }
        beta[i] = v / chol(i, i);
    }
    LinearRegression out;
    out.intercept = beta[p - 1];
    out.coefficients.assign(beta.begin(), beta.end() - 1);
    return out;
}

double LinearRegression::predict(std::span<const double> window) const {
    if (window.size() != coefficients.size()) {
        throw ShapeError("linear regression expects a window of " +
                         std::to_string(coefficients.size()) + ", got " +
                         std::to_string(window.size()));
    }
    double y = intercept;
    for (std::size_t k = 0; k < window.size(); ++k) {
        y += coefficients[k] * window[k];
    }
    return y;
}

std::string to_string(BaselineKind kind) {
    switch (kind) {
    case BaselineKind::lstm_original: return "lstm-original";
    case BaselineKind::lstm_detrended: return "lstm-detrended";
    case BaselineKind::mvlr_original: return "mvlr-original";
    case BaselineKind::mvlr_detrended: return "mvlr-detrended";
    case BaselineKind::seasonal_naive: return "seasonal-naive";
    }
    return "unknown";
}

BaselineKind baseline_from_string(const std::string& name) {
    if (name == "lstm-original" || name == "LSTM-O") return BaselineKind::lstm_original;
    if (name == "lstm-detrended" || name == "LSTM-D") return BaselineKind::lstm_detrended;
    if (name == "mvlr-original" || name == "MVLR-O") return BaselineKind::mvlr_original;
    if (name == "mvlr-detrended" || name == "MVLR-D") return BaselineKind::mvlr_detrended;
    if (name == "seasonal-naive") return BaselineKind::seasonal_naive;
    throw std::invalid_argument("unknown baseline '" + name + "'");
}

bool is_detrended(BaselineKind kind) noexcept {
    return kind == BaselineKind::lstm_detrended || kind == BaselineKind::mvlr_detrended;
}

BaselinePredictor fit_baseline(BaselineKind kind, const StationSeries& train_series,
                               const TrendProfile& trend, const BaselineOptions& options) {
    if (train_series.missing_count() != 0) {
        throw DataError("fit_baseline: station '" + train_series.id +
                        "' still has missing samples; impute first");
    }
    BaselinePredictor out;
    out.kind = kind;
    out.window = options.window;
    out.trend = trend;
    if (kind == BaselineKind::seasonal_naive) {
        return out;
    }

    std::vector<double> input = train_series.samples;
    if (is_detrended(kind)) {
        const auto residual = compute_residual(train_series, trend);
        input = residual.values;
    }

    if (kind == BaselineKind::mvlr_original || kind == BaselineKind::mvlr_detrended) {
        const auto data = make_windows({input}, {input}, options.window);
        out.linear = LinearRegression::fit(data, options.ridge);
        return out;
    }

    out.scaler = Standardizer::fit(input);
    const auto z = out.scaler.apply(input);
    const auto data = make_windows({z}, {z}, options.window);
    LstmRegressor model(options.hidden, options.seed);
    out.loss_history = train(model, data, options.train);
    out.lstm = std::move(model);
    return out;
}

double predict_baseline(const BaselinePredictor& predictor, std::span<const double> flow_window,
                        Timestamp target_time) {
    if (flow_window.size() != predictor.window) {
        throw ShapeError("baseline expects a window of " + std::to_string(predictor.window) +
                         ", got " + std::to_string(flow_window.size()));
    }
    const Timestamp window_start =
        target_time - static_cast<long>(predictor.window) * sample_period;
    const bool uses_trend =
        is_detrended(predictor.kind) || predictor.kind == BaselineKind::seasonal_naive;
    double trend_next = 0.0;
    std::vector<double> input(flow_window.begin(), flow_window.end());
    if (uses_trend) {
        trend_next = predictor.trend.at_slot(slot_of(predictor.trend, target_time));
        const auto trend_window = tile_trend(predictor.trend, window_start, predictor.window);
        for (std::size_t k = 0; k < input.size(); ++k) {
            input[k] -= trend_window[k];
        }
    }

    switch (predictor.kind) {
    case BaselineKind::seasonal_naive:
        return trend_next;
    case BaselineKind::mvlr_original:
    case BaselineKind::mvlr_detrended:
        if (!predictor.linear) throw std::logic_error("linear baseline has no fitted model");
        return trend_next + predictor.linear->predict(input);
    case BaselineKind::lstm_original:
    case BaselineKind::lstm_detrended: {
        if (!predictor.lstm) throw std::logic_error("LSTM baseline has no fitted model");
        const auto z = predictor.scaler.apply(input);
        return trend_next + predictor.scaler.invert(predictor.lstm->predict(z));
    }
    }
    throw std::logic_error("unhandled baseline kind");
}

} // namespace deeptrend

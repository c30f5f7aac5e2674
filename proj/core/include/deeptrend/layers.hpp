#pragma once

#include "deeptrend/tensor.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace deeptrend {

/// A named learnable tensor together with its gradient buffer.
struct ParameterRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

/// Fully connected layer: y = activation(W x + b).
struct DenseLayer {
    Matrix weight;      // out x in
    Matrix bias;        // out x 1
    Matrix weight_grad;
    Matrix bias_grad;
    Activation activation = Activation::identity;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation act);

    /// Glorot-uniform weights, zero bias.
    static DenseLayer random(std::size_t in, std::size_t out, Activation act, RandomSource& rng);

    std::size_t input_size() const noexcept { return weight.cols(); }
    std::size_t output_size() const noexcept { return weight.rows(); }

    void zero_grad();
    void append_parameters(std::vector<ParameterRef>& out, const std::string& prefix);
};

/// Values from a dense forward pass needed by the backward pass.
struct DenseCache {
    Matrix input;  // in x batch
    Matrix pre;    // out x batch
    Matrix output; // out x batch
};

/// x is in x batch (batch is usually 1).
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);
Matrix dense_forward(const DenseLayer& layer, const Matrix& x, DenseCache& cache);

/// Accumulates dW and db; returns dL/dx with the shape of the cached input.
Matrix dense_backward(DenseLayer& layer, const DenseCache& cache, const Matrix& dy);

enum Gate : std::size_t { input_gate = 0, forget_gate = 1, output_gate = 2, candidate = 3 };
inline constexpr std::size_t gate_count = 4;

/// Single LSTM layer with per-gate weights.
///
///   i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + b_i)
///   f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + b_f)
///   o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + b_o)
///   g_t = tanh(W_xc x_t + W_hc h_{t-1} + b_c)
///   c_t = f_t * c_{t-1} + i_t * g_t
///   h_t = o_t * tanh(c_t)
///
/// Arrays are indexed by Gate. Every sequence starts from h_0 = c_0 = 0.
struct LstmLayer {
    std::array<Matrix, gate_count> input_weights;  // H x d
    std::array<Matrix, gate_count> hidden_weights; // H x H
    std::array<Matrix, gate_count> biases;         // H x 1
    std::array<Matrix, gate_count> input_weight_grads;
    std::array<Matrix, gate_count> hidden_weight_grads;
    std::array<Matrix, gate_count> bias_grads;

    LstmLayer() = default;
    LstmLayer(std::size_t input_size, std::size_t hidden_size);

    static LstmLayer random(std::size_t input_size, std::size_t hidden_size, RandomSource& rng);

    std::size_t input_size() const noexcept { return input_weights[0].cols(); }
    std::size_t hidden_size() const noexcept { return input_weights[0].rows(); }

    void zero_grad();
    /// Names follow W_x?, W_h?, b_? with ? in {i, f, o, c}.
    void append_parameters(std::vector<ParameterRef>& out, const std::string& prefix);
    void check_shapes() const;
};

/// Everything recorded during an LSTM forward pass. Row t of each matrix is
/// time step t; h and c carry an extra leading zero row for h_0 and c_0.
struct LstmTrace {
    Matrix inputs;       // T x d
    Matrix hidden;       // (T+1) x H
    Matrix cell;         // (T+1) x H
    Matrix cell_tanh;    // T x H, tanh(c_t)
    std::array<Matrix, gate_count> gates; // each T x H, post-activation

    std::size_t steps() const noexcept { return inputs.rows(); }
    std::span<const double> final_hidden() const { return hidden.row(hidden.rows() - 1); }
};

/// sequence is T x d; row t is x_{t+1}.
LstmTrace lstm_forward(const LstmLayer& layer, const Matrix& sequence);
void lstm_forward(const LstmLayer& layer, const Matrix& sequence, LstmTrace& trace);
/// Column-vector form: each element is d x 1.
LstmTrace lstm_forward(const LstmLayer& layer, const std::vector<Matrix>& sequence);

/// Backpropagation through time from a gradient on the final hidden state.
/// Accumulates into the layer's gradient buffers and returns dL/dx as T x d.
Matrix lstm_backward(LstmLayer& layer, const LstmTrace& trace, std::span<const double> dh_final);

struct LossGrad {
    double loss = 0.0;
    Matrix grad;
};

/// Mean of squared differences and its gradient 2 (pred - target) / count.
LossGrad mse_loss(const Matrix& pred, const Matrix& target);
/// Span form; writes the gradient into grad and returns the loss.
double mse_loss(std::span<const double> pred, std::span<const double> target,
                std::span<double> grad);

} // namespace deeptrend

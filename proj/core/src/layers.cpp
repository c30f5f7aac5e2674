#include "deeptrend/layers.hpp"

#include <cmath>

namespace deeptrend {

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Activation act)
    : weight(out, in), bias(out, 1), weight_grad(out, in), bias_grad(out, 1), activation(act) {}

DenseLayer DenseLayer::random(std::size_t in, std::size_t out, Activation act, RandomSource& rng) {
    DenseLayer layer(in, out, act);
    layer.weight = init_uniform(out, in, glorot_scale(in, out), rng);
    return layer;
}

void DenseLayer::zero_grad() {
    weight_grad.fill(0.0);
    bias_grad.fill(0.0);
}

void DenseLayer::append_parameters(std::vector<ParameterRef>& out, const std::string& prefix) {
    out.push_back({prefix + "W", &weight, &weight_grad});
    out.push_back({prefix + "b", &bias, &bias_grad});
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    DenseCache cache;
    return dense_forward(layer, x, cache);
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x, DenseCache& cache) {
    if (x.rows() != layer.input_size() || x.cols() == 0) {
        throw ShapeError("dense_forward: layer expects " + std::to_string(layer.input_size()) +
                         " x batch input, got " + x.shape_string());
    }
    cache.input = x;
    cache.pre = matmul(layer.weight, x);
    for (std::size_t r = 0; r < cache.pre.rows(); ++r) {
        for (std::size_t c = 0; c < cache.pre.cols(); ++c) {
            cache.pre(r, c) += layer.bias[r];
        }
    }
    cache.output = elementwise(layer.activation, cache.pre);
    return cache.output;
}

Matrix dense_backward(DenseLayer& layer, const DenseCache& cache, const Matrix& dy) {
    if (!dy.same_shape(cache.output)) {
        throw ShapeError("dense_backward: upstream gradient " + dy.shape_string() +
                         " does not match output " + cache.output.shape_string());
    }
    const std::size_t batch = dy.cols();
    Matrix dpre(dy.rows(), batch);
    for (std::size_t i = 0; i < dy.size(); ++i) {
        dpre[i] = dy[i] * activation_derivative(layer.activation, cache.pre[i], cache.output[i]);
    }
    Matrix dx(layer.input_size(), batch);
    for (std::size_t r = 0; r < layer.output_size(); ++r) {
        for (std::size_t c = 0; c < batch; ++c) {
            const double g = dpre(r, c);
            if (g == 0.0) continue;
            layer.bias_grad[r] += g;
            for (std::size_t k = 0; k < layer.input_size(); ++k) {
                layer.weight_grad(r, k) += g * cache.input(k, c);
                dx(k, c) += layer.weight(r, k) * g;
            }
        }
    }
    return dx;
}

LstmLayer::LstmLayer(std::size_t input_size, std::size_t hidden_size) {
    for (std::size_t g = 0; g < gate_count; ++g) {
        input_weights[g] = Matrix(hidden_size, input_size);
        hidden_weights[g] = Matrix(hidden_size, hidden_size);
        biases[g] = Matrix(hidden_size, 1);
        input_weight_grads[g] = Matrix(hidden_size, input_size);
        hidden_weight_grads[g] = Matrix(hidden_size, hidden_size);
        bias_grads[g] = Matrix(hidden_size, 1);
    }
}

LstmLayer LstmLayer::random(std::size_t input_size, std::size_t hidden_size, RandomSource& rng) {
    LstmLayer layer(input_size, hidden_size);
    const double x_scale = glorot_scale(input_size, hidden_size);
    const double h_scale = glorot_scale(hidden_size, hidden_size);
    for (std::size_t g = 0; g < gate_count; ++g) {
        layer.input_weights[g] = init_uniform(hidden_size, input_size, x_scale, rng);
        layer.hidden_weights[g] = init_uniform(hidden_size, hidden_size, h_scale, rng);
    }
    return layer;
}

void LstmLayer::zero_grad() {
    for (std::size_t g = 0; g < gate_count; ++g) {
        input_weight_grads[g].fill(0.0);
        hidden_weight_grads[g].fill(0.0);
        bias_grads[g].fill(0.0);
    }
}

void LstmLayer::append_parameters(std::vector<ParameterRef>& out, const std::string& prefix) {
    static constexpr std::array<char, gate_count> suffix = {'i', 'f', 'o', 'c'};
    for (std::size_t g = 0; g < gate_count; ++g) {
        out.push_back({prefix + "W_x" + suffix[g], &input_weights[g], &input_weight_grads[g]});
        out.push_back({prefix + "W_h" + suffix[g], &hidden_weights[g], &hidden_weight_grads[g]});
        out.push_back({prefix + "b_" + suffix[g], &biases[g], &bias_grads[g]});
    }
}

void LstmLayer::check_shapes() const {
    const std::size_t hs = hidden_size();
    const std::size_t in = input_size();
    for (std::size_t g = 0; g < gate_count; ++g) {
        const bool ok = input_weights[g].rows() == hs && input_weights[g].cols() == in &&
                        hidden_weights[g].rows() == hs && hidden_weights[g].cols() == hs &&
                        biases[g].rows() == hs && biases[g].cols() == 1 &&
                        input_weight_grads[g].same_shape(input_weights[g]) &&
                        hidden_weight_grads[g].same_shape(hidden_weights[g]) &&
                        bias_grads[g].same_shape(biases[g]);
        if (!ok) {
            throw ShapeError("LSTM gate " + std::to_string(g) + " parameters are inconsistent with "
                             "hidden size " + std::to_string(hs) + " and input size " +
                             std::to_string(in));
        }
    }
}

void lstm_forward(const LstmLayer& layer, const Matrix& sequence, LstmTrace& trace) {
    const std::size_t steps = sequence.rows();
    const std::size_t hs = layer.hidden_size();
    if (steps == 0) {
        throw ShapeError("lstm_forward: empty sequence");
    }
    if (sequence.cols() != layer.input_size()) {
        throw ShapeError("lstm_forward: layer expects " + std::to_string(layer.input_size()) +
                         " features per step, sequence is " + sequence.shape_string());
    }
    trace.inputs = sequence;
    if (trace.hidden.rows() != steps + 1 || trace.hidden.cols() != hs) {
        trace.hidden = Matrix(steps + 1, hs);
        trace.cell = Matrix(steps + 1, hs);
        trace.cell_tanh = Matrix(steps, hs);
        for (auto& g : trace.gates) {
            g = Matrix(steps, hs);
        }
    } else {
        trace.hidden.fill(0.0);
        trace.cell.fill(0.0);
    }

    for (std::size_t t = 0; t < steps; ++t) {
        const auto x = sequence.row(t);
        const auto h_prev = std::as_const(trace.hidden).row(t);
        for (std::size_t g = 0; g < gate_count; ++g) {
            auto z = trace.gates[g].row(t);
            const auto b = layer.biases[g].values();
            std::copy(b.begin(), b.end(), z.begin());
            gemv_add(layer.input_weights[g], x, z);
            gemv_add(layer.hidden_weights[g], h_prev, z);
            const Activation act = g == candidate ? Activation::tanh : Activation::sigmoid;
            for (double& v : z) {
                v = activate(act, v);
            }
        }
        const auto c_prev = std::as_const(trace.cell).row(t);
        auto c = trace.cell.row(t + 1);
        auto h = trace.hidden.row(t + 1);
        auto tc = trace.cell_tanh.row(t);
        const auto i = trace.gates[input_gate].row(t);
        const auto f = trace.gates[forget_gate].row(t);
        const auto o = trace.gates[output_gate].row(t);
        const auto gc = trace.gates[candidate].row(t);
        for (std::size_t j = 0; j < hs; ++j) {
            c[j] = f[j] * c_prev[j] + i[j] * gc[j];
            tc[j] = std::tanh(c[j]);
            h[j] = o[j] * tc[j];
        }
    }
}

LstmTrace lstm_forward(const LstmLayer& layer, const Matrix& sequence) {
    LstmTrace trace;
    lstm_forward(layer, sequence, trace);
    return trace;
}

LstmTrace lstm_forward(const LstmLayer& layer, const std::vector<Matrix>& sequence) {
    if (sequence.empty()) {
        throw ShapeError("lstm_forward: empty sequence");
    }
    const std::size_t d = sequence.front().rows();
    Matrix rows(sequence.size(), d);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        if (sequence[t].rows() != d || sequence[t].cols() != 1) {
            throw ShapeError("lstm_forward: step " + std::to_string(t) + " has shape " +
                             sequence[t].shape_string() + ", expected " + std::to_string(d) +
                             "x1");
        }
        std::copy(sequence[t].values().begin(), sequence[t].values().end(), rows.row(t).begin());
    }
    return lstm_forward(layer, rows);
}

Matrix lstm_backward(LstmLayer& layer, const LstmTrace& trace, std::span<const double> dh_final) {
    layer.check_shapes();
    const std::size_t steps = trace.steps();
    const std::size_t hs = layer.hidden_size();
    const std::size_t in = layer.input_size();
    if (trace.inputs.cols() != in || trace.hidden.cols() != hs || trace.hidden.rows() != steps + 1) {
        throw ShapeError("lstm_backward: trace " + trace.inputs.shape_string() + "/" +
                         trace.hidden.shape_string() + " does not belong to a layer with input " +
                         std::to_string(in) + " and hidden " + std::to_string(hs));
    }
    if (dh_final.size() != hs) {
        throw ShapeError("lstm_backward: dh_final has length " + std::to_string(dh_final.size()) +
                         ", expected " + std::to_string(hs));
    }

    Matrix dx(steps, in);
    std::vector<double> dh(dh_final.begin(), dh_final.end());
    std::vector<double> dh_prev(hs);
    std::vector<double> dc_next(hs, 0.0);
    std::array<std::vector<double>, gate_count> dz;
    for (auto& v : dz) {
        v.assign(hs, 0.0);
    }

    for (std::size_t t = steps; t-- > 0;) {
        const auto i = trace.gates[input_gate].row(t);
        const auto f = trace.gates[forget_gate].row(t);
        const auto o = trace.gates[output_gate].row(t);
        const auto gc = trace.gates[candidate].row(t);
        const auto tc = trace.cell_tanh.row(t);
        const auto c_prev = trace.cell.row(t);
        for (std::size_t j = 0; j < hs; ++j) {
            const double d_o = dh[j] * tc[j];
            const double dc = dc_next[j] + dh[j] * o[j] * (1.0 - tc[j] * tc[j]);
            const double d_f = dc * c_prev[j];
            const double d_i = dc * gc[j];
            const double d_g = dc * i[j];
            dc_next[j] = dc * f[j];
            dz[input_gate][j] = d_i * i[j] * (1.0 - i[j]);
            dz[forget_gate][j] = d_f * f[j] * (1.0 - f[j]);
            dz[output_gate][j] = d_o * o[j] * (1.0 - o[j]);
            dz[candidate][j] = d_g * (1.0 - gc[j] * gc[j]);
        }
        const auto x = trace.inputs.row(t);
        const auto h_prev = trace.hidden.row(t);
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t g = 0; g < gate_count; ++g) {
            outer_add(layer.input_weight_grads[g], dz[g], x);
            outer_add(layer.hidden_weight_grads[g], dz[g], h_prev);
            auto db = layer.bias_grads[g].values();
            for (std::size_t j = 0; j < hs; ++j) {
                db[j] += dz[g][j];
            }
            gemv_transpose_add(layer.input_weights[g], dz[g], dx.row(t));
            gemv_transpose_add(layer.hidden_weights[g], dz[g], dh_prev);
        }
        dh.swap(dh_prev);
    }
    return dx;
}

LossGrad mse_loss(const Matrix& pred, const Matrix& target) {
    if (!pred.same_shape(target)) {
        throw ShapeError("mse_loss: prediction " + pred.shape_string() + " vs target " +
                         target.shape_string());
    }
    LossGrad out{0.0, Matrix(pred.rows(), pred.cols())};
    out.loss = mse_loss(pred.values(), target.values(), out.grad.values());
    return out;
}

double mse_loss(std::span<const double> pred, std::span<const double> target,
                std::span<double> grad) {
    if (pred.size() != target.size() || grad.size() != pred.size() || pred.empty()) {
        throw ShapeError("mse_loss: lengths " + std::to_string(pred.size()) + ", " +
                         std::to_string(target.size()) + ", " + std::to_string(grad.size()));
    }
    const double n = static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double diff = pred[k] - target[k];
        sum += diff * diff;
        grad[k] = 2.0 * diff / n;
    }
    return sum / n;
}

} // namespace deeptrend

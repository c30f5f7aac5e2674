#include "deeptrend/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace deeptrend {

namespace {

constexpr char magic[8] = {'D', 'T', 'R', 'N', 'D', 'C', 'K', 'P'};
constexpr std::uint64_t tag_deeptrend = 1;
constexpr std::uint64_t tag_baseline = 2;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_header(std::ostream& out, std::uint64_t tag) {
    out.write(magic, sizeof magic);
    write_u64(out, checkpoint_version);
    write_u64(out, tag);
}

void read_header(std::istream& in, std::uint64_t expected_tag) {
    char got[8];
    if (!in.read(got, sizeof got) || !std::equal(got, got + 8, magic)) {
        throw CheckpointError("not a checkpoint file (bad magic)");
    }
    const auto version = read_u64(in);
    if (version != checkpoint_version) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto tag = read_u64(in);
    if (tag != expected_tag) {
        throw CheckpointError(expected_tag == tag_deeptrend
                                  ? "checkpoint holds a baseline model, not DeepTrend"
                                  : "checkpoint holds a DeepTrend model, not a baseline");
    }
}

void read_into(std::istream& in, Matrix& target, const std::string& what) {
    Matrix m = read_matrix(in);
    if (!m.same_shape(target)) {
        throw CheckpointError("checkpoint matrix " + what + " is " + m.shape_string() +
                              ", expected " + target.shape_string());
    }
    target = std::move(m);
}

void write_dense(std::ostream& out, const DenseLayer& layer) {
    write_matrix(out, layer.weight);
    write_matrix(out, layer.bias);
}

void read_dense(std::istream& in, DenseLayer& layer, const std::string& what) {
    read_into(in, layer.weight, what + ".W");
    read_into(in, layer.bias, what + ".b");
}

void write_lstm(std::ostream& out, const LstmLayer& layer) {
    for (std::size_t g = 0; g < gate_count; ++g) {
        write_matrix(out, layer.input_weights[g]);
        write_matrix(out, layer.hidden_weights[g]);
        write_matrix(out, layer.biases[g]);
    }
}

void read_lstm(std::istream& in, LstmLayer& layer, const std::string& what) {
    for (std::size_t g = 0; g < gate_count; ++g) {
        const std::string gate = what + ".gate" + std::to_string(g);
        read_into(in, layer.input_weights[g], gate + ".W_x");
        read_into(in, layer.hidden_weights[g], gate + ".W_h");
        read_into(in, layer.biases[g], gate + ".b");
    }
}

std::uint64_t checked_size(std::uint64_t value, const char* what) {
    if (value == 0 || value > (std::uint64_t{1} << 20)) {
        throw CheckpointError(std::string("implausible ") + what + " in checkpoint: " +
                              std::to_string(value));
    }
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
    return in;
}

} // namespace

void write_checkpoint(std::ostream& out, const DeepTrendModel& model) {
    write_header(out, tag_deeptrend);
    write_u64(out, model.shape().window);
    write_u64(out, model.shape().extraction_hidden);
    write_u64(out, model.shape().prediction_hidden);
    write_u64(out, static_cast<std::uint64_t>(model.phase()));
    write_f64(out, model.scaler().mean);
    write_f64(out, model.scaler().std);
    write_dense(out, model.extraction_hidden);
    write_dense(out, model.extraction_output);
    write_lstm(out, model.predictor);
    write_dense(out, model.head);
}

DeepTrendModel read_deeptrend_checkpoint(std::istream& in) {
    read_header(in, tag_deeptrend);
    DeepTrendShape shape;
    shape.window = checked_size(read_u64(in), "window");
    shape.extraction_hidden = checked_size(read_u64(in), "extraction size");
    shape.prediction_hidden = checked_size(read_u64(in), "prediction size");
    const auto phase = read_u64(in);
    if (phase > static_cast<std::uint64_t>(Phase::finetuned)) {
        throw CheckpointError("unknown phase marker " + std::to_string(phase));
    }
    Standardizer scaler;
    scaler.mean = read_f64(in);
    scaler.std = read_f64(in);

    DeepTrendModel model(shape, 0);
    read_dense(in, model.extraction_hidden, "extraction.hidden");
    read_dense(in, model.extraction_output, "extraction.output");
    read_lstm(in, model.predictor, "prediction.lstm");
    read_dense(in, model.head, "prediction.head");
    model.set_scaler(scaler);
    model.restore_phase(static_cast<Phase>(phase));
    return model;
}

void write_checkpoint(std::ostream& out, const BaselinePredictor& predictor) {
    write_header(out, tag_baseline);
    write_u64(out, static_cast<std::uint64_t>(predictor.kind));
    write_u64(out, predictor.window);
    write_f64(out, predictor.scaler.mean);
    write_f64(out, predictor.scaler.std);
    write_u64(out, predictor.trend.weeks_used);
    write_u64(out, static_cast<std::uint64_t>(predictor.trend.anchor.time_since_epoch().count()));
    write_u64(out, predictor.trend.values.size());
    for (double v : predictor.trend.values) {
        write_f64(out, v);
    }
    switch (predictor.kind) {
    case BaselineKind::lstm_original:
    case BaselineKind::lstm_detrended:
        write_u64(out, predictor.lstm->lstm.hidden_size());
        write_lstm(out, predictor.lstm->lstm);
        write_dense(out, predictor.lstm->head);
        write_dense(out, predictor.lstm->output);
        break;
    case BaselineKind::mvlr_original:
    case BaselineKind::mvlr_detrended:
        write_matrix(out, Matrix::column(predictor.linear->coefficients));
        write_f64(out, predictor.linear->intercept);
        break;
    case BaselineKind::seasonal_naive:
        break;
    }
}

BaselinePredictor read_baseline_checkpoint(std::istream& in) {
    read_header(in, tag_baseline);
    BaselinePredictor p;
    const auto kind = read_u64(in);
    if (kind > static_cast<std::uint64_t>(BaselineKind::seasonal_naive)) {
        throw CheckpointError("unknown baseline kind " + std::to_string(kind));
    }
    p.kind = static_cast<BaselineKind>(kind);
    p.window = checked_size(read_u64(in), "window");
    p.scaler.mean = read_f64(in);
    p.scaler.std = read_f64(in);
    p.trend.weeks_used = read_u64(in);
    p.trend.anchor = Timestamp{std::chrono::seconds{static_cast<std::int64_t>(read_u64(in))}};
    const auto slots = read_u64(in);
    if (slots != 0 && slots != slots_per_week) {
        throw CheckpointError("trend profile has " + std::to_string(slots) + " slots");
    }
    p.trend.values.resize(slots);
    for (double& v : p.trend.values) {
        v = read_f64(in);
    }
    switch (p.kind) {
    case BaselineKind::lstm_original:
    case BaselineKind::lstm_detrended: {
        const auto hidden = checked_size(read_u64(in), "hidden size");
        LstmRegressor model;
        model.lstm = LstmLayer(1, hidden);
        model.head = DenseLayer(hidden, hidden, Activation::relu);
        model.output = DenseLayer(hidden, 1, Activation::identity);
        read_lstm(in, model.lstm, "lstm");
        read_dense(in, model.head, "head");
        read_dense(in, model.output, "output");
        p.lstm = std::move(model);
        break;
    }
    case BaselineKind::mvlr_original:
    case BaselineKind::mvlr_detrended: {
        const Matrix coef = read_matrix(in);
        if (coef.rows() != p.window || coef.cols() != 1) {
            throw CheckpointError("linear coefficients are " + coef.shape_string() +
                                  ", expected " + std::to_string(p.window) + "x1");
        }
        LinearRegression lin;
        lin.coefficients.assign(coef.values().begin(), coef.values().end());
        lin.intercept = read_f64(in);
        p.linear = std::move(lin);
        break;
    }
    case BaselineKind::seasonal_naive:
        break;
    }
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const DeepTrendModel& model) {
    auto out = open_out(path);
    write_checkpoint(out, model);
}

void save_checkpoint(const std::filesystem::path& path, const BaselinePredictor& predictor) {
    auto out = open_out(path);
    write_checkpoint(out, predictor);
}

DeepTrendModel load_deeptrend_checkpoint(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_deeptrend_checkpoint(in);
}

BaselinePredictor load_baseline_checkpoint(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_baseline_checkpoint(in);
}

} // namespace deeptrend

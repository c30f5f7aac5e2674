#include "deeptrend/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

namespace deeptrend {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
        if (row.size() != cols_) {
            throw ShapeError("ragged matrix initializer");
        }
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::column(std::span<const double> values) {
    Matrix m(values.size(), 1);
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
}

void Matrix::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

std::string to_string(Activation kind) {
    switch (kind) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

double activate(Activation kind, double x) noexcept {
    switch (kind) {
    case Activation::identity: return x;
    case Activation::sigmoid:
        // Split on sign so exp never overflows.
        if (x >= 0.0) {
            return 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            return e / (1.0 + e);
        }
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double activation_derivative(Activation kind, double pre, double post) noexcept {
    switch (kind) {
    case Activation::identity: return 1.0;
    case Activation::sigmoid: return post * (1.0 - post);
    case Activation::tanh: return 1.0 - post * post;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

Matrix elementwise(Activation kind, const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out[i] = activate(kind, m[i]);
    }
    return out;
}

void gemv_add(const Matrix& w, std::span<const double> x, std::span<double> y) {
    if (w.cols() != x.size() || w.rows() != y.size()) {
        throw ShapeError("gemv: matrix " + w.shape_string() + " with x of length " +
                         std::to_string(x.size()) + " and y of length " +
                         std::to_string(y.size()));
    }
    const std::size_t n = w.cols();
    const std::size_t blocked = n - n % 4;
    const double* row = w.values().data();
    for (std::size_t i = 0; i < w.rows(); ++i, row += n) {
        // Four independent partial sums keep the multiply-add pipeline busy.
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < blocked; j += 4) {
            acc[0] += row[j] * x[j];
            acc[1] += row[j + 1] * x[j + 1];
            acc[2] += row[j + 2] * x[j + 2];
            acc[3] += row[j + 3] * x[j + 3];
        }
        for (std::size_t j = blocked; j < n; ++j) {
            acc[0] += row[j] * x[j];
        }
        y[i] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
    }
}

void gemv_transpose_add(const Matrix& w, std::span<const double> y, std::span<double> x) {
    if (w.cols() != x.size() || w.rows() != y.size()) {
        throw ShapeError("gemv_transpose: matrix " + w.shape_string() + " with y of length " +
                         std::to_string(y.size()) + " and x of length " +
                         std::to_string(x.size()));
    }
    const double* row = w.values().data();
    for (std::size_t i = 0; i < w.rows(); ++i, row += w.cols()) {
        const double yi = y[i];
        if (yi == 0.0) continue;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            x[j] += row[j] * yi;
        }
    }
}

void outer_add(Matrix& g, std::span<const double> a, std::span<const double> b) {
    if (g.rows() != a.size() || g.cols() != b.size()) {
        throw ShapeError("outer: target " + g.shape_string() + " with vectors of length " +
                         std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double* row = g.values().data();
    for (std::size_t i = 0; i < g.rows(); ++i, row += g.cols()) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        for (std::size_t j = 0; j < g.cols(); ++j) {
            row[j] += ai * b[j];
        }
    }
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t RandomSource::next_u64() {
    return engine_();
}

double RandomSource::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RandomSource::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) {
        u1 = uniform01();
    }
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::size_t RandomSource::below(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("RandomSource::below: n must be positive");
    }
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
        draw = next_u64();
    }
    return static_cast<std::size_t>(draw % bound);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, RandomSource& rng) {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("init_uniform: scale must be positive");
    }
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = rng.uniform(-scale, scale);
    }
    return m;
}

double glorot_scale(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void write_u64(std::ostream& out, std::uint64_t value) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffU);
    }
    out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw std::runtime_error("unexpected end of stream");
    }
    std::uint64_t value = 0;
    for (int i = 0; i < 8; ++i) {
        value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    return value;
}

void write_f64(std::ostream& out, double value) {
    write_u64(out, std::bit_cast<std::uint64_t>(value));
}

double read_f64(std::istream& in) {
    return std::bit_cast<double>(read_u64(in));
}

void write_matrix(std::ostream& out, const Matrix& m) {
    write_u64(out, m.rows());
    write_u64(out, m.cols());
    for (double v : m.values()) {
        write_f64(out, v);
    }
}

Matrix read_matrix(std::istream& in) {
    const auto rows = read_u64(in);
    const auto cols = read_u64(in);
    constexpr std::uint64_t max_entries = std::uint64_t{1} << 32;
    if (rows != 0 && cols > max_entries / rows) {
        throw std::runtime_error("matrix header declares an implausible shape");
    }
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (double& v : m.values()) {
        v = read_f64(in);
    }
    return m;
}

} // namespace deeptrend

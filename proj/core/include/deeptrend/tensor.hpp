#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deeptrend {

/// Raised when operand shapes do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles. Column vectors are n x 1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix column(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    void fill(double value);
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

enum class Activation { identity, sigmoid, tanh, relu };

std::string to_string(Activation kind);
Activation activation_from_string(const std::string& name);

double activate(Activation kind, double x) noexcept;

/// Derivative of the activation given both its input and its output.
/// The relu derivative at exactly zero is taken as zero.
double activation_derivative(Activation kind, double pre, double post) noexcept;

Matrix elementwise(Activation kind, const Matrix& m);

// Span kernels used on the hot paths of the layers.

/// y += W x
void gemv_add(const Matrix& w, std::span<const double> x, std::span<double> y);
/// x += W^T y
void gemv_transpose_add(const Matrix& w, std::span<const double> y, std::span<double> x);
/// G += a b^T
void outer_add(Matrix& g, std::span<const double> a, std::span<const double> b);

/// Seeded pseudo-random source with a portable draw sequence.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// Distributions are implemented here rather than through <random>'s
/// distribution classes, which are allowed to differ between standard
/// library implementations.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform01();
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller.
    double normal();
    /// Uniform integer on [0, n).
    std::size_t below(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes several integers into a child seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Entries i.i.d. uniform on [-scale, scale].
Matrix init_uniform(std::size_t rows, std::size_t cols, double scale, RandomSource& rng);

/// sqrt(6 / (fan_in + fan_out))
double glorot_scale(std::size_t fan_in, std::size_t fan_out);

// Binary matrix serialization: u64 rows, u64 cols, then row-major IEEE-754
// doubles, all little-endian.
void write_u64(std::ostream& out, std::uint64_t value);
std::uint64_t read_u64(std::istream& in);
void write_f64(std::ostream& out, double value);
double read_f64(std::istream& in);
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);

} // namespace deeptrend

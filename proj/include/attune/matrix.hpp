#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace attune {

/// Dense row-major matrix of doubles. The only numeric container used by the
/// engine; every reduction (softmax, normalization) is per row.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool is_finite() const noexcept;

    // Exact comparison (used by gating / determinism tests).
    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Numerically stable per-row softmax (max subtraction). Rows of the result
/// sum to 1 within 1e-12 for finite input.
Matrix row_softmax(const Matrix& logits);

/// Scales each row of a non-negative matrix to sum 1. Throws ZeroRowError if
/// a row's sum falls below 1e-300 (a fully suppressed attention row).
Matrix row_normalize(const Matrix& weights);

/// Elementwise base .* exp(exponent). Throws ShapeMismatchError.
Matrix hadamard_exp(const Matrix& base, const Matrix& exponent);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace attune

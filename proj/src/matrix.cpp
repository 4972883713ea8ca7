#include "attune/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "attune/error.hpp"

namespace attune {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m.cols_) {
            throw ShapeMismatchError("ragged initializer rows");
        }
        std::copy(row.begin(), row.end(), m.data_.begin() + r * m.cols_);
        ++r;
    }
    return m;
}

bool Matrix::is_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(c, r) = m(r, c);
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeMismatchError("matmul: inner dimensions disagree");
    }
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const auto brow = b.row(k);
            auto orow = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeMismatchError("matmul_nt: inner dimensions disagree");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += arow[k] * brow[k];
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix row_softmax(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto in = logits.row(r);
        auto o = out.row(r);
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : in) mx = std::max(mx, v);
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            sum += o[c];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

Matrix row_normalize(const Matrix& weights) {
    constexpr double kMinRowSum = 1e-300;
    Matrix out(weights.rows(), weights.cols());
    for (std::size_t r = 0; r < weights.rows(); ++r) {
        const auto in = weights.row(r);
        double sum = 0.0;
        for (double v : in) sum += v;
        if (sum < kMinRowSum) {
            throw ZeroRowError("row " + std::to_string(r) + " sums below 1e-300");
        }
        auto o = out.row(r);
        for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] / sum;
    }
    return out;
}

Matrix hadamard_exp(const Matrix& base, const Matrix& exponent) {
    if (!base.same_shape(exponent)) {
        throw ShapeMismatchError("hadamard_exp: shapes differ");
    }
    Matrix out(base.rows(), base.cols());
    for (std::size_t i = 0; i < base.size(); ++i) {
        out.data()[i] = base.data()[i] * std::exp(exponent.data()[i]);
    }
    return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeMismatchError("max_abs_diff: shapes differ");
    }
    double mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mx = std::max(mx, std::abs(a.data()[i] - b.data()[i]));
    }
    return mx;
}

}  // namespace attune

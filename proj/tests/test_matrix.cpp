#include <cmath>
#include <random>

#include "attune/error.hpp"
#include "attune/matrix.hpp"
#include "doctest.h"

using namespace attune;

TEST_CASE("row_softmax: uniform rows for constant logits") {
    const Matrix in = Matrix::from_rows({{0.0, 0.0, 0.0}});
    const Matrix out = row_softmax(in);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(out(0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("row_softmax: overflow-safe on large logits") {
    const Matrix out = row_softmax(Matrix::from_rows({{1000.0, 1000.0}}));
    CHECK(out(0, 0) == 0.5);
    CHECK(out(0, 1) == 0.5);
}

TEST_CASE("row_softmax: hand-evaluated two-entry row") {
    // e^0 = 1, e^{ln 3} = 3 -> [1/4, 3/4]
    const Matrix out = row_softmax(Matrix::from_rows({{0.0, std::log(3.0)}}));
    CHECK(out(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(out(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("row_softmax: rows sum to 1 and shifts cancel") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 5.0);
    for (const std::size_t n : {2ul, 17ul, 64ul, 512ul}) {
        Matrix logits(n, n);
        for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = dist(rng);
        const Matrix soft = row_softmax(logits);

        Matrix shifted = logits;
        std::uniform_real_distribution<double> shift_dist(-100.0, 100.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double c = shift_dist(rng);
            for (double& v : shifted.row(r)) v += c;
        }
        const Matrix soft_shifted = row_softmax(shifted);

        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            for (double v : soft.row(r)) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        CHECK(max_abs_diff(soft, soft_shifted) <= 1e-12);
    }
}

TEST_CASE("row_normalize: proportional scaling") {
    const Matrix out = row_normalize(Matrix::from_rows({{1.0, 1.0, 2.0}}));
    CHECK(out(0, 0) == 0.25);
    CHECK(out(0, 1) == 0.25);
    CHECK(out(0, 2) == 0.5);
}

TEST_CASE("row_normalize: idempotent") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    Matrix m(8, 13);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    const Matrix once = row_normalize(m);
    const Matrix twice = row_normalize(once);
    CHECK(max_abs_diff(once, twice) <= 1e-12);
}

TEST_CASE("row_normalize: row already normalized stays put") {
    const Matrix in = Matrix::from_rows({{0.25, 0.25, 0.5}});
    const Matrix out = row_normalize(in);
    CHECK(out == in);
}

TEST_CASE("row_normalize: zero row is an error") {
    CHECK_THROWS_AS(row_normalize(Matrix::from_rows({{0.0, 0.0, 0.0}})), ZeroRowError);
}

TEST_CASE("hadamard_exp: zero exponent is the identity") {
    const Matrix base(3, 4, 1.0);
    const Matrix expo(3, 4, 0.0);
    CHECK(hadamard_exp(base, expo) == base);
}

TEST_CASE("hadamard_exp: single entry") {
    const Matrix out = hadamard_exp(Matrix::from_rows({{0.5}}), Matrix::from_rows({{0.5}}));
    CHECK(out(0, 0) == doctest::Approx(0.5 * std::exp(0.5)).epsilon(1e-15));
    CHECK(out(0, 0) == doctest::Approx(0.8244).epsilon(1e-4));
}

TEST_CASE("hadamard_exp: shape mismatch") {
    CHECK_THROWS_AS(hadamard_exp(Matrix(2, 2), Matrix(2, 3)), ShapeMismatchError);
}

TEST_CASE("matmul and transpose basics") {
    const Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const Matrix b = Matrix::from_rows({{5.0, 6.0}, {7.0, 8.0}});
    const Matrix ab = matmul(a, b);
    CHECK(ab(0, 0) == 19.0);
    CHECK(ab(0, 1) == 22.0);
    CHECK(ab(1, 0) == 43.0);
    CHECK(ab(1, 1) == 50.0);
    CHECK(matmul_nt(a, transpose(b)) == ab);
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeMismatchError);
}

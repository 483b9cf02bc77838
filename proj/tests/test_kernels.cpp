#include <doctest.h>

#include <tuple>

#include "synid/kernels.hpp"
#include "synid/rng.hpp"

using namespace synid;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

// Plain ijk reference; accumulation order over k matches the kernels, so
// comparisons are exact.
Matrix matmul_reference(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
    return out;
}

} // namespace

TEST_CASE("matmul matches reference on assorted shapes") {
    Rng rng(42);
    const std::tuple<int, int, int> shapes[] = {{1, 1, 1}, {3, 5, 2}, {17, 8, 9}, {64, 33, 41}};
    for (auto [n, k, m] : shapes) {
        const Matrix a = random_matrix(n, k, rng);
        const Matrix b = random_matrix(k, m, rng);
        Matrix out;
        kernels::matmul(a, b, out);
        CHECK(out == matmul_reference(a, b));
    }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
    Rng rng(7);
    const Matrix a = random_matrix(37, 19, rng);
    const Matrix b = random_matrix(19, 23, rng);
    const Matrix c = random_matrix(41, 19, rng);

    Matrix s, p;
    kernels::matmul_serial(a, b, s);
    kernels::matmul_parallel(a, b, p);
    CHECK(s == p);

    kernels::matmul_nt_serial(a, c, s);
    kernels::matmul_nt_parallel(a, c, p);
    CHECK(s == p);

    kernels::matmul_tn_serial(a, a, s);
    kernels::matmul_tn_parallel(a, a, p);
    CHECK(s == p);
}

TEST_CASE("runtime parallel switch does not change results") {
    Rng rng(11);
    const Matrix a = random_matrix(33, 14, rng);
    const Matrix b = random_matrix(14, 21, rng);
    Matrix with_parallel, without;
    kernels::set_parallel(true);
    kernels::matmul(a, b, with_parallel);
    kernels::set_parallel(false);
    kernels::matmul(a, b, without);
    kernels::set_parallel(true);
    CHECK(with_parallel == without);
}

TEST_CASE("matmul_nt equals matmul with explicit transpose") {
    Rng rng(3);
    const Matrix a = random_matrix(6, 10, rng);
    const Matrix b = random_matrix(8, 10, rng);
    Matrix direct, via_transpose;
    kernels::matmul_nt(a, b, direct);
    kernels::matmul(a, transpose(b), via_transpose);
    CHECK(direct == via_transpose);
}

TEST_CASE("matmul_tn equals matmul with explicit transpose") {
    Rng rng(4);
    const Matrix a = random_matrix(12, 5, rng);
    const Matrix b = random_matrix(12, 7, rng);
    Matrix direct;
    kernels::matmul_tn(a, b, direct);
    // per-element accumulation runs over k in the same order either way
    CHECK(direct == matmul_reference(transpose(a), b));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    const Matrix a(2, 3), b(4, 2);
    Matrix out;
    CHECK_THROWS_AS(kernels::matmul(a, b, out), DimensionError);
}

TEST_CASE("normalize_rows yields unit rows and rejects zero rows") {
    Rng rng(5);
    Matrix m = random_matrix(9, 6, rng);
    Matrix out;
    std::vector<double> norms;
    kernels::normalize_rows(m, out, norms);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) acc += out(i, j) * out(i, j);
        CHECK(std::sqrt(acc) == doctest::Approx(1.0).epsilon(1e-12));
    }

    Matrix zero(2, 4);
    CHECK_THROWS_AS(kernels::normalize_rows(zero, out, norms), DegenerateInputError);
}

TEST_CASE("cosine_matrix is clamped and exact on aligned rows") {
    Matrix a(2, 3);
    a(0, 0) = 2.0; // 2 * e0
    a(1, 1) = 5.0; // 5 * e1
    Matrix cos;
    kernels::cosine_matrix(a, a, cos);
    CHECK(cos(0, 0) == 1.0);
    CHECK(cos(1, 1) == 1.0);
    CHECK(cos(0, 1) == 0.0);
    for (double v : cos.values()) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
}

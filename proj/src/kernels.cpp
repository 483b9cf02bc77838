#include "synid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace synid::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Mini-batch-sized products lose to the fork/join overhead; only spend
// threads when the product has real work in it.
constexpr std::size_t kParallelMinWork = std::size_t{1} << 21;

bool use_parallel(std::size_t rows, std::size_t inner, std::size_t cols) {
    return g_parallel.load(std::memory_order_relaxed) && rows >= 2 &&
           rows * inner * cols >= kParallelMinWork;
}

} // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }
bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

// ---------------------------------------------------------------- matmul

namespace {

inline void matmul_row(const double* a_row, const Matrix& b, double* out_row,
                       std::size_t k_dim, std::size_t m_dim) {
    for (std::size_t j = 0; j < m_dim; ++j) out_row[j] = 0.0;
    for (std::size_t k = 0; k < k_dim; ++k) {
        const double av = a_row[k];
        const double* b_row = b.row(k);
        for (std::size_t j = 0; j < m_dim; ++j) out_row[j] += av * b_row[j];
    }
}

inline void check_matmul(const Matrix& a, const Matrix& b, const Matrix& out,
                         std::size_t ak, std::size_t bk, const char* what) {
    if (ak != bk)
        throw DimensionError(std::string(what) + ": inner dimensions " + std::to_string(ak) +
                             " and " + std::to_string(bk) + " differ");
    (void)out;
}

} // namespace

void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.cols(), b.rows(), "matmul");
    out = Matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        matmul_row(a.row(i), b, out.row(i), a.cols(), b.cols());
}

void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.cols(), b.rows(), "matmul");
    out = Matrix(a.rows(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        matmul_row(a.row(static_cast<std::size_t>(i)), b, out.row(static_cast<std::size_t>(i)),
                   a.cols(), b.cols());
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    if (use_parallel(a.rows(), a.cols(), b.cols()))
        matmul_parallel(a, b, out);
    else
        matmul_serial(a, b, out);
}

// ------------------------------------------------------------- matmul_nt

namespace {

inline double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k] * y[k];
    return acc;
}

} // namespace

void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.cols(), b.cols(), "matmul_nt");
    out = Matrix(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* out_row = out.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j)
            out_row[j] = dot(a.row(i), b.row(j), a.cols());
    }
}

void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.cols(), b.cols(), "matmul_nt");
    out = Matrix(a.rows(), b.rows());
    const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double* out_row = out.row(ii);
        for (std::size_t j = 0; j < b.rows(); ++j)
            out_row[j] = dot(a.row(ii), b.row(j), a.cols());
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    if (use_parallel(a.rows(), a.cols(), b.rows()))
        matmul_nt_parallel(a, b, out);
    else
        matmul_nt_serial(a, b, out);
}

// ------------------------------------------------------------- matmul_tn

void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.rows(), b.rows(), "matmul_tn");
    out = Matrix(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) {
        double* out_row = out.row(i);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double av = a(k, i);
            const double* b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += av * b_row[j];
        }
    }
}

void matmul_tn_parallel(const Matrix& a, const Matrix& b, Matrix& out) {
    check_matmul(a, b, out, a.rows(), b.rows(), "matmul_tn");
    out = Matrix(a.cols(), b.cols());
    const std::int64_t n = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        double* out_row = out.row(ii);
        for (std::size_t k = 0; k < a.rows(); ++k) {
            const double av = a(k, ii);
            const double* b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += av * b_row[j];
        }
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (use_parallel(a.cols(), a.rows(), b.cols()))
        matmul_tn_parallel(a, b, out);
    else
        matmul_tn_serial(a, b, out);
}

// ------------------------------------------------------------ norms etc.

void row_norms(const Matrix& m, std::vector<double>& norms) {
    norms.assign(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        norms[i] = std::sqrt(dot(m.row(i), m.row(i), m.cols()));
}

void normalize_rows(const Matrix& m, Matrix& out, std::vector<double>& norms) {
    row_norms(m, norms);
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (norms[i] == 0.0)
            throw DegenerateInputError("normalize_rows: row " + std::to_string(i) +
                                       " has zero norm");
    out = Matrix(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double inv = 1.0 / norms[i];
        const double* src = m.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j] * inv;
    }
}

void cosine_matrix(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols() != b.cols())
        throw DimensionError("cosine_matrix: dimension mismatch");
    Matrix an, bn;
    std::vector<double> tmp;
    normalize_rows(a, an, tmp);
    normalize_rows(b, bn, tmp);
    matmul_nt(an, bn, out);
    for (double& v : out.values()) v = std::clamp(v, -1.0, 1.0);
}

} // namespace synid::kernels

#pragma once

#include "synid/matrix.hpp"

namespace synid::kernels {

// Parallel inner loops are spread over independent output rows only; the
// per-element accumulation order is identical to the serial reference, so
// serial and parallel variants produce bit-identical results and the runtime
// switch never affects any output file.
void set_parallel(bool enabled);
bool parallel_enabled();

// out = a * b                 (N x K) * (K x M) -> (N x M)
void matmul_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul(const Matrix& a, const Matrix& b, Matrix& out);

// out = a * b^T               (N x K) * (M x K) -> (N x M)
void matmul_nt_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);

// out = a^T * b               (K x N) * (K x M) -> (N x M)
void matmul_tn_serial(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_parallel(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

// Row-wise Euclidean norms.
void row_norms(const Matrix& m, std::vector<double>& norms);

// out(i,j) = m(i,j) / norms[i]; throws DegenerateInputError on a zero norm.
void normalize_rows(const Matrix& m, Matrix& out, std::vector<double>& norms);

// Cosine-similarity matrix between rows of a and rows of b, clamped to
// [-1, 1]. Rows with zero norm are rejected.
void cosine_matrix(const Matrix& a, const Matrix& b, Matrix& out);

} // namespace synid::kernels

#include "synid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synid/error.hpp"
#include "synid/kernels.hpp"

namespace synid {

void CosFaceConfig::validate() const {
    if (!(margin >= 0.0 && margin < 1.0))
        throw ConfigError("cosface: margin must be in [0, 1)");
    if (!(scale > 0.0)) throw ConfigError("cosface: scale must be positive");
}

LossOutput cosface_loss(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                        const ClassificationHead& head, const CosFaceConfig& cfg) {
    cfg.validate();
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    const std::size_t c = head.num_classes();
    if (n < 1) throw DimensionError("cosface: empty batch");
    if (c < 2) throw ConfigError("cosface: needs at least 2 classes");
    if (head.embedding_dim() != d)
        throw DimensionError("cosface: head expects d=" + std::to_string(head.embedding_dim()) +
                             ", embeddings have d=" + std::to_string(d));
    if (labels.size() != n) throw DimensionError("cosface: labels/batch size mismatch");
    for (std::size_t v : labels)
        if (v >= c) throw ProtocolError("cosface: label " + std::to_string(v) +
                                        " out of range [0, " + std::to_string(c) + ")");

    // Unit-normalize embedding rows and head columns.
    Matrix f_hat;
    std::vector<double> f_norm;
    kernels::normalize_rows(embeddings, f_hat, f_norm);

    std::vector<double> w_norm(c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += head.weight(k, j) * head.weight(k, j);
        w_norm[j] = std::sqrt(acc);
        if (w_norm[j] == 0.0)
            throw DegenerateInputError("cosface: head column " + std::to_string(j) +
                                       " has zero norm");
    }
    Matrix w_hat(d, c);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < c; ++j) w_hat(k, j) = head.weight(k, j) / w_norm[j];

    Matrix cos; // N x C
    kernels::matmul(f_hat, w_hat, cos);

    const double s = cfg.scale;
    const double m = cfg.margin;

    // Softmax over margin-shifted scaled logits; G holds dL/dcos.
    double total = 0.0;
    Matrix g(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = labels[i];
        const double* cos_row = cos.row(i);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) {
            const double z = s * (cos_row[j] - (j == y ? m : 0.0));
            max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        double* g_row = g.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            const double z = s * (cos_row[j] - (j == y ? m : 0.0));
            g_row[j] = std::exp(z - max_logit);
            denom += g_row[j];
        }
        const double target_z = s * (cos_row[y] - m);
        total += -(target_z - max_logit) + std::log(denom);
        const double scale_i = s / (static_cast<double>(n) * denom);
        for (std::size_t j = 0; j < c; ++j) g_row[j] *= scale_i;
        g_row[y] -= s / static_cast<double>(n);
    }

    LossOutput out;
    out.value = total / static_cast<double>(n);

    // dcos_ij/dF_i = (w_hat_j - cos_ij * f_hat_i) / |F_i|
    Matrix gw; // N x d: G * w_hat^T
    kernels::matmul_nt(g, w_hat, gw);
    std::vector<double> row_gc(n, 0.0); // sum_j g_ij cos_ij
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* g_row = g.row(i);
        const double* cos_row = cos.row(i);
        for (std::size_t j = 0; j < c; ++j) acc += g_row[j] * cos_row[j];
        row_gc[i] = acc;
    }
    out.grad_embeddings = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / f_norm[i];
        const double* gw_row = gw.row(i);
        const double* fh_row = f_hat.row(i);
        double* dst = out.grad_embeddings.row(i);
        for (std::size_t k = 0; k < d; ++k) dst[k] = (gw_row[k] - row_gc[i] * fh_row[k]) * inv;
    }

    // dcos_ij/dW_j = (f_hat_i - cos_ij * w_hat_j) / |W_j|
    Matrix fg; // d x C: f_hat^T * G
    kernels::matmul_tn(f_hat, g, fg);
    std::vector<double> col_gc(c, 0.0); // sum_i g_ij cos_ij
    for (std::size_t i = 0; i < n; ++i) {
        const double* g_row = g.row(i);
        const double* cos_row = cos.row(i);
        for (std::size_t j = 0; j < c; ++j) col_gc[j] += g_row[j] * cos_row[j];
    }
    out.grad_head = Matrix(d, c);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < c; ++j)
            out.grad_head(k, j) = (fg(k, j) - col_gc[j] * w_hat(k, j)) / w_norm[j];

    return out;
}

LossOutput kt_loss(const Matrix& student_embeddings, const Matrix& teacher_embeddings) {
    if (!student_embeddings.same_shape(teacher_embeddings))
        throw DimensionError("kt_loss: student and teacher embedding shapes differ");
    const std::size_t n = student_embeddings.rows();
    const std::size_t d = student_embeddings.cols();
    if (n < 1) throw DimensionError("kt_loss: empty batch");

    LossOutput out;
    out.grad_embeddings = Matrix(n, d);
    const double inv_nd = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
    double total = 0.0;
    for (std::size_t i = 0; i < student_embeddings.size(); ++i) {
        const double diff = student_embeddings.values()[i] - teacher_embeddings.values()[i];
        total += diff * diff;
        out.grad_embeddings.values()[i] = 2.0 * diff * inv_nd;
    }
    out.value = total * inv_nd;
    return out;
}

LossOutput combined_loss(const Matrix& student_embeddings,
                         const std::vector<std::size_t>& labels,
                         const ClassificationHead& head, const Matrix& teacher_embeddings,
                         double alpha, const CosFaceConfig& cfg) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("combined_loss: alpha must be in [0, 1]");
    const LossOutput cf = cosface_loss(student_embeddings, labels, head, cfg);
    const LossOutput kt = kt_loss(student_embeddings, teacher_embeddings);

    LossOutput out;
    out.value = alpha * cf.value + (1.0 - alpha) * kt.value;
    out.grad_embeddings = Matrix(student_embeddings.rows(), student_embeddings.cols());
    for (std::size_t i = 0; i < out.grad_embeddings.size(); ++i)
        out.grad_embeddings.values()[i] = alpha * cf.grad_embeddings.values()[i] +
                                          (1.0 - alpha) * kt.grad_embeddings.values()[i];
    out.grad_head = Matrix(cf.grad_head.rows(), cf.grad_head.cols());
    for (std::size_t i = 0; i < out.grad_head.size(); ++i)
        out.grad_head.values()[i] = alpha * cf.grad_head.values()[i];
    return out;
}

} // namespace synid

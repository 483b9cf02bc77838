#pragma once

#include <cstddef>
#include <vector>

#include "synid/matrix.hpp"
#include "synid/model.hpp"

namespace synid {

struct CosFaceConfig {
    double margin = 0.35;
    double scale = 64.0;
    void validate() const;
};

// Scalar loss plus analytic gradients. Gradients are with respect to the raw
// (pre-normalization) embeddings and head weights; normalization happens
// inside the loss. grad_head is empty for losses that do not touch the head.
struct LossOutput {
    double value = 0.0;
    Matrix grad_embeddings; // N x d
    Matrix grad_head;       // d x C, empty when absent
};

// Margin-penalty softmax on cosine logits. For sample i with class y:
//   loss_i = -log( e^{s(cos_y - m)} / (e^{s(cos_y - m)} + sum_{j!=y} e^{s cos_j}) )
// where cos_j is the cosine between the embedding row and head column j.
// Logits are max-shifted before exponentiation; s = 64 overflows otherwise.
LossOutput cosface_loss(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                        const ClassificationHead& head, const CosFaceConfig& cfg);

// Embedding-level mean squared error against a frozen teacher:
//   value = (1/N) sum_i (1/d) sum_j (S_ij - P_ij)^2
// The teacher side is treated as constant.
LossOutput kt_loss(const Matrix& student_embeddings, const Matrix& teacher_embeddings);

// alpha * cosface + (1 - alpha) * kt, gradients combined with the same
// weights.
LossOutput combined_loss(const Matrix& student_embeddings,
                         const std::vector<std::size_t>& labels,
                         const ClassificationHead& head, const Matrix& teacher_embeddings,
                         double alpha, const CosFaceConfig& cfg);

} // namespace synid

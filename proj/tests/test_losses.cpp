#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "synid/losses.hpp"
#include "synid/rng.hpp"

using namespace synid;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

ClassificationHead random_head(std::size_t d, std::size_t c, std::uint64_t seed) {
    return init_head(d, c, seed);
}

// Scalar reference for one sample: plain softmax cross-entropy over the
// margin-shifted scaled cosines, written without the stabilized code path.
double cosface_scalar_reference(const std::vector<double>& cosines, std::size_t label,
                                double margin, double scale) {
    double denom = 0.0;
    for (std::size_t j = 0; j < cosines.size(); ++j) {
        const double z = scale * (cosines[j] - (j == label ? margin : 0.0));
        denom += std::exp(z);
    }
    const double target = scale * (cosines[label] - margin);
    return -std::log(std::exp(target) / denom);
}

// Independent cross-entropy oracle on scaled cosine logits (m = 0 case).
double softmax_ce_oracle(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                         const ClassificationHead& head, double scale) {
    const std::size_t n = embeddings.rows();
    const std::size_t d = embeddings.cols();
    const std::size_t c = head.num_classes();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> logits(c);
        double emb_norm = 0.0;
        for (std::size_t k = 0; k < d; ++k) emb_norm += embeddings(i, k) * embeddings(i, k);
        emb_norm = std::sqrt(emb_norm);
        for (std::size_t j = 0; j < c; ++j) {
            double col_norm = 0.0, dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                col_norm += head.weight(k, j) * head.weight(k, j);
                dot += embeddings(i, k) * head.weight(k, j);
            }
            logits[j] = scale * dot / (emb_norm * std::sqrt(col_norm));
        }
        double max_logit = logits[0];
        for (double z : logits) max_logit = std::max(max_logit, z);
        double denom = 0.0;
        for (double z : logits) denom += std::exp(z - max_logit);
        total += -(logits[labels[i]] - max_logit) + std::log(denom);
    }
    return total / static_cast<double>(n);
}

} // namespace

TEST_CASE("cosface with uniform logits returns ln C") {
    // one sample orthogonal to all four class centers
    Matrix f(1, 5);
    f(0, 0) = 1.0;
    ClassificationHead head;
    head.weight = Matrix(5, 4);
    for (std::size_t j = 0; j < 4; ++j) head.weight(j + 1, j) = 1.0;

    const LossOutput out = cosface_loss(f, {0}, head, {0.0, 1.0});
    CHECK(out.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("cosface matches an independent scalar evaluation") {
    Matrix f(1, 2);
    f(0, 0) = 1.0;
    ClassificationHead head;
    head.weight = Matrix(2, 2);
    head.weight(0, 0) = 1.0;
    head.weight(1, 1) = 1.0;

    const LossOutput out = cosface_loss(f, {0}, head, {0.35, 64.0});
    const double expected = cosface_scalar_reference({1.0, 0.0}, 0, 0.35, 64.0);
    CHECK(out.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cosface gradients match central finite differences") {
    Rng rng(100);
    Matrix f = random_matrix(4, 3, rng);
    ClassificationHead head = random_head(3, 5, 101);
    const std::vector<std::size_t> labels = {0, 2, 4, 1};
    const CosFaceConfig cfg{0.35, 64.0};

    const LossOutput base = cosface_loss(f, labels, head, cfg);
    const double eps = 1e-6;
    double max_err = 0.0;
    auto check_param = [&](double* p, double analytic) {
        const double saved = *p;
        *p = saved + eps;
        const double plus = cosface_loss(f, labels, head, cfg).value;
        *p = saved - eps;
        const double minus = cosface_loss(f, labels, head, cfg).value;
        *p = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double err =
            std::fabs(analytic - numeric) / std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
        max_err = std::max(max_err, err);
    };
    for (std::size_t i = 0; i < f.size(); ++i)
        check_param(&f.values()[i], base.grad_embeddings.values()[i]);
    for (std::size_t i = 0; i < head.weight.size(); ++i)
        check_param(&head.weight.values()[i], base.grad_head.values()[i]);
    CHECK(max_err < 1e-4);
}

TEST_CASE("cosface is invariant to positive rescaling of rows and columns") {
    Rng rng(55);
    Matrix f = random_matrix(3, 4, rng);
    ClassificationHead head = random_head(4, 4, 56);
    const std::vector<std::size_t> labels = {1, 3, 0};
    const CosFaceConfig cfg{0.2, 16.0};
    const double base = cosface_loss(f, labels, head, cfg).value;

    Matrix f2 = f;
    for (std::size_t j = 0; j < f2.cols(); ++j) f2(1, j) *= 37.5;
    CHECK(cosface_loss(f2, labels, head, cfg).value == doctest::Approx(base).epsilon(1e-9));

    ClassificationHead head2 = head;
    for (std::size_t k = 0; k < head2.weight.rows(); ++k) head2.weight(k, 2) *= 0.003;
    CHECK(cosface_loss(f, labels, head2, cfg).value == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("cosface with zero margin equals softmax cross-entropy on cosine logits") {
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix f = random_matrix(6, 4, rng);
        ClassificationHead head = random_head(4, 5, 200 + trial);
        std::vector<std::size_t> labels;
        for (std::size_t i = 0; i < 6; ++i) labels.push_back(rng.below(5));
        const CosFaceConfig cfg{0.0, 64.0};
        const double oracle = softmax_ce_oracle(f, labels, head, 64.0);
        CHECK(cosface_loss(f, labels, head, cfg).value ==
              doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("increasing the margin never decreases the cosface value") {
    Rng rng(88);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix f = random_matrix(5, 3, rng);
        ClassificationHead head = random_head(3, 4, 300 + trial);
        std::vector<std::size_t> labels;
        for (std::size_t i = 0; i < 5; ++i) labels.push_back(rng.below(4));
        double previous = -1.0;
        for (double margin : {0.0, 0.1, 0.2, 0.35, 0.5, 0.8}) {
            const double value = cosface_loss(f, labels, head, {margin, 64.0}).value;
            CHECK(value >= previous);
            previous = value;
        }
    }
}

TEST_CASE("cosface rejects degenerate inputs and bad labels") {
    Matrix f(2, 3);
    f(0, 0) = 1.0; // second row is all-zero
    ClassificationHead head = random_head(3, 3, 1);
    CHECK_THROWS_AS(cosface_loss(f, {0, 1}, head, {}), DegenerateInputError);

    f(1, 1) = 1.0;
    ClassificationHead zero_col = head;
    for (std::size_t k = 0; k < 3; ++k) zero_col.weight(k, 1) = 0.0;
    CHECK_THROWS_AS(cosface_loss(f, {0, 1}, zero_col, {}), DegenerateInputError);

    CHECK_THROWS_AS(cosface_loss(f, {0, 3}, head, {}), ProtocolError);
}

TEST_CASE("kt loss is zero on identical embeddings") {
    Rng rng(9);
    const Matrix f = random_matrix(4, 6, rng);
    const LossOutput out = kt_loss(f, f);
    CHECK(out.value == 0.0);
    for (double v : out.grad_embeddings.values()) CHECK(v == 0.0);
    CHECK(out.grad_head.empty());
}

TEST_CASE("kt loss hand example: N=1 d=2") {
    Matrix s(1, 2), p(1, 2);
    s(0, 0) = 1.0;
    const LossOutput out = kt_loss(s, p);
    CHECK(out.value == 0.5);
    CHECK(out.grad_embeddings(0, 0) == 1.0); // 2 * (1 - 0) / (1 * 2)
    CHECK(out.grad_embeddings(0, 1) == 0.0);
}

TEST_CASE("kt loss is invariant to batch duplication") {
    Rng rng(10);
    const Matrix s = random_matrix(3, 4, rng);
    const Matrix p = random_matrix(3, 4, rng);
    Matrix s2(6, 4), p2(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            s2(i, j) = s(i % 3, j);
            p2(i, j) = p(i % 3, j);
        }
    CHECK(kt_loss(s2, p2).value == doctest::Approx(kt_loss(s, p).value).epsilon(1e-14));
}

TEST_CASE("kt value is symmetric and gradient antisymmetric under swap") {
    Rng rng(11);
    const Matrix s = random_matrix(4, 5, rng);
    const Matrix p = random_matrix(4, 5, rng);
    const LossOutput forward_out = kt_loss(s, p);
    const LossOutput swapped = kt_loss(p, s);
    CHECK(forward_out.value == swapped.value);
    for (std::size_t i = 0; i < forward_out.grad_embeddings.size(); ++i)
        CHECK(forward_out.grad_embeddings.values()[i] == -swapped.grad_embeddings.values()[i]);
}

TEST_CASE("kt rejects mismatched shapes") {
    CHECK_THROWS_AS(kt_loss(Matrix(2, 3), Matrix(2, 4)), DimensionError);
}

TEST_CASE("combined loss endpoints reproduce the constituents exactly") {
    Rng rng(12);
    Matrix f = random_matrix(4, 3, rng);
    Matrix teacher = random_matrix(4, 3, rng);
    ClassificationHead head = random_head(3, 4, 13);
    const std::vector<std::size_t> labels = {0, 1, 2, 3};
    const CosFaceConfig cfg{0.35, 64.0};

    const LossOutput cf = cosface_loss(f, labels, head, cfg);
    const LossOutput kt = kt_loss(f, teacher);

    const LossOutput at_one = combined_loss(f, labels, head, teacher, 1.0, cfg);
    CHECK(at_one.value == cf.value);
    CHECK(at_one.grad_embeddings == cf.grad_embeddings);
    CHECK(at_one.grad_head == cf.grad_head);

    const LossOutput at_zero = combined_loss(f, labels, head, teacher, 0.0, cfg);
    CHECK(at_zero.value == kt.value);
    CHECK(at_zero.grad_embeddings == kt.grad_embeddings);
    for (double v : at_zero.grad_head.values()) CHECK(v == 0.0);
}

TEST_CASE("combined loss recomposes at alpha = 1e-5") {
    Rng rng(14);
    Matrix f = random_matrix(5, 4, rng);
    Matrix teacher = random_matrix(5, 4, rng);
    ClassificationHead head = random_head(4, 6, 15);
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < 5; ++i) labels.push_back(rng.below(6));
    const CosFaceConfig cfg{0.35, 64.0};

    const double alpha = 1e-5;
    const double expected = alpha * cosface_loss(f, labels, head, cfg).value +
                            (1.0 - alpha) * kt_loss(f, teacher).value;
    const double got = combined_loss(f, labels, head, teacher, alpha, cfg).value;
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("combined loss is affine in alpha") {
    Rng rng(16);
    Matrix f = random_matrix(3, 4, rng);
    Matrix teacher = random_matrix(3, 4, rng);
    ClassificationHead head = random_head(4, 3, 17);
    const std::vector<std::size_t> labels = {2, 0, 1};
    const CosFaceConfig cfg{0.35, 64.0};

    const double v0 = combined_loss(f, labels, head, teacher, 0.0, cfg).value;
    const double v1 = combined_loss(f, labels, head, teacher, 1.0, cfg).value;
    for (double alpha : {0.125, 0.5, 0.875})
        CHECK(combined_loss(f, labels, head, teacher, alpha, cfg).value ==
              doctest::Approx(alpha * v1 + (1.0 - alpha) * v0).epsilon(1e-12));
}

TEST_CASE("combined loss validates alpha") {
    Matrix f(2, 3, 0.5), teacher(2, 3, 0.25);
    ClassificationHead head = random_head(3, 2, 18);
    CHECK_THROWS_AS(combined_loss(f, {0, 1}, head, teacher, -0.1, {}), ConfigError);
    CHECK_THROWS_AS(combined_loss(f, {0, 1}, head, teacher, 1.5, {}), ConfigError);
}

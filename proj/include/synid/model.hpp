#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "synid/matrix.hpp"

namespace synid {

enum class Activation { relu, tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected embedding network configuration. The activation is applied
// after every layer, including the embedding layer.
struct ModelConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t embedding_dim = 0;
    Activation activation = Activation::relu;
    std::uint64_t init_seed = 0;

    void validate() const;
    // (in, out) per layer, chaining input_dim through hidden_dims to
    // embedding_dim.
    std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const;
};

struct EmbeddingModel {
    ModelConfig config;
    std::vector<Matrix> weights;            // layer l: in x out
    std::vector<std::vector<double>> biases; // layer l: out

    std::size_t num_layers() const { return weights.size(); }
    std::size_t parameter_count() const;
    // FNV-1a over the raw parameter bytes; used to assert teacher
    // immutability during knowledge-transfer training.
    std::uint64_t checksum() const;
};

// Class-center matrix of a margin-softmax head: column j, unit-normalized,
// is the center of class j.
struct ClassificationHead {
    Matrix weight; // d x C

    std::size_t embedding_dim() const { return weight.rows(); }
    std::size_t num_classes() const { return weight.cols(); }
    void validate() const;
};

// Gradients shape-matched to EmbeddingModel, plus the head gradient when a
// classification head participates in the loss (empty otherwise).
struct GradientBundle {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    Matrix head_grad;

    bool has_head_grad() const { return !head_grad.empty(); }
};

GradientBundle zero_gradients(const EmbeddingModel& model, const ClassificationHead* head);

// Per-layer state captured by forward() and consumed by backward(). The
// cache is tied to the exact model object and batch size it was built from.
struct ForwardCache {
    const EmbeddingModel* model = nullptr;
    std::size_t batch_rows = 0;
    std::vector<Matrix> layer_inputs;     // input to layer l (N x in)
    std::vector<Matrix> pre_activations;  // N x out, before the activation
};

// Deterministic init: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// biases zero.
EmbeddingModel init_model(const ModelConfig& cfg);
ClassificationHead init_head(std::size_t embedding_dim, std::size_t num_classes,
                             std::uint64_t seed);

Matrix forward(const EmbeddingModel& model, const Matrix& batch, ForwardCache& cache);
Matrix forward(const EmbeddingModel& model, const Matrix& batch);

// Gradients of a scalar loss whose embedding gradient is `upstream`
// (dL/d embeddings, N x d) with respect to every model parameter.
GradientBundle backward(const EmbeddingModel& model, const ForwardCache& cache,
                        const Matrix& upstream);

// Analytic-vs-central-difference audit. The closure evaluates the loss and
// its analytic gradients at the model's (and head's) current parameters.
// Returns the max over all parameters of
//   |analytic - numeric| / max(1, |analytic|, |numeric|).
struct LossEval {
    double value = 0.0;
    GradientBundle grads;
};

double grad_check(EmbeddingModel& model, ClassificationHead* head,
                  const std::function<LossEval()>& loss_closure, double eps);

// Text persistence with a magic header; bit-exact round trip
// (shortest round-trip decimals). The head block is optional.
void save_model(const EmbeddingModel& model, const ClassificationHead* head,
                const std::string& path);
struct LoadedModel {
    EmbeddingModel model;
    bool has_head = false;
    ClassificationHead head;
};
LoadedModel load_model(const std::string& path);

} // namespace synid

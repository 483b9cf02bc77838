#include "synid/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "synid/error.hpp"
#include "synid/numio.hpp"
#include "synid/rng.hpp"

namespace synid {

void OptimizerConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("optimizer: learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("optimizer: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("optimizer: weight_decay must be >= 0");
    if (batch_size < 1) throw ConfigError("optimizer: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("optimizer: epochs must be >= 1");
    if (augment_sigma < 0.0) throw ConfigError("optimizer: augment_sigma must be >= 0");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
        if (milestones[i] >= epochs)
            throw ConfigError("optimizer: milestones must be < epochs");
        if (i > 0 && milestones[i] <= milestones[i - 1])
            throw ConfigError("optimizer: milestones must be strictly increasing");
    }
}

Strategy Strategy::cls(CosFaceConfig cfg) {
    Strategy s;
    s.kind = StrategyKind::CLS;
    s.cosface = cfg;
    return s;
}

Strategy Strategy::kt() {
    Strategy s;
    s.kind = StrategyKind::KT;
    return s;
}

Strategy Strategy::cl(double alpha, CosFaceConfig cfg) {
    Strategy s;
    s.kind = StrategyKind::CL;
    s.alpha = alpha;
    s.cosface = cfg;
    return s;
}

std::string Strategy::name() const {
    switch (kind) {
        case StrategyKind::CLS: return "CLS";
        case StrategyKind::KT: return "KT";
        case StrategyKind::CL: return "CL";
    }
    return "?";
}

void Strategy::validate() const {
    if (kind == StrategyKind::CL && !(alpha >= 0.0 && alpha <= 1.0))
        throw ConfigError("strategy: CL alpha must be in [0, 1]");
    if (kind != StrategyKind::KT) cosface.validate();
}

double lr_at(std::size_t epoch, const OptimizerConfig& opt) {
    if (epoch >= opt.epochs) throw ConfigError("lr_at: epoch out of range");
    double lr = opt.learning_rate;
    for (std::size_t m : opt.milestones)
        if (m <= epoch) lr /= 10.0;
    return lr;
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              std::vector<double>& velocity, double lr, double momentum,
              double weight_decay) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw DimensionError("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(grads[i]))
            throw NumericError("sgd_step: non-finite gradient at index " + std::to_string(i));
        velocity[i] = momentum * velocity[i] + (grads[i] + weight_decay * params[i]);
        params[i] -= lr * velocity[i];
    }
}

void sgd_step(Matrix& params, const Matrix& grads, Matrix& velocity, double lr,
              double momentum, double weight_decay) {
    if (!params.same_shape(grads) || !params.same_shape(velocity))
        throw DimensionError("sgd_step: shape mismatch");
    sgd_step(params.values(), grads.values(), velocity.values(), lr, momentum, weight_decay);
}

namespace {

struct Velocities {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    Matrix head;
};

Velocities make_velocities(const EmbeddingModel& model, const ClassificationHead* head) {
    Velocities v;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        v.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
        v.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    if (head) v.head = Matrix(head->weight.rows(), head->weight.cols());
    return v;
}

} // namespace

TrainReport train(EmbeddingModel& model, ClassificationHead* head, const LabeledDataset& data,
                  const Strategy& strategy, const OptimizerConfig& opt,
                  const EmbeddingModel* teacher) {
    const auto t_start = std::chrono::steady_clock::now();
    opt.validate();
    strategy.validate();
    data.validate();

    if (data.input_dim() != model.config.input_dim)
        throw DimensionError("train: dataset dim does not match model input dim");
    if (strategy.needs_teacher()) {
        if (!teacher)
            throw ConfigError("train: strategy " + strategy.name() + " requires a teacher model");
        if (teacher->config.input_dim != model.config.input_dim)
            throw DimensionError("train: teacher input dim does not match data");
        if (teacher->config.embedding_dim != model.config.embedding_dim)
            throw DimensionError("train: teacher embedding dim does not match student");
    }
    if (strategy.trains_head()) {
        if (!head) throw ConfigError("train: strategy " + strategy.name() + " requires a head");
        if (head->embedding_dim() != model.config.embedding_dim)
            throw DimensionError("train: head embedding dim does not match model");
        if (head->num_classes() != data.num_classes)
            throw ConfigError("train: head has " + std::to_string(head->num_classes()) +
                              " classes, dataset has " + std::to_string(data.num_classes));
    }

    Rng rng(opt.seed);
    Velocities vel = make_velocities(model, strategy.trains_head() ? head : nullptr);
    const std::size_t m_total = data.size();

    std::vector<std::size_t> order(m_total);
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const double lr = lr_at(epoch, opt);
        rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < m_total; start += opt.batch_size) {
            const std::size_t count = std::min(opt.batch_size, m_total - start);
            Matrix batch(count, data.input_dim());
            std::vector<std::size_t> labels(count);
            for (std::size_t b = 0; b < count; ++b) {
                const std::size_t idx = order[start + b];
                const double* src = data.samples.row(idx);
                std::copy(src, src + data.input_dim(), batch.row(b));
                labels[b] = data.labels[idx];
            }
            if (opt.augment_sigma > 0.0)
                for (double& v : batch.values()) v += opt.augment_sigma * rng.gauss();

            ForwardCache cache;
            const Matrix embeddings = forward(model, batch, cache);

            LossOutput loss;
            switch (strategy.kind) {
                case StrategyKind::CLS:
                    loss = cosface_loss(embeddings, labels, *head, strategy.cosface);
                    break;
                case StrategyKind::KT:
                    loss = kt_loss(embeddings, forward(*teacher, batch));
                    break;
                case StrategyKind::CL:
                    loss = combined_loss(embeddings, labels, *head, forward(*teacher, batch),
                                         strategy.alpha, strategy.cosface);
                    break;
            }
            loss_sum += loss.value * static_cast<double>(count);

            const GradientBundle grads = backward(model, cache, loss.grad_embeddings);
            for (std::size_t l = 0; l < model.num_layers(); ++l) {
                sgd_step(model.weights[l], grads.weight_grads[l], vel.weights[l], lr,
                         opt.momentum, opt.weight_decay);
                sgd_step(model.biases[l], grads.bias_grads[l], vel.biases[l], lr, opt.momentum,
                         opt.weight_decay);
            }
            if (strategy.trains_head() && loss.grad_head.size() > 0)
                sgd_step(head->weight, loss.grad_head, vel.head, lr, opt.momentum,
                         opt.weight_decay);
        }

        report.epoch_mean_loss.push_back(loss_sum / static_cast<double>(m_total));
        report.epoch_lr.push_back(lr);
        ++report.epochs_completed;
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

void save_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "epoch,lr,mean_loss\n";
    for (std::size_t e = 0; e < report.epochs_completed; ++e)
        os << e << ',' << format_double(report.epoch_lr[e]) << ','
           << format_double(report.epoch_mean_loss[e]) << '\n';
    if (!os) throw IoError("failed writing train report '" + path + "'");
}

} // namespace synid

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "synid/dataset.hpp"
#include "synid/losses.hpp"
#include "synid/model.hpp"

namespace synid {

struct OptimizerConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t batch_size = 64; // scaled down from the paper-scale 512
    std::size_t epochs = 64;
    std::vector<std::size_t> milestones = {40, 48, 52}; // lr /= 10 at each
    std::uint64_t seed = 0;
    // Feature-space stand-in for image augmentation; off by default so the
    // optimization path stays exactly reproducible.
    double augment_sigma = 0.0;

    void validate() const;
};

enum class StrategyKind { CLS, KT, CL };

struct Strategy {
    StrategyKind kind = StrategyKind::CLS;
    double alpha = 1e-5; // CL only
    CosFaceConfig cosface;

    static Strategy cls(CosFaceConfig cfg = {});
    static Strategy kt();
    static Strategy cl(double alpha, CosFaceConfig cfg = {});

    bool needs_teacher() const { return kind != StrategyKind::CLS; }
    bool trains_head() const { return kind != StrategyKind::KT; }
    std::string name() const;
    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;
    std::vector<double> epoch_lr;
    std::size_t epochs_completed = 0;
    double wall_seconds = 0.0; // never written to files
};

// lr = learning_rate / 10^(number of milestones <= epoch)
double lr_at(std::size_t epoch, const OptimizerConfig& opt);

// v <- momentum * v + (grad + weight_decay * theta); theta <- theta - lr * v
void sgd_step(std::vector<double>& params, const std::vector<double>& grads,
              std::vector<double>& velocity, double lr, double momentum,
              double weight_decay);
void sgd_step(Matrix& params, const Matrix& grads, Matrix& velocity, double lr,
              double momentum, double weight_decay);

// Deterministic mini-batch SGD over the dataset with the strategy's loss.
// KT and CL require a frozen teacher; the KT path never reads labels. The
// head is required (and updated) for CLS and CL.
TrainReport train(EmbeddingModel& model, ClassificationHead* head, const LabeledDataset& data,
                  const Strategy& strategy, const OptimizerConfig& opt,
                  const EmbeddingModel* teacher);

// CSV `epoch,lr,mean_loss`, one row per completed epoch.
void save_train_report_csv(const TrainReport& report, const std::string& path);

} // namespace synid

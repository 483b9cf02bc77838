#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synid/bioeval.hpp"
#include "synid/datagen.hpp"
#include "synid/dataset.hpp"
#include "synid/model.hpp"
#include "synid/trainer.hpp"

namespace synid {

inline constexpr const char* kToolkitVersion = "0.1.0";

// End-to-end study configuration. All randomness flows from master_seed
// through derive_seed(master_seed, stage_name, repetition).
struct ExperimentConfig {
    // data generation
    std::size_t classes = 100;
    std::size_t per_class = 12;
    std::size_t input_dim = 64;
    double sigma_authentic = 0.30;
    double leakage = 0.5; // lambda
    double sigma_synthetic = 0.45;
    std::size_t synth_per_class = 60;
    // fresh identities for held-out verification pairs; their own noise
    // level sets the difficulty of the benchmark-analog eval independently
    // of the training data
    std::size_t heldout_classes = 40;
    std::size_t heldout_per_class = 8;
    double heldout_sigma = 0.16;

    // embedding model; tanh keeps embeddings away from the exact zero
    // vector that cosine scoring rejects
    std::vector<std::size_t> hidden_dims = {48};
    std::size_t embedding_dim = 32;
    Activation activation = Activation::tanh;

    // margin-softmax settings
    double margin = 0.35;
    double scale = 64.0;

    OptimizerConfig teacher_opt; // defaults: epochs 32, milestones 20,28
    OptimizerConfig student_opt; // defaults: epochs 64, milestones 40,48,52

    // study grid
    std::vector<std::size_t> subset_sizes = {10, 20, 40, 60};
    std::vector<double> alphas = {1e-5, 2e-5};
    std::vector<std::string> strategies = {"CLS", "KT", "CL"};

    std::uint64_t master_seed = 1;

    static ExperimentConfig defaults();
    static ExperimentConfig from_file(const std::string& path);
    void validate() const;
    CosFaceConfig cosface() const { return CosFaceConfig{margin, scale}; }
    ModelConfig model_config(std::uint64_t init_seed) const;
};

// One concrete training setting of the grid ("CLS", "KT", "CL(1e-05)", ...).
struct StrategyCell {
    Strategy strategy;
    std::string label;    // summary CSV name
    std::string file_key; // filesystem-safe name
};
std::vector<StrategyCell> expand_strategies(const ExperimentConfig& cfg);

// Stages shared by every grid cell: datasets, teacher scorer, generator.
struct PipelineStages {
    LabeledDataset authentic;
    LabeledDataset heldout;
    GeneratorModel generator;
    LabeledDataset synthetic;
    EmbeddingModel teacher;
    ClassificationHead teacher_head;
    TrainReport teacher_report;
};
PipelineStages run_shared_stages(const ExperimentConfig& cfg);

struct StudentRun {
    EmbeddingModel model;
    ClassificationHead head; // left at init for KT
    bool head_trained = false;
    TrainReport report;
};
StudentRun train_student(const ExperimentConfig& cfg, const LabeledDataset& train_data,
                         const StrategyCell& cell, std::size_t subset_size,
                         const EmbeddingModel* teacher);

// Pair-protocol verification of a scorer on a dataset.
struct VerifyEval {
    Fraction accuracy;
    double accuracy_threshold = 0.0;
    VerificationReport report;
    ScoreSet scores;
};
VerifyEval verify_on(const EmbeddingModel& model, const LabeledDataset& ds);

struct SummaryRow {
    std::string subset;   // "authentic" for the baseline row
    std::string strategy;
    Fraction verify_acc;
    Fraction eer;
    Fraction fmr100;
    Fraction fmr1000;
    bool has_identification = false; // KT students have no trained head
    Fraction id_top1_synth;
    Fraction id_top1_auth;
};

struct ExperimentResult {
    std::vector<SummaryRow> rows; // baseline first, then subset-major grid
    LinkageReport linkage;
};

// Full study: generate, train teacher, fit generator, sample synthetic,
// train the grid, evaluate, write the results tree under out_dir. A stage
// failure aborts with the stage name; the manifest then records the
// incomplete run.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

void save_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

// FNV-1a over file bytes, for the manifest.
std::uint64_t fnv1a_file(const std::string& path);

} // namespace synid

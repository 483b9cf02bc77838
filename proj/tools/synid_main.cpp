// synid -- desk-scale synthetic-identity training and biometric audit toolkit.
//
// Subcommands: gen, train, embed, eval, link, experiment, report.
// Exit codes: 0 success, 1 runtime/numeric error, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "synid/bioeval.hpp"
#include "synid/config.hpp"
#include "synid/datagen.hpp"
#include "synid/error.hpp"
#include "synid/experiment.hpp"
#include "synid/kernels.hpp"
#include "synid/numio.hpp"
#include "synid/rng.hpp"
#include "synid/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace synid;

namespace {

ExperimentConfig load_config(const std::string& path, std::uint64_t* seed_override) {
    ExperimentConfig cfg =
        path.empty() ? ExperimentConfig::defaults() : ExperimentConfig::from_file(path);
    if (seed_override) cfg.master_seed = *seed_override;
    cfg.validate();
    return cfg;
}

void write_embeddings_csv(const Matrix& emb, const std::vector<std::size_t>& labels,
                          const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "label";
    for (std::size_t j = 0; j < emb.cols(); ++j) os << ",e" << j;
    os << '\n';
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        os << labels[i];
        const double* row = emb.row(i);
        for (std::size_t j = 0; j < emb.cols(); ++j) os << ',' << format_double(row[j]);
        os << '\n';
    }
}

Strategy strategy_from_name(const std::string& name, double alpha, const CosFaceConfig& cf) {
    if (name == "CLS") return Strategy::cls(cf);
    if (name == "KT") return Strategy::kt();
    if (name == "CL") return Strategy::cl(alpha, cf);
    throw ConfigError("unknown strategy '" + name + "' (expected CLS, KT or CL)");
}

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::uint64_t* seed_override) {
    const ExperimentConfig cfg = load_config(config_path, seed_override);
    fs::create_directories(out_dir);

    const LabeledDataset authentic =
        make_authentic(cfg.classes, cfg.per_class, cfg.input_dim, cfg.sigma_authentic,
                       derive_seed(cfg.master_seed, "authentic"));
    const GeneratorModel gen = fit_generator(authentic, cfg.leakage, cfg.sigma_synthetic,
                                             derive_seed(cfg.master_seed, "generator"));
    const LabeledDataset synthetic =
        sample_synthetic(gen, cfg.synth_per_class, derive_seed(cfg.master_seed, "synthetic"));

    const fs::path root(out_dir);
    save_dataset_csv(authentic, (root / "authentic.csv").string());
    save_dataset_csv(synthetic, (root / "synthetic.csv").string());

    std::ofstream os(root / "manifest.txt", std::ios::binary);
    os << "toolkit_version = " << kToolkitVersion << '\n';
    os << "complete = true\n";
    os << "seed = " << cfg.master_seed << '\n';
    for (const char* name : {"authentic.csv", "synthetic.csv"}) {
        char hex[17];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a_file((root / name).string())));
        os << "file " << hex << ' ' << name << '\n';
    }
    std::cout << "wrote " << (root / "authentic.csv").string() << " ("
              << authentic.size() << " rows) and " << (root / "synthetic.csv").string() << " ("
              << synthetic.size() << " rows)\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& strategy_name, double alpha, const std::string& teacher_path,
              const std::string& out_dir, std::uint64_t* seed_override) {
    const ExperimentConfig cfg = load_config(config_path, seed_override);
    const Strategy strategy = strategy_from_name(strategy_name, alpha, cfg.cosface());
    if (strategy.needs_teacher() && teacher_path.empty())
        throw ConfigError("strategy " + strategy_name +
                          " requires a teacher model: pass --teacher <model-file>");

    const LabeledDataset data = load_dataset_csv(data_path);
    EmbeddingModel model =
        init_model(cfg.model_config(derive_seed(cfg.master_seed, "student-init")));
    ClassificationHead head = init_head(cfg.embedding_dim, data.num_classes,
                                        derive_seed(cfg.master_seed, "student-head"));

    LoadedModel teacher;
    if (!teacher_path.empty()) teacher = load_model(teacher_path);

    OptimizerConfig opt = cfg.student_opt;
    opt.seed = derive_seed(cfg.master_seed, "student-train");
    const TrainReport report = train(model, &head, data, strategy, opt,
                                     teacher_path.empty() ? nullptr : &teacher.model);

    fs::create_directories(out_dir);
    const fs::path root(out_dir);
    save_model(model, strategy.trains_head() ? &head : nullptr, (root / "student.model").string());
    save_train_report_csv(report, (root / "train_report.csv").string());
    std::cout << "trained " << strategy_name << " on " << data.size() << " samples; final loss "
              << format_double(report.epoch_mean_loss.back()) << '\n';
    return 0;
}

int cmd_embed(const std::string& model_path, const std::string& data_path,
              const std::string& out_path) {
    const LoadedModel loaded = load_model(model_path);
    const LabeledDataset data = load_dataset_csv(data_path);
    const Matrix emb = embed_dataset(loaded.model, data);
    write_embeddings_csv(emb, data.labels, out_path);
    std::cout << "wrote " << emb.rows() << " embeddings to " << out_path << '\n';
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& data2_path, const std::string& mode,
             const std::string& out_dir, std::size_t bins) {
    const LoadedModel loaded = load_model(model_path);
    const LabeledDataset data = load_dataset_csv(data_path);
    fs::create_directories(out_dir);
    const fs::path root(out_dir);

    if (mode == "verify") {
        const VerifyEval ev = verify_on(loaded.model, data);
        save_scores_csv(ev.scores, (root / "scores.csv").string());
        save_report(ev.report, (root / "report.txt").string());
        save_histogram_csv(histogram_export(ev.scores, bins), (root / "histogram.csv").string());
        std::ofstream os(root / "accuracy.txt", std::ios::binary);
        os << "accuracy = " << ev.accuracy.percent_string() << '\n';
        os << "accuracy_threshold = " << format_double(ev.accuracy_threshold) << '\n';
        std::cout << "eer = " << ev.report.eer.percent_string()
                  << "%, accuracy = " << ev.accuracy.percent_string() << "%\n";
        return 0;
    }
    if (mode == "identify") {
        if (!loaded.has_head)
            throw ConfigError("eval identify: model file has no classification head");
        const Matrix emb = embed_dataset(loaded.model, data);
        const Fraction acc = identification_top1(emb, data.labels, loaded.head);
        std::ofstream os(root / "identification.txt", std::ios::binary);
        os << "id_top1 = " << acc.percent_string() << '\n';
        std::cout << "top-1 identification = " << acc.percent_string() << "%\n";
        return 0;
    }
    if (mode == "link") {
        if (data2_path.empty())
            throw ConfigError("eval link: pass the synthetic dataset with --data2");
        const LabeledDataset synthetic = load_dataset_csv(data2_path, Provenance::synthetic);
        const LinkageReport report = linkage_report(data, synthetic, loaded.model);
        save_linkage_report(report, out_dir);
        std::cout << "intra-authentic eer = " << report.intra_authentic.eer.percent_string()
                  << "%, intra-synthetic eer = " << report.intra_synthetic.eer.percent_string()
                  << "%, cross eer = " << report.cross.eer.percent_string() << "%\n";
        return 0;
    }
    throw ConfigError("unknown eval mode '" + mode + "' (expected verify, identify or link)");
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   std::uint64_t* seed_override) {
    const ExperimentConfig cfg = load_config(config_path, seed_override);
    const ExperimentResult result = run_experiment(cfg, out_dir);
    std::cout << "experiment complete: " << result.rows.size() << " summary rows in "
              << (fs::path(out_dir) / "summary.csv").string() << '\n';
    return 0;
}

int cmd_report(const std::string& scores_path, const std::string& out_dir, std::size_t bins) {
    const ScoreSet scores = load_scores_csv(scores_path);
    fs::create_directories(out_dir);
    const fs::path root(out_dir);
    save_report(verification_report(scores), (root / "report.txt").string());
    save_histogram_csv(histogram_export(scores, bins), (root / "histogram.csv").string());
    std::cout << "wrote report for " << scores.genuine.size() << " genuine / "
              << scores.imposter.size() << " imposter scores\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synid: synthetic-identity embedding training and biometric audit"};
    app.require_subcommand(1);

    int threads = 0;
    bool serial = false;
    app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");
    app.add_flag("--serial", serial, "disable parallel kernels");

    std::string config_path, out_dir = "out", data_path, data2_path, model_path, teacher_path;
    std::string strategy_name = "CLS", mode = "verify", scores_path, embed_out;
    double alpha = 1e-5;
    std::size_t bins = 50;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    CLI::App* gen = app.add_subcommand("gen", "generate authentic and synthetic datasets");
    gen->add_option("--config", config_path, "experiment config file");
    gen->add_option("--out", out_dir, "output directory");
    add_seed(gen);

    CLI::App* train_cmd = app.add_subcommand("train", "train a student model on a dataset");
    train_cmd->add_option("--config", config_path, "experiment config file");
    train_cmd->add_option("--data", data_path, "training dataset CSV")->required();
    train_cmd->add_option("--strategy", strategy_name, "CLS, KT or CL");
    train_cmd->add_option("--alpha", alpha, "CL weighting parameter");
    train_cmd->add_option("--teacher", teacher_path, "teacher model file (KT/CL)");
    train_cmd->add_option("--out", out_dir, "output directory");
    add_seed(train_cmd);

    CLI::App* embed = app.add_subcommand("embed", "embed a dataset with a model");
    embed->add_option("--model", model_path, "model file")->required();
    embed->add_option("--data", data_path, "dataset CSV")->required();
    embed->add_option("--out", embed_out, "output embeddings CSV")->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a model on datasets");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--data", data_path, "dataset CSV")->required();
    eval->add_option("--data2", data2_path, "second dataset CSV (link mode)");
    eval->add_option("--mode", mode, "verify, identify or link");
    eval->add_option("--bins", bins, "histogram bins");
    eval->add_option("--out", out_dir, "output directory");

    CLI::App* link = app.add_subcommand("link", "cross-dataset identity-linkage report");
    link->add_option("--model", model_path, "scorer model file")->required();
    link->add_option("--authentic", data_path, "authentic dataset CSV")->required();
    link->add_option("--synthetic", data2_path, "synthetic dataset CSV")->required();
    link->add_option("--out", out_dir, "output directory");

    CLI::App* experiment = app.add_subcommand("experiment", "run the full study grid");
    experiment->add_option("--config", config_path, "experiment config file");
    experiment->add_option("--out", out_dir, "output directory");
    add_seed(experiment);

    CLI::App* report = app.add_subcommand("report", "metrics and histogram from a scores CSV");
    report->add_option("--scores", scores_path, "scores CSV")->required();
    report->add_option("--bins", bins, "histogram bins");
    report->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    if (serial) kernels::set_parallel(false);

    std::uint64_t* seed_override = seed_set ? &seed : nullptr;
    try {
        if (gen->parsed()) return cmd_gen(config_path, out_dir, seed_override);
        if (train_cmd->parsed())
            return cmd_train(config_path, data_path, strategy_name, alpha, teacher_path, out_dir,
                             seed_override);
        if (embed->parsed()) return cmd_embed(model_path, data_path, embed_out);
        if (eval->parsed())
            return cmd_eval(model_path, data_path, data2_path, mode, out_dir, bins);
        if (link->parsed())
            return cmd_eval(model_path, data_path, data2_path, "link", out_dir, bins);
        if (experiment->parsed()) return cmd_experiment(config_path, out_dir, seed_override);
        if (report->parsed()) return cmd_report(scores_path, out_dir, bins);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

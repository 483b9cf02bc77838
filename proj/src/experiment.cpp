#include "synid/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synid/config.hpp"
#include "synid/error.hpp"
#include "synid/numio.hpp"
#include "synid/rng.hpp"

namespace fs = std::filesystem;

namespace synid {

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.teacher_opt.epochs = 32;
    cfg.teacher_opt.milestones = {20, 28};
    cfg.student_opt.epochs = 64;
    cfg.student_opt.milestones = {40, 48, 52};
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    ExperimentConfig cfg = defaults();
    ConfigReader reader(read_kv_file(path));

    cfg.classes = reader.get_size("classes", cfg.classes);
    cfg.per_class = reader.get_size("per_class", cfg.per_class);
    cfg.input_dim = reader.get_size("input_dim", cfg.input_dim);
    cfg.sigma_authentic = reader.get_double("sigma_authentic", cfg.sigma_authentic);
    cfg.leakage = reader.get_double("lambda", cfg.leakage);
    cfg.sigma_synthetic = reader.get_double("sigma_synthetic", cfg.sigma_synthetic);
    cfg.synth_per_class = reader.get_size("synth_per_class", cfg.synth_per_class);
    cfg.heldout_classes = reader.get_size("heldout_classes", cfg.heldout_classes);
    cfg.heldout_per_class = reader.get_size("heldout_per_class", cfg.heldout_per_class);
    cfg.heldout_sigma = reader.get_double("heldout_sigma", cfg.heldout_sigma);
    cfg.hidden_dims = reader.get_size_list("hidden_dims", cfg.hidden_dims);
    cfg.embedding_dim = reader.get_size("embedding_dim", cfg.embedding_dim);
    cfg.activation =
        activation_from_name(reader.get_string("activation", activation_name(cfg.activation)));
    cfg.margin = reader.get_double("margin", cfg.margin);
    cfg.scale = reader.get_double("scale", cfg.scale);
    cfg.teacher_opt = optimizer_from_reader(reader, "teacher_", cfg.teacher_opt);
    cfg.student_opt = optimizer_from_reader(reader, "student_", cfg.student_opt);
    cfg.subset_sizes = reader.get_size_list("subset_sizes", cfg.subset_sizes);
    cfg.alphas = reader.get_double_list("alphas", cfg.alphas);
    {
        std::string joined;
        for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
            joined += (i ? "," : "") + cfg.strategies[i];
        cfg.strategies = split_list(reader.get_string("strategies", joined));
    }
    cfg.master_seed = reader.get_u64("seed", cfg.master_seed);
    reader.finish("experiment config");
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (classes < 2) throw ConfigError("experiment: classes must be >= 2");
    if (per_class < 3) throw ConfigError("experiment: per_class must be >= 3 (pair protocol)");
    if (input_dim < 8) throw ConfigError("experiment: input_dim must be >= 8");
    if (heldout_classes < 2 || heldout_per_class < 3)
        throw ConfigError("experiment: held-out set needs >= 2 classes and >= 3 per class");
    if (embedding_dim < 1) throw ConfigError("experiment: embedding_dim must be >= 1");
    for (std::size_t s : subset_sizes) {
        if (s < 3) throw ConfigError("experiment: subset sizes must be >= 3 (pair protocol)");
        if (s > synth_per_class)
            throw ConfigError("experiment: subset size " + std::to_string(s) +
                              " exceeds synth_per_class");
    }
    if (subset_sizes.empty()) throw ConfigError("experiment: need at least one subset size");
    if (strategies.empty()) throw ConfigError("experiment: need at least one strategy");
    for (const std::string& s : strategies)
        if (s != "CLS" && s != "KT" && s != "CL")
            throw ConfigError("experiment: unknown strategy '" + s + "'");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("experiment: alpha must be in [0, 1]");
    CosFaceConfig{margin, scale}.validate();
    teacher_opt.validate();
    student_opt.validate();
}

ModelConfig ExperimentConfig::model_config(std::uint64_t init_seed) const {
    ModelConfig mc;
    mc.input_dim = input_dim;
    mc.hidden_dims = hidden_dims;
    mc.embedding_dim = embedding_dim;
    mc.activation = activation;
    mc.init_seed = init_seed;
    return mc;
}

std::vector<StrategyCell> expand_strategies(const ExperimentConfig& cfg) {
    std::vector<StrategyCell> cells;
    for (const std::string& name : cfg.strategies) {
        if (name == "CLS") {
            cells.push_back({Strategy::cls(cfg.cosface()), "CLS", "CLS"});
        } else if (name == "KT") {
            cells.push_back({Strategy::kt(), "KT", "KT"});
        } else { // CL, one cell per alpha
            for (double a : cfg.alphas) {
                const std::string alpha_str = format_double(a);
                cells.push_back({Strategy::cl(a, cfg.cosface()), "CL(" + alpha_str + ")",
                                 "CL_" + alpha_str});
            }
        }
    }
    return cells;
}

PipelineStages run_shared_stages(const ExperimentConfig& cfg) {
    cfg.validate();
    PipelineStages st;
    st.authentic = make_authentic(cfg.classes, cfg.per_class, cfg.input_dim,
                                  cfg.sigma_authentic, derive_seed(cfg.master_seed, "authentic"));
    st.heldout = make_authentic(cfg.heldout_classes, cfg.heldout_per_class, cfg.input_dim,
                                cfg.heldout_sigma, derive_seed(cfg.master_seed, "heldout"));

    st.teacher = init_model(cfg.model_config(derive_seed(cfg.master_seed, "teacher-init")));
    st.teacher_head = init_head(cfg.embedding_dim, cfg.classes,
                                derive_seed(cfg.master_seed, "teacher-head"));
    OptimizerConfig teacher_opt = cfg.teacher_opt;
    teacher_opt.seed = derive_seed(cfg.master_seed, "teacher-train");
    st.teacher_report = train(st.teacher, &st.teacher_head, st.authentic,
                              Strategy::cls(cfg.cosface()), teacher_opt, nullptr);

    st.generator = fit_generator(st.authentic, cfg.leakage, cfg.sigma_synthetic,
                                 derive_seed(cfg.master_seed, "generator"));
    st.synthetic = sample_synthetic(st.generator, cfg.synth_per_class,
                                    derive_seed(cfg.master_seed, "synthetic"));
    return st;
}

StudentRun train_student(const ExperimentConfig& cfg, const LabeledDataset& train_data,
                         const StrategyCell& cell, std::size_t subset_size,
                         const EmbeddingModel* teacher) {
    const std::string key = "subset" + std::to_string(subset_size) + "-" + cell.file_key;
    StudentRun run;
    run.model = init_model(cfg.model_config(derive_seed(cfg.master_seed, "student-init-" + key)));
    run.head = init_head(cfg.embedding_dim, train_data.num_classes,
                         derive_seed(cfg.master_seed, "student-head-" + key));
    OptimizerConfig opt = cfg.student_opt;
    opt.seed = derive_seed(cfg.master_seed, "student-train-" + key);
    run.report = train(run.model, &run.head, train_data, cell.strategy, opt, teacher);
    run.head_trained = cell.strategy.trains_head();
    return run;
}

VerifyEval verify_on(const EmbeddingModel& model, const LabeledDataset& ds) {
    const PairProtocol protocol = build_protocol(ds);
    const Matrix emb = embed_dataset(model, ds);

    Matrix refs(protocol.references.size(), emb.cols());
    Matrix probes(protocol.probes.size(), emb.cols());
    std::vector<std::size_t> ref_labels, probe_labels;
    for (std::size_t r = 0; r < protocol.references.size(); ++r) {
        const double* src = emb.row(protocol.references[r]);
        std::copy(src, src + emb.cols(), refs.row(r));
        ref_labels.push_back(ds.labels[protocol.references[r]]);
    }
    for (std::size_t p = 0; p < protocol.probes.size(); ++p) {
        const double* src = emb.row(protocol.probes[p]);
        std::copy(src, src + emb.cols(), probes.row(p));
        probe_labels.push_back(ds.labels[protocol.probes[p]]);
    }

    VerifyEval ev;
    ev.scores = collect_scores(refs, ref_labels, probes, probe_labels);
    std::tie(ev.accuracy, ev.accuracy_threshold) = verification_accuracy(ev.scores);
    ev.report = verification_report(ev.scores);
    return ev;
}

// ------------------------------------------------------------ summary CSV

namespace {

std::string row_to_csv(const SummaryRow& row) {
    std::ostringstream os;
    os << row.subset << ',' << row.strategy << ',' << row.verify_acc.percent_string() << ','
       << row.eer.percent_string() << ',' << row.fmr100.percent_string() << ','
       << row.fmr1000.percent_string() << ',';
    if (row.has_identification)
        os << row.id_top1_synth.percent_string() << ',' << row.id_top1_auth.percent_string();
    else
        os << ',';
    return os.str();
}

} // namespace

void save_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "subset,strategy,verify_acc,eer,fmr100,fmr1000,id_top1_synth,id_top1_auth\n";
    for (const SummaryRow& row : rows) os << row_to_csv(row) << '\n';
    if (!os) throw IoError("failed writing summary '" + path + "'");
}

// --------------------------------------------------------------- manifest

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot checksum '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize n = is.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!is) break;
    }
    return h;
}

namespace {

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

void dump_config(std::ostream& os, const ExperimentConfig& cfg) {
    os << "classes = " << cfg.classes << '\n';
    os << "per_class = " << cfg.per_class << '\n';
    os << "input_dim = " << cfg.input_dim << '\n';
    os << "sigma_authentic = " << format_double(cfg.sigma_authentic) << '\n';
    os << "lambda = " << format_double(cfg.leakage) << '\n';
    os << "sigma_synthetic = " << format_double(cfg.sigma_synthetic) << '\n';
    os << "synth_per_class = " << cfg.synth_per_class << '\n';
    os << "heldout_classes = " << cfg.heldout_classes << '\n';
    os << "heldout_per_class = " << cfg.heldout_per_class << '\n';
    os << "heldout_sigma = " << format_double(cfg.heldout_sigma) << '\n';
    os << "hidden_dims =";
    for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i)
        os << (i ? "," : " ") << cfg.hidden_dims[i];
    os << '\n';
    os << "embedding_dim = " << cfg.embedding_dim << '\n';
    os << "activation = " << activation_name(cfg.activation) << '\n';
    os << "margin = " << format_double(cfg.margin) << '\n';
    os << "scale = " << format_double(cfg.scale) << '\n';
    auto dump_opt = [&os](const std::string& prefix, const OptimizerConfig& opt) {
        os << prefix << "learning_rate = " << format_double(opt.learning_rate) << '\n';
        os << prefix << "momentum = " << format_double(opt.momentum) << '\n';
        os << prefix << "weight_decay = " << format_double(opt.weight_decay) << '\n';
        os << prefix << "batch_size = " << opt.batch_size << '\n';
        os << prefix << "epochs = " << opt.epochs << '\n';
        os << prefix << "milestones =";
        for (std::size_t i = 0; i < opt.milestones.size(); ++i)
            os << (i ? "," : " ") << opt.milestones[i];
        os << '\n';
        os << prefix << "augment_sigma = " << format_double(opt.augment_sigma) << '\n';
    };
    dump_opt("teacher_", cfg.teacher_opt);
    dump_opt("student_", cfg.student_opt);
    os << "subset_sizes =";
    for (std::size_t i = 0; i < cfg.subset_sizes.size(); ++i)
        os << (i ? "," : " ") << cfg.subset_sizes[i];
    os << '\n';
    os << "alphas =";
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i)
        os << (i ? "," : " ") << format_double(cfg.alphas[i]);
    os << '\n';
    os << "strategies =";
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        os << (i ? "," : " ") << cfg.strategies[i];
    os << '\n';
    os << "seed = " << cfg.master_seed << '\n';
}

struct ManifestWriter {
    fs::path root;
    std::vector<std::string> outputs; // relative paths, in creation order

    void note(const fs::path& p) { outputs.push_back(fs::relative(p, root).generic_string()); }

    void write(const ExperimentConfig& cfg, bool complete, const std::string& failed_stage) {
        std::ofstream os(root / "manifest.txt", std::ios::binary);
        if (!os) throw IoError("cannot write manifest");
        os << "toolkit_version = " << kToolkitVersion << '\n';
        os << "complete = " << (complete ? "true" : "false") << '\n';
        if (!failed_stage.empty()) os << "failed_stage = " << failed_stage << '\n';
        dump_config(os, cfg);
        std::vector<std::string> sorted = outputs;
        std::sort(sorted.begin(), sorted.end());
        for (const std::string& rel : sorted)
            os << "file " << hex64(fnv1a_file((root / rel).string())) << ' ' << rel << '\n';
    }
};

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    ManifestWriter manifest{fs::path(out_dir), {}};

    std::string stage = "authentic";
    try {
        ExperimentResult result;
        PipelineStages st = run_shared_stages(cfg);

        stage = "write-datasets";
        save_dataset_csv(st.authentic, (manifest.root / "authentic.csv").string());
        manifest.note(manifest.root / "authentic.csv");
        save_dataset_csv(st.heldout, (manifest.root / "heldout.csv").string());
        manifest.note(manifest.root / "heldout.csv");
        save_dataset_csv(st.synthetic, (manifest.root / "synthetic.csv").string());
        manifest.note(manifest.root / "synthetic.csv");

        stage = "teacher";
        save_model(st.teacher, &st.teacher_head, (manifest.root / "teacher.model").string());
        manifest.note(manifest.root / "teacher.model");
        save_train_report_csv(st.teacher_report,
                              (manifest.root / "teacher_report.csv").string());
        manifest.note(manifest.root / "teacher_report.csv");

        stage = "linkage";
        const LabeledDataset linkage_subset = derive_subset(st.synthetic, cfg.subset_sizes.front());
        result.linkage = linkage_report(st.authentic, linkage_subset, st.teacher);
        save_linkage_report(result.linkage, (manifest.root / "linkage").string());
        for (const char* name : {"report_intra_authentic.txt", "report_intra_synthetic.txt",
                                 "report_cross.txt", "linkage.txt"})
            manifest.note(manifest.root / "linkage" / name);

        stage = "baseline-eval";
        {
            SummaryRow row;
            row.subset = "authentic";
            row.strategy = "CLS";
            const VerifyEval ev = verify_on(st.teacher, st.heldout);
            row.verify_acc = ev.accuracy;
            row.eer = ev.report.eer;
            row.fmr100 = ev.report.fmr100;
            row.fmr1000 = ev.report.fmr1000;
            row.has_identification = true;
            row.id_top1_auth = identification_top1(embed_dataset(st.teacher, st.authentic),
                                                   st.authentic.labels, st.teacher_head);
            row.id_top1_synth = identification_top1(embed_dataset(st.teacher, linkage_subset),
                                                    linkage_subset.labels, st.teacher_head);
            result.rows.push_back(row);
        }

        const auto cells = expand_strategies(cfg);
        fs::create_directories(manifest.root / "students");
        for (std::size_t subset : cfg.subset_sizes) {
            const LabeledDataset train_data = derive_subset(st.synthetic, subset);
            for (const StrategyCell& cell : cells) {
                stage = "train-subset" + std::to_string(subset) + "-" + cell.file_key;
                StudentRun run = train_student(cfg, train_data, cell, subset, &st.teacher);

                const std::string base = "subset" + std::to_string(subset) + "_" + cell.file_key;
                save_model(run.model, run.head_trained ? &run.head : nullptr,
                           (manifest.root / "students" / (base + ".model")).string());
                manifest.note(manifest.root / "students" / (base + ".model"));
                save_train_report_csv(
                    run.report, (manifest.root / "students" / (base + "_report.csv")).string());
                manifest.note(manifest.root / "students" / (base + "_report.csv"));

                stage = "eval-subset" + std::to_string(subset) + "-" + cell.file_key;
                SummaryRow row;
                row.subset = std::to_string(subset);
                row.strategy = cell.label;
                const VerifyEval ev = verify_on(run.model, st.heldout);
                row.verify_acc = ev.accuracy;
                row.eer = ev.report.eer;
                row.fmr100 = ev.report.fmr100;
                row.fmr1000 = ev.report.fmr1000;
                save_report(ev.report,
                            (manifest.root / "students" / (base + "_verify.txt")).string());
                manifest.note(manifest.root / "students" / (base + "_verify.txt"));
                if (run.head_trained) {
                    row.has_identification = true;
                    row.id_top1_synth = identification_top1(
                        embed_dataset(run.model, train_data), train_data.labels, run.head);
                    row.id_top1_auth = identification_top1(
                        embed_dataset(run.model, st.authentic), st.authentic.labels, run.head);
                }
                result.rows.push_back(row);
            }
        }

        stage = "summary";
        save_summary_csv(result.rows, (manifest.root / "summary.csv").string());
        manifest.note(manifest.root / "summary.csv");

        manifest.write(cfg, true, "");
        return result;
    } catch (const std::exception& e) {
        // Keep partial outputs; mark the manifest incomplete.
        try {
            manifest.write(cfg, false, stage);
        } catch (...) {
        }
        throw Error("experiment stage '" + stage + "' failed: " + e.what());
    }
}

} // namespace synid

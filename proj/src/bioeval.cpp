#include "synid/bioeval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synid/error.hpp"
#include "synid/kernels.hpp"
#include "synid/numio.hpp"

namespace synid {

Matrix embed_dataset(const EmbeddingModel& model, const LabeledDataset& ds) {
    if (ds.size() == 0) return Matrix(0, model.config.embedding_dim);
    if (ds.input_dim() != model.config.input_dim)
        throw DimensionError("embed_dataset: dataset dim " + std::to_string(ds.input_dim()) +
                             " does not match model input dim " +
                             std::to_string(model.config.input_dim));
    return forward(model, ds.samples);
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw DimensionError("cosine: length mismatch");
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) throw DegenerateInputError("cosine: zero-norm input");
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

PairProtocol build_protocol(const LabeledDataset& ds) {
    ds.validate();
    for (std::size_t count : ds.class_counts())
        if (count < 3)
            throw ProtocolError("build_protocol: every class needs >= 3 samples "
                                "(2 references + probes)");
    PairProtocol protocol;
    std::vector<std::size_t> seen(ds.num_classes, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (seen[ds.labels[i]] < 2) {
            ++seen[ds.labels[i]];
            protocol.references.push_back(i);
        } else {
            protocol.probes.push_back(i);
        }
    }
    return protocol;
}

ScoreSet collect_scores(const Matrix& ref_embeddings,
                        const std::vector<std::size_t>& ref_labels,
                        const Matrix& probe_embeddings,
                        const std::vector<std::size_t>& probe_labels) {
    if (ref_embeddings.rows() == 0 || probe_embeddings.rows() == 0)
        throw ProtocolError("collect_scores: need at least one reference and one probe");
    if (ref_embeddings.rows() != ref_labels.size() ||
        probe_embeddings.rows() != probe_labels.size())
        throw DimensionError("collect_scores: embeddings/labels size mismatch");

    Matrix cos;
    kernels::cosine_matrix(ref_embeddings, probe_embeddings, cos);

    ScoreSet scores;
    for (std::size_t r = 0; r < cos.rows(); ++r) {
        const double* row = cos.row(r);
        for (std::size_t p = 0; p < cos.cols(); ++p) {
            if (ref_labels[r] == probe_labels[p])
                scores.genuine.push_back(row[p]);
            else
                scores.imposter.push_back(row[p]);
        }
    }
    return scores;
}

// ---------------------------------------------------------------- metrics

namespace {

void require_scores(const ScoreSet& s, const char* what) {
    if (s.genuine.empty() || s.imposter.empty())
        throw ProtocolError(std::string(what) + ": genuine and imposter lists must be non-empty");
}

struct SortedScores {
    std::vector<double> genuine;
    std::vector<double> imposter;

    explicit SortedScores(const ScoreSet& s) : genuine(s.genuine), imposter(s.imposter) {
        std::sort(genuine.begin(), genuine.end());
        std::sort(imposter.begin(), imposter.end());
    }

    // match rule: score >= t is a match
    std::int64_t genuine_below(double t) const {
        return std::lower_bound(genuine.begin(), genuine.end(), t) - genuine.begin();
    }
    std::int64_t imposter_at_or_above(double t) const {
        return imposter.end() - std::lower_bound(imposter.begin(), imposter.end(), t);
    }
    Fraction fmr(double t) const {
        return Fraction(imposter_at_or_above(t), static_cast<std::int64_t>(imposter.size()));
    }
    Fraction fnmr(double t) const {
        return Fraction(genuine_below(t), static_cast<std::int64_t>(genuine.size()));
    }
};

} // namespace

std::vector<double> candidate_thresholds(const ScoreSet& scores) {
    std::vector<double> pooled = scores.genuine;
    pooled.insert(pooled.end(), scores.imposter.begin(), scores.imposter.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    std::vector<double> candidates;
    candidates.reserve(2 * pooled.size() + 1);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        candidates.push_back(pooled[i]);
        if (i + 1 < pooled.size()) candidates.push_back(0.5 * (pooled[i] + pooled[i + 1]));
    }
    if (!pooled.empty()) candidates.push_back(pooled.back() + 1.0);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    return candidates;
}

Fraction fmr_at(const ScoreSet& scores, double threshold) {
    require_scores(scores, "fmr_at");
    return SortedScores(scores).fmr(threshold);
}

Fraction fnmr_at(const ScoreSet& scores, double threshold) {
    require_scores(scores, "fnmr_at");
    return SortedScores(scores).fnmr(threshold);
}

std::pair<Fraction, double> compute_eer(const ScoreSet& scores) {
    require_scores(scores, "compute_eer");
    const SortedScores sorted(scores);
    const auto candidates = candidate_thresholds(scores);

    bool have_best = false;
    Fraction best_gap;
    Fraction best_eer;
    double best_threshold = 0.0;
    for (double t : candidates) {
        const Fraction fmr = sorted.fmr(t);
        const Fraction fnmr = sorted.fnmr(t);
        const Fraction gap = (fmr - fnmr).abs();
        if (!have_best || gap < best_gap) {
            have_best = true;
            best_gap = gap;
            best_eer = (fmr + fnmr) * Fraction(1, 2);
            best_threshold = t;
        }
    }
    return {best_eer, best_threshold};
}

std::pair<Fraction, double> compute_fmr_point(const ScoreSet& scores, const Fraction& bound) {
    require_scores(scores, "compute_fmr_point");
    if (!(Fraction(0, 1) < bound && bound < Fraction(1, 1)))
        throw ConfigError("compute_fmr_point: bound must be in (0, 1)");
    const SortedScores sorted(scores);
    const auto candidates = candidate_thresholds(scores);

    bool have_best = false;
    Fraction best_fnmr;
    double best_threshold = 0.0;
    for (double t : candidates) {
        if (!(sorted.fmr(t) <= bound)) continue;
        const Fraction fnmr = sorted.fnmr(t);
        if (!have_best || fnmr < best_fnmr) {
            have_best = true;
            best_fnmr = fnmr;
            best_threshold = t;
        }
    }
    // A threshold above the max score has FMR 0, so the bound is always
    // satisfiable.
    if (!have_best) throw NumericError("compute_fmr_point: no feasible threshold");
    return {best_fnmr, best_threshold};
}

std::pair<Fraction, double> verification_accuracy(const ScoreSet& scores) {
    require_scores(scores, "verification_accuracy");
    const SortedScores sorted(scores);
    const auto candidates = candidate_thresholds(scores);
    const std::int64_t g_total = static_cast<std::int64_t>(scores.genuine.size());
    const std::int64_t i_total = static_cast<std::int64_t>(scores.imposter.size());

    bool have_best = false;
    Fraction best_acc;
    double best_threshold = 0.0;
    for (double t : candidates) {
        // correct = genuine matches + imposter non-matches
        const std::int64_t correct = (g_total - sorted.genuine_below(t)) +
                                     (i_total - sorted.imposter_at_or_above(t));
        const Fraction acc(correct, g_total + i_total);
        if (!have_best || best_acc < acc) {
            have_best = true;
            best_acc = acc;
            best_threshold = t;
        }
    }
    return {best_acc, best_threshold};
}

Fraction identification_top1(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                             const ClassificationHead& head) {
    if (embeddings.rows() != labels.size())
        throw DimensionError("identification_top1: embeddings/labels size mismatch");
    if (embeddings.cols() != head.embedding_dim())
        throw DimensionError("identification_top1: embedding dim does not match head");
    for (std::size_t v : labels)
        if (v >= head.num_classes())
            throw ProtocolError("identification_top1: label out of head range");
    if (embeddings.rows() == 0) return Fraction(0, 1);

    // Head columns transposed to rows for the cosine kernel.
    Matrix centers(head.num_classes(), head.embedding_dim());
    for (std::size_t j = 0; j < head.num_classes(); ++j)
        for (std::size_t k = 0; k < head.embedding_dim(); ++k)
            centers(j, k) = head.weight(k, j);

    Matrix cos;
    kernels::cosine_matrix(embeddings, centers, cos);

    std::int64_t correct = 0;
    for (std::size_t i = 0; i < cos.rows(); ++i) {
        const double* row = cos.row(i);
        const double own = row[labels[i]];
        bool win = true;
        for (std::size_t j = 0; j < cos.cols(); ++j) {
            if (j == labels[i]) continue;
            if (row[j] >= own) { // ties count as errors
                win = false;
                break;
            }
        }
        if (win) ++correct;
    }
    return Fraction(correct, static_cast<std::int64_t>(cos.rows()));
}

VerificationReport verification_report(const ScoreSet& scores) {
    VerificationReport report;
    std::tie(report.eer, report.eer_threshold) = compute_eer(scores);
    std::tie(report.fmr100, report.fmr100_threshold) = compute_fmr_point(scores, kFmr100Bound);
    std::tie(report.fmr1000, report.fmr1000_threshold) = compute_fmr_point(scores, kFmr1000Bound);
    report.genuine_count = scores.genuine.size();
    report.imposter_count = scores.imposter.size();
    return report;
}

LinkageReport linkage_report(const LabeledDataset& authentic, const LabeledDataset& synthetic,
                             const EmbeddingModel& scorer) {
    return linkage_report(authentic, scorer, synthetic, scorer);
}

LinkageReport linkage_report(const LabeledDataset& authentic,
                             const EmbeddingModel& authentic_scorer,
                             const LabeledDataset& synthetic,
                             const EmbeddingModel& synthetic_scorer) {
    if (authentic.num_classes != synthetic.num_classes)
        throw ProtocolError("linkage_report: class-id spaces differ between datasets");

    const PairProtocol auth_protocol = build_protocol(authentic);
    const PairProtocol synth_protocol = build_protocol(synthetic);
    const Matrix auth_emb = embed_dataset(authentic_scorer, authentic);
    const Matrix synth_emb = embed_dataset(synthetic_scorer, synthetic);

    auto gather = [](const Matrix& emb, const std::vector<std::size_t>& labels,
                     const std::vector<std::size_t>& idx) {
        Matrix out(idx.size(), emb.cols());
        std::vector<std::size_t> out_labels;
        out_labels.reserve(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double* src = emb.row(idx[r]);
            std::copy(src, src + emb.cols(), out.row(r));
            out_labels.push_back(labels[idx[r]]);
        }
        return std::make_pair(std::move(out), std::move(out_labels));
    };

    auto [auth_refs, auth_ref_labels] = gather(auth_emb, authentic.labels, auth_protocol.references);
    auto [auth_probes, auth_probe_labels] = gather(auth_emb, authentic.labels, auth_protocol.probes);
    auto [synth_refs, synth_ref_labels] = gather(synth_emb, synthetic.labels, synth_protocol.references);
    auto [synth_probes, synth_probe_labels] = gather(synth_emb, synthetic.labels, synth_protocol.probes);

    LinkageReport report;
    report.intra_authentic = verification_report(
        collect_scores(auth_refs, auth_ref_labels, auth_probes, auth_probe_labels));
    report.intra_synthetic = verification_report(
        collect_scores(synth_refs, synth_ref_labels, synth_probes, synth_probe_labels));

    const ScoreSet cross_scores =
        collect_scores(auth_refs, auth_ref_labels, synth_probes, synth_probe_labels);
    report.cross = verification_report(cross_scores);
    // FNMR at the cross FMR1000 threshold, scaled to comparisons per 100.
    report.expected_nonmatches_per_100 =
        Fraction(100, 1) * fnmr_at(cross_scores, report.cross.fmr1000_threshold);
    return report;
}

Histogram histogram_export(const ScoreSet& scores, std::size_t bins) {
    if (bins < 2) throw ConfigError("histogram_export: need at least 2 bins");
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins);
    h.genuine_counts.assign(bins, 0);
    h.imposter_counts.assign(bins, 0);

    auto bin_of = [bins](double x) {
        const double pos = (x + 1.0) / 2.0 * static_cast<double>(bins);
        auto b = static_cast<std::int64_t>(std::floor(pos));
        b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(bins) - 1);
        return static_cast<std::size_t>(b);
    };
    for (double v : scores.genuine) ++h.genuine_counts[bin_of(v)];
    for (double v : scores.imposter) ++h.imposter_counts[bin_of(v)];
    return h;
}

// ---------------------------------------------------------------- file I/O

void save_scores_csv(const ScoreSet& scores, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "kind,score\n";
    for (double v : scores.genuine) os << "genuine," << format_double(v) << '\n';
    for (double v : scores.imposter) os << "imposter," << format_double(v) << '\n';
    if (!os) throw IoError("failed writing scores file '" + path + "'");
}

ScoreSet load_scores_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open scores file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != "kind,score")
        throw IoError("'" + path + "' is not a synid scores CSV");
    ScoreSet scores;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("scores row missing comma");
        const std::string kind = line.substr(0, comma);
        const double v = parse_double(std::string_view(line).substr(comma + 1));
        if (v < -1.0 || v > 1.0)
            throw ProtocolError("score " + format_double(v) + " outside [-1, 1]");
        if (kind == "genuine")
            scores.genuine.push_back(v);
        else if (kind == "imposter")
            scores.imposter.push_back(v);
        else
            throw IoError("unknown score kind '" + kind + "'");
    }
    return scores;
}

void save_report(const VerificationReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "eer = " << report.eer.percent_string() << '\n';
    os << "eer_threshold = " << format_double(report.eer_threshold) << '\n';
    os << "fmr100 = " << report.fmr100.percent_string() << '\n';
    os << "fmr100_threshold = " << format_double(report.fmr100_threshold) << '\n';
    os << "fmr1000 = " << report.fmr1000.percent_string() << '\n';
    os << "fmr1000_threshold = " << format_double(report.fmr1000_threshold) << '\n';
    os << "genuine_count = " << report.genuine_count << '\n';
    os << "imposter_count = " << report.imposter_count << '\n';
    if (!os) throw IoError("failed writing report file '" + path + "'");
}

void save_linkage_report(const LinkageReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_report(report.intra_authentic, (fs::path(dir) / "report_intra_authentic.txt").string());
    save_report(report.intra_synthetic, (fs::path(dir) / "report_intra_synthetic.txt").string());
    save_report(report.cross, (fs::path(dir) / "report_cross.txt").string());

    const std::string path = (fs::path(dir) / "linkage.txt").string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "intra_authentic_eer = " << report.intra_authentic.eer.percent_string() << '\n';
    os << "intra_synthetic_eer = " << report.intra_synthetic.eer.percent_string() << '\n';
    os << "cross_eer = " << report.cross.eer.percent_string() << '\n';
    os << "cross_fmr1000 = " << report.cross.fmr1000.percent_string() << '\n';
    os << "cross_fmr1000_threshold = " << format_double(report.cross.fmr1000_threshold) << '\n';
    os << "expected_nonmatches_per_100 = "
       << format_fixed(report.expected_nonmatches_per_100.value(), 3) << '\n';
    if (!os) throw IoError("failed writing linkage file '" + path + "'");
}

void save_histogram_csv(const Histogram& h, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "bin_low,bin_high,genuine_count,imposter_count\n";
    for (std::size_t b = 0; b + 1 < h.edges.size(); ++b)
        os << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ','
           << h.genuine_counts[b] << ',' << h.imposter_counts[b] << '\n';
    if (!os) throw IoError("failed writing histogram file '" + path + "'");
}

Histogram load_histogram_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open histogram file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != "bin_low,bin_high,genuine_count,imposter_count")
        throw IoError("'" + path + "' is not a synid histogram CSV");
    Histogram h;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) throw IoError("histogram row needs 4 cells");
        const double low = parse_double(cells[0]);
        const double high = parse_double(cells[1]);
        if (h.edges.empty()) h.edges.push_back(low);
        h.edges.push_back(high);
        h.genuine_counts.push_back(static_cast<std::size_t>(parse_int(cells[2])));
        h.imposter_counts.push_back(static_cast<std::size_t>(parse_int(cells[3])));
    }
    return h;
}

} // namespace synid

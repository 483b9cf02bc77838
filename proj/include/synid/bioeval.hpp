#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synid/dataset.hpp"
#include "synid/fraction.hpp"
#include "synid/matrix.hpp"
#include "synid/model.hpp"

namespace synid {

// The first two samples of each class are references, the rest probes.
struct PairProtocol {
    std::vector<std::size_t> references;
    std::vector<std::size_t> probes;
};

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> imposter;
};

struct VerificationReport {
    Fraction eer;
    double eer_threshold = 0.0;
    Fraction fmr100; // lowest FNMR with FMR <= 1%
    double fmr100_threshold = 0.0;
    Fraction fmr1000; // lowest FNMR with FMR <= 0.1%
    double fmr1000_threshold = 0.0;
    std::size_t genuine_count = 0;
    std::size_t imposter_count = 0;
};

struct LinkageReport {
    VerificationReport intra_authentic;
    VerificationReport intra_synthetic;
    VerificationReport cross;
    // 100 x cross FNMR at the cross FMR1000 threshold.
    Fraction expected_nonmatches_per_100;
};

struct Histogram {
    std::vector<double> edges; // bins + 1 uniform edges over [-1, 1]
    std::vector<std::size_t> genuine_counts;
    std::vector<std::size_t> imposter_counts;
};

inline const Fraction kFmr100Bound{1, 100};
inline const Fraction kFmr1000Bound{1, 1000};

// Row i is the embedding of sample i. An empty dataset embeds to an empty
// matrix.
Matrix embed_dataset(const EmbeddingModel& model, const LabeledDataset& ds);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

PairProtocol build_protocol(const LabeledDataset& ds);

// Every (reference, probe) pair scored by cosine; genuine when labels match.
// Scores are assembled reference-major, probe-minor, so exported files are
// byte-stable under any parallel schedule.
ScoreSet collect_scores(const Matrix& ref_embeddings,
                        const std::vector<std::size_t>& ref_labels,
                        const Matrix& probe_embeddings,
                        const std::vector<std::size_t>& probe_labels);

// Candidate decision thresholds: every unique score, midpoints between
// adjacent unique scores, and one point above the maximum. Finite data makes
// the ROC a step function; this set contains every distinct operating point.
std::vector<double> candidate_thresholds(const ScoreSet& scores);

Fraction fmr_at(const ScoreSet& scores, double threshold);  // imposter >= t
Fraction fnmr_at(const ScoreSet& scores, double threshold); // genuine < t

// Threshold minimizing |FMR - FNMR| (ties: smaller threshold);
// EER = (FMR + FNMR) / 2 there.
std::pair<Fraction, double> compute_eer(const ScoreSet& scores);

// Minimum FNMR subject to FMR <= bound, with the smallest threshold
// achieving it.
std::pair<Fraction, double> compute_fmr_point(const ScoreSet& scores, const Fraction& bound);

// Maximum over candidate thresholds of correctly decided pairs / total
// (ties: smaller threshold).
std::pair<Fraction, double> verification_accuracy(const ScoreSet& scores);

// Fraction of samples whose strict-maximal cosine against the normalized
// head columns is at the true label; ties count as errors.
Fraction identification_top1(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                             const ClassificationHead& head);

VerificationReport verification_report(const ScoreSet& scores);

// Intra-authentic, intra-synthetic and cross-dataset (authentic references,
// synthetic probes) verification under a shared scorer; class c in the
// synthetic dataset corresponds to identity c in the authentic one.
LinkageReport linkage_report(const LabeledDataset& authentic, const LabeledDataset& synthetic,
                             const EmbeddingModel& scorer);
LinkageReport linkage_report(const LabeledDataset& authentic, const EmbeddingModel& authentic_scorer,
                             const LabeledDataset& synthetic, const EmbeddingModel& synthetic_scorer);

Histogram histogram_export(const ScoreSet& scores, std::size_t bins);

// ------------------------------------------------------------- file I/O
// Scores file: CSV `kind,score` with kind in {genuine, imposter}.
// Report file: flat `key = value`, rates as percentages with 3 decimals.
// Histogram file: CSV `bin_low,bin_high,genuine_count,imposter_count`.

void save_scores_csv(const ScoreSet& scores, const std::string& path);
ScoreSet load_scores_csv(const std::string& path);
void save_report(const VerificationReport& report, const std::string& path);
void save_linkage_report(const LinkageReport& report, const std::string& dir);
void save_histogram_csv(const Histogram& h, const std::string& path);
Histogram load_histogram_csv(const std::string& path);

} // namespace synid

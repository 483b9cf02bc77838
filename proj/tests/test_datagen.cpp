#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "synid/bioeval.hpp"
#include "synid/datagen.hpp"

using namespace synid;

namespace {

double row_norm(const Matrix& m, std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * m(i, j);
    return std::sqrt(acc);
}

double row_cosine(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
    std::vector<double> u(a.row(i), a.row(i) + a.cols());
    std::vector<double> v(b.row(j), b.row(j) + b.cols());
    return cosine(u, v);
}

double mean_prototype_cosine(double leakage, std::uint64_t seed) {
    const LabeledDataset authentic = make_authentic(120, 4, 64, 0.2, seed);
    const Matrix means = class_mean_directions(authentic);
    const GeneratorModel gen = fit_generator(authentic, leakage, 0.2, seed + 1);
    double total = 0.0;
    for (std::size_t c = 0; c < gen.num_classes(); ++c)
        total += row_cosine(means, c, gen.prototypes, c);
    return total / static_cast<double>(gen.num_classes());
}

} // namespace

TEST_CASE("zero intra-class noise reproduces the prototype exactly") {
    const LabeledDataset ds = make_authentic(3, 4, 8, 0.0, 42);
    for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t first = c * 4;
        for (std::size_t k = 1; k < 4; ++k)
            for (std::size_t j = 0; j < 8; ++j)
                CHECK(ds.samples(first + k, j) == ds.samples(first, j));
    }
}

TEST_CASE("make_authentic is deterministic per seed") {
    const LabeledDataset a = make_authentic(5, 3, 16, 0.3, 7);
    const LabeledDataset b = make_authentic(5, 3, 16, 0.3, 7);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
    const LabeledDataset c = make_authentic(5, 3, 16, 0.3, 8);
    CHECK_FALSE(a.samples == c.samples);
}

TEST_CASE("within-class cosine exceeds between-class cosine") {
    const LabeledDataset ds = make_authentic(100, 4, 64, 0.3, 11);
    double within = 0.0, between = 0.0;
    std::size_t n_within = 0, n_between = 0;
    for (std::size_t i = 0; i < ds.size(); i += 7) {
        for (std::size_t j = i + 1; j < ds.size(); j += 13) {
            const double c = row_cosine(ds.samples, i, ds.samples, j);
            if (ds.labels[i] == ds.labels[j]) {
                within += c;
                ++n_within;
            } else {
                between += c;
                ++n_between;
            }
        }
    }
    REQUIRE(n_within > 0);
    REQUIRE(n_between > 0);
    CHECK(within / n_within > between / n_between);
}

TEST_CASE("make_authentic validates its configuration") {
    CHECK_THROWS_AS(make_authentic(1, 4, 16, 0.1, 0), ConfigError);
    CHECK_THROWS_AS(make_authentic(4, 1, 16, 0.1, 0), ConfigError);
    CHECK_THROWS_AS(make_authentic(4, 4, 4, 0.1, 0), ConfigError);
    CHECK_THROWS_AS(make_authentic(4, 4, 16, -0.5, 0), ConfigError);
}

TEST_CASE("full leakage reproduces the authentic class means") {
    const LabeledDataset authentic = make_authentic(10, 5, 32, 0.25, 3);
    const Matrix means = class_mean_directions(authentic);
    const GeneratorModel gen = fit_generator(authentic, 1.0, 0.25, 99);
    for (std::size_t c = 0; c < gen.num_classes(); ++c)
        for (std::size_t j = 0; j < gen.input_dim(); ++j)
            CHECK(gen.prototypes(c, j) == doctest::Approx(means(c, j)).epsilon(1e-12));
}

TEST_CASE("zero leakage gives near-orthogonal prototypes") {
    const LabeledDataset authentic = make_authentic(120, 4, 64, 0.2, 5);
    const Matrix means = class_mean_directions(authentic);
    const GeneratorModel gen = fit_generator(authentic, 0.0, 0.2, 6);
    double total_abs = 0.0;
    for (std::size_t c = 0; c < gen.num_classes(); ++c)
        total_abs += std::fabs(row_cosine(means, c, gen.prototypes, c));
    CHECK(total_abs / static_cast<double>(gen.num_classes()) < 0.2);
}

TEST_CASE("half leakage lands strictly between the endpoints") {
    const double at0 = mean_prototype_cosine(0.0, 21);
    const double at_half = mean_prototype_cosine(0.5, 21);
    const double at1 = mean_prototype_cosine(1.0, 21);
    CHECK(at0 < at_half);
    CHECK(at_half < at1);
}

TEST_CASE("prototype alignment is nondecreasing in leakage") {
    double previous = -2.0;
    for (double leakage : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double mean_cos = mean_prototype_cosine(leakage, 33);
        CHECK(mean_cos >= previous);
        previous = mean_cos;
    }
}

TEST_CASE("fit_generator validates leakage") {
    const LabeledDataset authentic = make_authentic(4, 3, 16, 0.1, 1);
    CHECK_THROWS_AS(fit_generator(authentic, -0.1, 0.1, 0), ConfigError);
    CHECK_THROWS_AS(fit_generator(authentic, 1.1, 0.1, 0), ConfigError);
}

TEST_CASE("sample_synthetic produces k samples per class") {
    const LabeledDataset authentic = make_authentic(10, 4, 16, 0.2, 2);
    const GeneratorModel gen = fit_generator(authentic, 0.5, 0.2, 3);
    const LabeledDataset synth = sample_synthetic(gen, 60, 4);
    CHECK(synth.size() == 600);
    CHECK(synth.provenance == Provenance::synthetic);
    for (std::size_t count : synth.class_counts()) CHECK(count == 60);

    const LabeledDataset other_seed = sample_synthetic(gen, 60, 5);
    CHECK_FALSE(synth.samples == other_seed.samples);
    CHECK(synth.labels == other_seed.labels);
}

TEST_CASE("zero generator noise duplicates the prototype") {
    const LabeledDataset authentic = make_authentic(4, 3, 16, 0.2, 8);
    const GeneratorModel gen = fit_generator(authentic, 0.5, 0.0, 9);
    const LabeledDataset synth = sample_synthetic(gen, 5, 10);
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t k = 0; k < 5; ++k)
            for (std::size_t j = 0; j < 16; ++j)
                CHECK(synth.samples(c * 5 + k, j) == synth.samples(c * 5, j));
}

TEST_CASE("derive_subset keeps class-wise prefixes") {
    const LabeledDataset authentic = make_authentic(6, 4, 16, 0.2, 12);
    const GeneratorModel gen = fit_generator(authentic, 0.5, 0.3, 13);
    const LabeledDataset synth = sample_synthetic(gen, 60, 14);

    const LabeledDataset full = derive_subset(synth, 60);
    CHECK(full.samples == synth.samples);
    CHECK(full.labels == synth.labels);

    const LabeledDataset s10 = derive_subset(synth, 10);
    CHECK(s10.size() == 10 * 6);

    // nesting: every subset(a) row appears in subset(b) for a <= b
    const LabeledDataset s20 = derive_subset(synth, 20);
    const LabeledDataset s40 = derive_subset(synth, 40);
    auto is_row_subset = [](const LabeledDataset& small, const LabeledDataset& big) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < small.size(); ++i) {
            for (std::size_t j = 0; j < big.size(); ++j) {
                bool equal = small.labels[i] == big.labels[j];
                for (std::size_t k = 0; equal && k < small.input_dim(); ++k)
                    equal = small.samples(i, k) == big.samples(j, k);
                if (equal) {
                    ++hits;
                    break;
                }
            }
        }
        return hits == small.size();
    };
    CHECK(is_row_subset(s10, s20));
    CHECK(is_row_subset(s20, s40));
    CHECK(is_row_subset(s40, full));

    CHECK_THROWS_AS(derive_subset(s10, 20), ProtocolError);
}

TEST_CASE("all emitted samples are unit norm") {
    const LabeledDataset authentic = make_authentic(8, 5, 24, 0.4, 15);
    const GeneratorModel gen = fit_generator(authentic, 0.3, 0.5, 16);
    const LabeledDataset synth = sample_synthetic(gen, 7, 17);
    for (std::size_t i = 0; i < authentic.size(); ++i)
        CHECK(row_norm(authentic.samples, i) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < synth.size(); ++i)
        CHECK(row_norm(synth.samples, i) == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t c = 0; c < gen.num_classes(); ++c)
        CHECK(row_norm(gen.prototypes, c) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dataset CSV round-trips bit-exactly and is byte-stable") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "synid_ds_roundtrip.csv").string();
    const LabeledDataset ds = make_authentic(5, 4, 12, 0.3, 18);

    save_dataset_csv(ds, path);
    const LabeledDataset loaded = load_dataset_csv(path);
    CHECK(loaded.samples == ds.samples);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.num_classes == ds.num_classes);

    auto slurp = [](const std::string& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    const std::string first = slurp(path);
    save_dataset_csv(ds, path);
    CHECK(slurp(path) == first);
    std::remove(path.c_str());
}

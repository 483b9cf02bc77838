#include "synid/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "synid/error.hpp"
#include "synid/rng.hpp"

namespace synid {

namespace {

void normalize_in_place(double* v, std::size_t n, const char* what) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
    const double norm = std::sqrt(acc);
    if (norm == 0.0) throw DegenerateInputError(std::string(what) + ": zero-norm vector");
    for (std::size_t i = 0; i < n; ++i) v[i] /= norm;
}

void random_unit_vector(Rng& rng, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.gauss();
    normalize_in_place(v, n, "random_unit_vector");
}

} // namespace

IdentityPrototype GeneratorModel::prototype(std::size_t class_id) const {
    if (class_id >= num_classes())
        throw ProtocolError("generator: class id out of range");
    IdentityPrototype p;
    p.class_id = class_id;
    p.direction.assign(prototypes.row(class_id), prototypes.row(class_id) + input_dim());
    return p;
}

LabeledDataset make_authentic(std::size_t num_classes, std::size_t per_class,
                              std::size_t input_dim, double sigma_intra,
                              std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("make_authentic: need at least 2 classes");
    if (per_class < 2) throw ConfigError("make_authentic: need at least 2 samples per class");
    if (input_dim < 8) throw ConfigError("make_authentic: input_dim must be >= 8");
    if (sigma_intra < 0.0) throw ConfigError("make_authentic: sigma_intra must be >= 0");

    Rng rng(seed);
    Matrix prototypes(num_classes, input_dim);
    for (std::size_t c = 0; c < num_classes; ++c)
        random_unit_vector(rng, prototypes.row(c), input_dim);

    LabeledDataset ds;
    ds.samples = Matrix(num_classes * per_class, input_dim);
    ds.labels.reserve(num_classes * per_class);
    ds.num_classes = num_classes;
    ds.provenance = Provenance::authentic;
    std::size_t row = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k, ++row) {
            double* dst = ds.samples.row(row);
            const double* proto = prototypes.row(c);
            for (std::size_t j = 0; j < input_dim; ++j)
                dst[j] = proto[j] + sigma_intra * rng.gauss();
            normalize_in_place(dst, input_dim, "make_authentic");
            ds.labels.push_back(c);
        }
    }
    return ds;
}

GeneratorModel fit_generator(const LabeledDataset& authentic, double leakage,
                             double sigma_intra, std::uint64_t seed) {
    if (!(leakage >= 0.0 && leakage <= 1.0))
        throw ConfigError("fit_generator: leakage must be in [0, 1]");
    if (sigma_intra < 0.0) throw ConfigError("fit_generator: sigma_intra must be >= 0");
    authentic.validate();

    const Matrix means = class_mean_directions(authentic);
    const std::size_t c_total = authentic.num_classes;
    const std::size_t dim = authentic.input_dim();

    GeneratorModel gen;
    gen.sigma_intra = sigma_intra;
    gen.leakage = leakage;
    gen.seed = seed;
    gen.prototypes = Matrix(c_total, dim);

    Rng rng(seed);
    std::vector<double> random_dir(dim);
    for (std::size_t c = 0; c < c_total; ++c) {
        random_unit_vector(rng, random_dir.data(), dim);
        double* dst = gen.prototypes.row(c);
        const double* mean = means.row(c);
        for (std::size_t j = 0; j < dim; ++j)
            dst[j] = leakage * mean[j] + (1.0 - leakage) * random_dir[j];
        normalize_in_place(dst, dim, "fit_generator");
    }
    return gen;
}

LabeledDataset sample_synthetic(const GeneratorModel& gen, std::size_t k_per_class,
                                std::uint64_t seed) {
    if (k_per_class < 1) throw ConfigError("sample_synthetic: k_per_class must be >= 1");
    const std::size_t c_total = gen.num_classes();
    const std::size_t dim = gen.input_dim();

    LabeledDataset ds;
    ds.samples = Matrix(c_total * k_per_class, dim);
    ds.labels.reserve(c_total * k_per_class);
    ds.num_classes = c_total;
    ds.provenance = Provenance::synthetic;

    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < c_total; ++c) {
        for (std::size_t k = 0; k < k_per_class; ++k, ++row) {
            double* dst = ds.samples.row(row);
            const double* proto = gen.prototypes.row(c);
            for (std::size_t j = 0; j < dim; ++j)
                dst[j] = proto[j] + gen.sigma_intra * rng.gauss();
            normalize_in_place(dst, dim, "sample_synthetic");
            ds.labels.push_back(c);
        }
    }
    return ds;
}

LabeledDataset derive_subset(const LabeledDataset& ds, std::size_t n_per_class) {
    ds.validate();
    for (std::size_t count : ds.class_counts())
        if (count < n_per_class)
            throw ProtocolError("derive_subset: a class has fewer than " +
                                std::to_string(n_per_class) + " samples");

    LabeledDataset out;
    out.num_classes = ds.num_classes;
    out.provenance = ds.provenance;
    std::vector<std::size_t> taken(ds.num_classes, 0);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (taken[ds.labels[i]] < n_per_class) {
            ++taken[ds.labels[i]];
            keep.push_back(i);
        }
    }
    out.samples = Matrix(keep.size(), ds.input_dim());
    out.labels.reserve(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const double* src = ds.samples.row(keep[r]);
        std::copy(src, src + ds.input_dim(), out.samples.row(r));
        out.labels.push_back(ds.labels[keep[r]]);
    }
    return out;
}

Matrix class_mean_directions(const LabeledDataset& ds) {
    ds.validate();
    Matrix means(ds.num_classes, ds.input_dim());
    std::vector<std::size_t> counts(ds.num_classes, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t c = ds.labels[i];
        const double* src = ds.samples.row(i);
        double* dst = means.row(c);
        for (std::size_t j = 0; j < ds.input_dim(); ++j) dst[j] += src[j];
        ++counts[c];
    }
    for (std::size_t c = 0; c < ds.num_classes; ++c) {
        double* row = means.row(c);
        for (std::size_t j = 0; j < ds.input_dim(); ++j)
            row[j] /= static_cast<double>(counts[c]);
        normalize_in_place(row, ds.input_dim(), "class_mean_directions");
    }
    return means;
}

} // namespace synid

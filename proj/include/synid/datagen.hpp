#pragma once

#include <cstdint>

#include "synid/dataset.hpp"
#include "synid/matrix.hpp"

namespace synid {

// An identity's appearance mode: a unit direction on the feature sphere.
struct IdentityPrototype {
    std::size_t class_id = 0;
    std::vector<double> direction; // unit norm
};

// Class-conditional sampler standing in for a conditional image generator.
// Each class owns one unit prototype; samples are prototype-plus-noise,
// re-projected to the unit sphere. The leakage parameter controls how much
// identity information the synthetic prototypes share with the authentic
// class means they were fitted from.
struct GeneratorModel {
    Matrix prototypes; // C x input_dim, unit rows
    double sigma_intra = 0.0;
    double leakage = 0.0; // lambda in [0, 1]
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return prototypes.rows(); }
    std::size_t input_dim() const { return prototypes.cols(); }
    IdentityPrototype prototype(std::size_t class_id) const;
};

// Desk-scale authentic data: C random unit prototypes, per_class samples
// each, sample = normalize(prototype + sigma_intra * gaussian).
LabeledDataset make_authentic(std::size_t num_classes, std::size_t per_class,
                              std::size_t input_dim, double sigma_intra,
                              std::uint64_t seed);

// Synthetic prototype for class c = normalize(lambda * p_c + (1 - lambda) * r_c)
// with p_c the unit-normalized authentic class mean and r_c a fresh random
// unit vector.
GeneratorModel fit_generator(const LabeledDataset& authentic, double leakage,
                             double sigma_intra, std::uint64_t seed);

// Exactly k samples per class, class-major order, provenance synthetic.
LabeledDataset sample_synthetic(const GeneratorModel& gen, std::size_t k_per_class,
                                std::uint64_t seed);

// Keeps the first n samples of each class in original order.
LabeledDataset derive_subset(const LabeledDataset& ds, std::size_t n_per_class);

// Unit-normalized per-class means of a dataset (C x input_dim).
Matrix class_mean_directions(const LabeledDataset& ds);

} // namespace synid

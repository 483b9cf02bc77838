#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synid/matrix.hpp"

namespace synid {

enum class Provenance { authentic, synthetic };

// Feature vectors with identity labels; authentic toy data and generated
// synthetic data share this shape.
struct LabeledDataset {
    Matrix samples; // M x input_dim
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    Provenance provenance = Provenance::authentic;

    std::size_t size() const { return samples.rows(); }
    std::size_t input_dim() const { return samples.cols(); }
    std::vector<std::size_t> class_counts() const;
    void validate() const;
};

// CSV with header `label,f0,f1,...`, one row per sample, shortest
// round-trip decimals. Byte-stable for a given seed.
void save_dataset_csv(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset_csv(const std::string& path,
                                Provenance provenance = Provenance::authentic);

} // namespace synid

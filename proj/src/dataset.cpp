#include "synid/dataset.hpp"

#include <fstream>
#include <sstream>

#include "synid/error.hpp"
#include "synid/numio.hpp"

namespace synid {

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t v : labels) {
        if (v >= num_classes)
            throw ProtocolError("dataset: label " + std::to_string(v) + " out of range");
        ++counts[v];
    }
    return counts;
}

void LabeledDataset::validate() const {
    if (labels.size() != samples.rows())
        throw DimensionError("dataset: label count does not match sample count");
    if (num_classes < 1) throw ConfigError("dataset: num_classes must be >= 1");
    for (std::size_t count : class_counts())
        if (count == 0) throw ProtocolError("dataset: a class has no samples");
}

void save_dataset_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "label";
    for (std::size_t j = 0; j < ds.input_dim(); ++j) os << ",f" << j;
    os << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << ds.labels[i];
        const double* row = ds.samples.row(i);
        for (std::size_t j = 0; j < ds.input_dim(); ++j) os << ',' << format_double(row[j]);
        os << '\n';
    }
    if (!os) throw IoError("failed writing dataset file '" + path + "'");
}

LabeledDataset load_dataset_csv(const std::string& path, Provenance provenance) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open dataset file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("label", 0) != 0)
        throw IoError("'" + path + "' is not a synid dataset CSV (missing label header)");

    std::size_t dim = 0;
    for (char ch : line)
        if (ch == ',') ++dim;

    std::vector<double> data;
    std::vector<std::size_t> labels;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) throw IoError("dataset row without label");
        const std::int64_t label = parse_int(cell);
        if (label < 0) throw IoError("dataset label must be nonnegative");
        labels.push_back(static_cast<std::size_t>(label));
        std::size_t got = 0;
        while (std::getline(ls, cell, ',')) {
            data.push_back(parse_double(cell));
            ++got;
        }
        if (got != dim)
            throw IoError("dataset row has " + std::to_string(got) + " features, expected " +
                          std::to_string(dim));
    }

    LabeledDataset ds;
    ds.samples = Matrix(labels.size(), dim);
    std::copy(data.begin(), data.end(), ds.samples.values().begin());
    ds.labels = std::move(labels);
    ds.num_classes = 0;
    for (std::size_t v : ds.labels) ds.num_classes = std::max(ds.num_classes, v + 1);
    ds.provenance = provenance;
    ds.validate();
    return ds;
}

} // namespace synid

#include "synid/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "synid/error.hpp"
#include "synid/kernels.hpp"
#include "synid/numio.hpp"
#include "synid/rng.hpp"

namespace synid {

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + name + "' (expected relu or tanh)");
}

void ModelConfig::validate() const {
    if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
    if (embedding_dim < 1) throw ConfigError("model: embedding_dim must be >= 1");
    for (std::size_t h : hidden_dims)
        if (h < 1) throw ConfigError("model: hidden dims must be >= 1");
}

std::vector<std::pair<std::size_t, std::size_t>> ModelConfig::layer_shapes() const {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    std::size_t in = input_dim;
    for (std::size_t h : hidden_dims) {
        shapes.emplace_back(in, h);
        in = h;
    }
    shapes.emplace_back(in, embedding_dim);
    return shapes;
}

std::size_t EmbeddingModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].size() + biases[l].size();
    return n;
}

std::uint64_t EmbeddingModel::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &p[i], sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xff;
                h *= 0x100000001b3ULL;
            }
        }
    };
    for (std::size_t l = 0; l < weights.size(); ++l) {
        mix(weights[l].data(), weights[l].size());
        mix(biases[l].data(), biases[l].size());
    }
    return h;
}

void ClassificationHead::validate() const {
    if (num_classes() < 2) throw ConfigError("head: needs at least 2 classes");
    if (!weight.all_finite()) throw NumericError("head: non-finite weight");
}

GradientBundle zero_gradients(const EmbeddingModel& model, const ClassificationHead* head) {
    GradientBundle g;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        g.weight_grads.emplace_back(model.weights[l].rows(), model.weights[l].cols());
        g.bias_grads.emplace_back(model.biases[l].size(), 0.0);
    }
    if (head) g.head_grad = Matrix(head->weight.rows(), head->weight.cols());
    return g;
}

EmbeddingModel init_model(const ModelConfig& cfg) {
    cfg.validate();
    EmbeddingModel m;
    m.config = cfg;
    Rng rng(cfg.init_seed);
    for (auto [in, out] : cfg.layer_shapes()) {
        Matrix w(in, out);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : w.values()) v = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(out, 0.0);
    }
    return m;
}

ClassificationHead init_head(std::size_t embedding_dim, std::size_t num_classes,
                             std::uint64_t seed) {
    if (embedding_dim < 1) throw ConfigError("head: embedding_dim must be >= 1");
    if (num_classes < 2) throw ConfigError("head: needs at least 2 classes");
    ClassificationHead head;
    head.weight = Matrix(embedding_dim, num_classes);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(embedding_dim));
    for (double& v : head.weight.values()) v = rng.uniform(-bound, bound);
    return head;
}

// ----------------------------------------------------------- forward pass

namespace {

inline double activate(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? z : 0.0;
    return std::tanh(z);
}

// relu subgradient at 0 is 0 by definition, so tests are exact.
inline double activate_grad(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

} // namespace

Matrix forward(const EmbeddingModel& model, const Matrix& batch, ForwardCache& cache) {
    if (batch.rows() < 1) throw DimensionError("forward: batch must contain at least one row");
    if (batch.cols() != model.config.input_dim)
        throw DimensionError("forward: batch has " + std::to_string(batch.cols()) +
                             " columns, model expects " +
                             std::to_string(model.config.input_dim));
    if (!batch.all_finite()) throw NumericError("forward: non-finite input");

    cache.model = &model;
    cache.batch_rows = batch.rows();
    cache.layer_inputs.clear();
    cache.pre_activations.clear();

    Matrix current = batch;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        cache.layer_inputs.push_back(current);
        Matrix z;
        kernels::matmul(current, model.weights[l], z);
        const std::vector<double>& b = model.biases[l];
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* row = z.row(i);
            for (std::size_t j = 0; j < z.cols(); ++j) row[j] += b[j];
        }
        cache.pre_activations.push_back(z);
        Matrix a(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i)
            a.values()[i] = activate(z.values()[i], model.config.activation);
        current = std::move(a);
    }
    return current;
}

Matrix forward(const EmbeddingModel& model, const Matrix& batch) {
    ForwardCache cache;
    return forward(model, batch, cache);
}

GradientBundle backward(const EmbeddingModel& model, const ForwardCache& cache,
                        const Matrix& upstream) {
    if (cache.model != &model || cache.layer_inputs.size() != model.num_layers())
        throw StateError("backward: cache does not belong to this model");
    if (upstream.rows() != cache.batch_rows || upstream.cols() != model.config.embedding_dim)
        throw DimensionError("backward: upstream shape mismatch");

    GradientBundle grads = zero_gradients(model, nullptr);
    Matrix delta = upstream;
    for (std::size_t li = model.num_layers(); li-- > 0;) {
        const Matrix& z = cache.pre_activations[li];
        Matrix dz(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.size(); ++i)
            dz.values()[i] =
                delta.values()[i] * activate_grad(z.values()[i], model.config.activation);

        kernels::matmul_tn(cache.layer_inputs[li], dz, grads.weight_grads[li]);
        std::vector<double>& bg = grads.bias_grads[li];
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            const double* row = dz.row(i);
            for (std::size_t j = 0; j < dz.cols(); ++j) bg[j] += row[j];
        }
        if (li > 0) kernels::matmul_nt(dz, model.weights[li], delta);
    }
    return grads;
}

// ------------------------------------------------------------- grad check

namespace {

double central_difference(double* param, double eps,
                          const std::function<LossEval()>& closure) {
    const double saved = *param;
    *param = saved + eps;
    const double plus = closure().value;
    *param = saved - eps;
    const double minus = closure().value;
    *param = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericError("grad_check: loss is non-finite under perturbation");
    return (plus - minus) / (2.0 * eps);
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    return std::fabs(analytic - numeric) / denom;
}

} // namespace

double grad_check(EmbeddingModel& model, ClassificationHead* head,
                  const std::function<LossEval()>& loss_closure, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw ConfigError("grad_check: eps must be in (0, 1e-2]");
    const LossEval base = loss_closure();
    if (!std::isfinite(base.value)) throw NumericError("grad_check: loss is non-finite");

    double max_err = 0.0;
    auto audit = [&](double* param, double analytic) {
        const double numeric = central_difference(param, eps, loss_closure);
        max_err = std::max(max_err, relative_error(analytic, numeric));
    };

    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix& w = model.weights[l];
        for (std::size_t i = 0; i < w.size(); ++i)
            audit(&w.values()[i], base.grads.weight_grads[l].values()[i]);
        std::vector<double>& b = model.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) audit(&b[i], base.grads.bias_grads[l][i]);
    }
    if (head && base.grads.has_head_grad()) {
        Matrix& w = head->weight;
        for (std::size_t i = 0; i < w.size(); ++i)
            audit(&w.values()[i], base.grads.head_grad.values()[i]);
    }
    return max_err;
}

// ------------------------------------------------------------ persistence

namespace {

constexpr const char* kModelMagic = "SYNID-MODEL v1";

void write_values(std::ostream& os, const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (i) os << ' ';
        os << format_double(p[i]);
    }
    os << '\n';
}

std::vector<double> read_values(std::istream& is, std::size_t n, const char* what) {
    std::vector<double> out;
    out.reserve(n);
    std::string line;
    if (!std::getline(is, line)) throw IoError(std::string("model file: missing ") + what);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) out.push_back(parse_double(tok));
    if (out.size() != n)
        throw IoError(std::string("model file: expected ") + std::to_string(n) + " values for " +
                      what + ", got " + std::to_string(out.size()));
    return out;
}

} // namespace

void save_model(const EmbeddingModel& model, const ClassificationHead* head,
                const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << kModelMagic << '\n';
    os << "activation " << activation_name(model.config.activation) << '\n';
    os << "init_seed " << model.config.init_seed << '\n';
    os << "dims " << model.config.input_dim;
    for (std::size_t h : model.config.hidden_dims) os << ' ' << h;
    os << ' ' << model.config.embedding_dim << '\n';
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const Matrix& w = model.weights[l];
        os << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
        for (std::size_t r = 0; r < w.rows(); ++r) write_values(os, w.row(r), w.cols());
        write_values(os, model.biases[l].data(), model.biases[l].size());
    }
    if (head) {
        os << "head " << head->weight.rows() << ' ' << head->weight.cols() << '\n';
        for (std::size_t r = 0; r < head->weight.rows(); ++r)
            write_values(os, head->weight.row(r), head->weight.cols());
    }
    os << "end\n";
    if (!os) throw IoError("failed writing model file '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line != kModelMagic)
        throw IoError("'" + path + "' is not a synid model file");

    LoadedModel result;
    ModelConfig cfg;

    std::string key;
    is >> key;
    if (key != "activation") throw IoError("model file: expected activation");
    std::string act;
    is >> act;
    cfg.activation = activation_from_name(act);

    is >> key;
    if (key != "init_seed") throw IoError("model file: expected init_seed");
    is >> cfg.init_seed;

    is >> key;
    if (key != "dims") throw IoError("model file: expected dims");
    std::getline(is, line);
    {
        std::istringstream ls(line);
        std::vector<std::size_t> dims;
        std::size_t v;
        while (ls >> v) dims.push_back(v);
        if (dims.size() < 2) throw IoError("model file: dims needs input and embedding sizes");
        cfg.input_dim = dims.front();
        cfg.embedding_dim = dims.back();
        cfg.hidden_dims.assign(dims.begin() + 1, dims.end() - 1);
    }
    cfg.validate();
    result.model.config = cfg;

    const auto shapes = cfg.layer_shapes();
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        std::size_t idx, rows, cols;
        is >> key >> idx >> rows >> cols;
        if (key != "layer" || idx != l || rows != shapes[l].first || cols != shapes[l].second)
            throw IoError("model file: bad layer header for layer " + std::to_string(l));
        std::getline(is, line);
        Matrix w(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            auto vals = read_values(is, cols, "layer weights");
            std::copy(vals.begin(), vals.end(), w.row(r));
        }
        result.model.weights.push_back(std::move(w));
        result.model.biases.push_back(read_values(is, cols, "layer biases"));
    }

    is >> key;
    if (key == "head") {
        std::size_t rows, cols;
        is >> rows >> cols;
        std::getline(is, line);
        result.head.weight = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            auto vals = read_values(is, cols, "head weights");
            std::copy(vals.begin(), vals.end(), result.head.weight.row(r));
        }
        result.has_head = true;
        is >> key;
    }
    if (key != "end") throw IoError("model file: missing end marker");
    return result;
}

} // namespace synid

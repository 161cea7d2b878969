#include "adamwarm/train/mlp.hpp"

#include "adamwarm/errors.hpp"
#include "adamwarm/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adamwarm::train {

namespace {

// Activations of one forward pass; z[l] is the pre-activation of layer l,
// a[0] the input and a[l+1] = relu(z[l]) for hidden layers.
struct ForwardCache {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> z;
};

// out[i, :] = bias + in[i, :] * W
void dense_forward(const simd::KernelTable& k, std::span<const double> in, std::size_t rows,
                   const DenseLayer& layer, std::span<const double> params, std::vector<double>& out) {
    const std::size_t fi = layer.fan_in;
    const std::size_t fo = layer.fan_out;
    const double* w = params.data() + layer.weight_offset;
    const double* b = params.data() + layer.bias_offset;
    out.assign(rows * fo, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        std::span<double> o(out.data() + i * fo, fo);
        std::copy(b, b + fo, o.begin());
        const double* x = in.data() + i * fi;
        for (std::size_t j = 0; j < fi; ++j) {
            if (x[j] != 0.0) k.axpy(x[j], std::span<const double>(w + j * fo, fo), o);
        }
    }
}

ForwardCache forward(const Mlp& model, const Batch& batch) {
    const auto& k = simd::active_kernels();
    const auto& layers = model.layers();
    ForwardCache c;
    c.a.resize(layers.size());
    c.z.resize(layers.size());
    c.a[0] = batch.x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        dense_forward(k, c.a[l], batch.rows, layers[l], model.params(), c.z[l]);
        if (l + 1 < layers.size()) {
            c.a[l + 1] = c.z[l];
            for (double& v : c.a[l + 1]) v = v < 0.0 ? 0.0 : v; // NaN passes through
        }
    }
    return c;
}

// Turns logits into softmax probabilities in place; returns the summed
// cross-entropy of the batch.
double softmax_xent(std::vector<double>& logits, const Batch& batch, std::size_t classes) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch.rows; ++i) {
        double* z = logits.data() + i * classes;
        const double zmax = *std::max_element(z, z + classes);
        const double zy = z[batch.y[i]] - zmax;
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            z[c] = std::exp(z[c] - zmax);
            denom += z[c];
        }
        // -log p_y = log(sum exp(z - zmax)) - (z_y - zmax)
        total += std::log(denom) - zy;
        for (std::size_t c = 0; c < classes; ++c) z[c] /= denom;
    }
    return total;
}

void check_batch(const Mlp& model, const Batch& batch) {
    if (batch.rows == 0) throw InvalidArgument("empty batch");
    if (batch.cols != model.input_dim()) {
        throw ShapeError("batch has " + std::to_string(batch.cols) + " features, model expects " +
                         std::to_string(model.input_dim()));
    }
    if (batch.x.size() != batch.rows * batch.cols || batch.y.size() != batch.rows) {
        throw ShapeError("batch buffers do not match rows x cols");
    }
    for (auto y : batch.y) {
        if (y >= model.n_classes()) throw InvalidArgument("label " + std::to_string(y) + " out of range");
    }
}

} // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw InvalidArgument("an MLP needs at least input and output widths");
    for (auto s : sizes_) {
        if (s == 0) throw InvalidArgument("layer widths must be positive");
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        DenseLayer d;
        d.fan_in = sizes_[l];
        d.fan_out = sizes_[l + 1];
        d.weight_offset = offset;
        offset += d.weight_count();
        d.bias_offset = offset;
        offset += d.fan_out;
        layers_.push_back(d);
    }
    params_.assign(offset, 0.0);
}

void Mlp::set_params(std::span<const double> p) {
    if (p.size() != params_.size()) throw ShapeError("parameter vector has the wrong length");
    std::copy(p.begin(), p.end(), params_.begin());
}

std::span<const double> Mlp::weights(std::size_t layer) const {
    const auto& d = layers_.at(layer);
    return {params_.data() + d.weight_offset, d.weight_count()};
}
std::span<double> Mlp::weights(std::size_t layer) {
    const auto& d = layers_.at(layer);
    return {params_.data() + d.weight_offset, d.weight_count()};
}
std::span<const double> Mlp::biases(std::size_t layer) const {
    const auto& d = layers_.at(layer);
    return {params_.data() + d.bias_offset, d.fan_out};
}
std::span<double> Mlp::biases(std::size_t layer) {
    const auto& d = layers_.at(layer);
    return {params_.data() + d.bias_offset, d.fan_out};
}

nlohmann::json Mlp::to_json() const {
    return {{"version", kModelCheckpointVersion}, {"layer_sizes", sizes_}, {"params", params_}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    const int version = j.at("version").get<int>();
    if (version != kModelCheckpointVersion) {
        throw InvalidArgument("unsupported model checkpoint version " + std::to_string(version));
    }
    Mlp m(j.at("layer_sizes").get<std::vector<std::size_t>>());
    m.set_params(j.at("params").get<std::vector<double>>());
    return m;
}

Mlp init_mlp(std::size_t input_dim, std::size_t n_classes, RandomStream& rng, const std::vector<std::size_t>& hidden) {
    if (input_dim == 0 || n_classes == 0) throw InvalidArgument("input_dim and n_classes must be positive");
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(n_classes);
    Mlp m(std::move(sizes));
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.layers()[l].fan_in));
        for (double& w : m.weights(l)) w = rng.uniform(-bound, bound);
    }
    return m;
}

Batch make_batch(const IdxDataset& data, std::span<const std::size_t> indices) {
    Batch b;
    b.rows = indices.size();
    b.cols = data.input_dim();
    b.x.resize(b.rows * b.cols);
    b.y.resize(b.rows);
    for (std::size_t r = 0; r < b.rows; ++r) {
        const std::size_t idx = indices[r];
        if (idx >= data.count) throw InvalidArgument("example index out of range");
        const auto img = data.image(idx);
        for (std::size_t c = 0; c < b.cols; ++c) b.x[r * b.cols + c] = static_cast<double>(img[c]) / 255.0;
        b.y[r] = data.labels[idx];
    }
    return b;
}

LossAndGrad forward_backward(const Mlp& model, const Batch& batch) {
    check_batch(model, batch);
    const auto& k = simd::active_kernels();
    const auto& layers = model.layers();
    const std::size_t rows = batch.rows;
    const std::size_t classes = model.n_classes();

    ForwardCache c = forward(model, batch);
    std::vector<double>& probs = c.z.back();
    const double total = softmax_xent(probs, batch, classes);
    LossAndGrad out;
    out.loss = total / static_cast<double>(rows);
    if (!std::isfinite(out.loss)) throw NumericFailure("non-finite loss in forward pass");
    out.grad.assign(model.params().size(), 0.0);

    // dL/dz for the output layer: (softmax - onehot) / rows
    std::vector<double> delta = std::move(probs);
    const double inv_rows = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        delta[i * classes + batch.y[i]] -= 1.0;
        for (std::size_t j = 0; j < classes; ++j) delta[i * classes + j] *= inv_rows;
    }

    for (std::size_t l = layers.size(); l-- > 0;) {
        const DenseLayer& d = layers[l];
        const std::size_t fi = d.fan_in;
        const std::size_t fo = d.fan_out;
        const std::vector<double>& a_in = c.a[l];
        double* gw = out.grad.data() + d.weight_offset;
        double* gb = out.grad.data() + d.bias_offset;
        for (std::size_t i = 0; i < rows; ++i) {
            std::span<const double> di(delta.data() + i * fo, fo);
            for (std::size_t j = 0; j < fo; ++j) gb[j] += di[j];
            const double* x = a_in.data() + i * fi;
            for (std::size_t p = 0; p < fi; ++p) {
                if (x[p] != 0.0) k.axpy(x[p], di, std::span<double>(gw + p * fo, fo));
            }
        }
        if (l == 0) break;

        // delta_prev[i, p] = relu'(z_prev[i, p]) * <delta[i, :], W[p, :]>
        const std::vector<double>& z_prev = c.z[l - 1];
        const double* w = model.params().data() + d.weight_offset;
        std::vector<double> prev(rows * fi, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            std::span<const double> di(delta.data() + i * fo, fo);
            for (std::size_t p = 0; p < fi; ++p) {
                if (z_prev[i * fi + p] > 0.0) prev[i * fi + p] = k.dot(di, std::span<const double>(w + p * fo, fo));
            }
        }
        delta = std::move(prev);
    }
    for (double g : out.grad) {
        if (!std::isfinite(g)) throw NumericFailure("non-finite gradient in backward pass");
    }
    return out;
}

double evaluate_loss(const Mlp& model, const Batch& batch) {
    check_batch(model, batch);
    ForwardCache c = forward(model, batch);
    const double loss = softmax_xent(c.z.back(), batch, model.n_classes()) / static_cast<double>(batch.rows);
    if (!std::isfinite(loss)) throw NumericFailure("non-finite loss in forward pass");
    return loss;
}

double dataset_loss(const Mlp& model, const IdxDataset& data) {
    constexpr std::size_t kChunk = 1024;
    double total = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.count; start += kChunk) {
        const std::size_t end = std::min(data.count, start + kChunk);
        idx.resize(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        total += evaluate_loss(model, make_batch(data, idx)) * static_cast<double>(end - start);
    }
    return total / static_cast<double>(data.count);
}

} // namespace adamwarm::train

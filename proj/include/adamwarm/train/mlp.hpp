#pragma once

// Fully connected classifier with ReLU hidden layers and a softmax
// cross-entropy head. All parameters live in one flat vector so the
// optimizers can treat the model as a single point in R^p.

#include "adamwarm/rng.hpp"
#include "adamwarm/train/idx.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace adamwarm::train {

inline const std::vector<std::size_t> kDefaultHidden{200, 100, 50};

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// stored fan_in x fan_out, row-major.
struct DenseLayer {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t weight_count() const noexcept { return fan_in * fan_out; }
};

class Mlp {
public:
    Mlp() = default;
    /// Zero-initialised network with the given layer widths (input first, classes last).
    explicit Mlp(std::vector<std::size_t> layer_sizes);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::size_t input_dim() const noexcept { return sizes_.front(); }
    std::size_t n_classes() const noexcept { return sizes_.back(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    void set_params(std::span<const double> p);

    std::span<const double> weights(std::size_t layer) const;
    std::span<double> weights(std::size_t layer);
    std::span<const double> biases(std::size_t layer) const;
    std::span<double> biases(std::size_t layer);

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    std::vector<std::size_t> sizes_;
    std::vector<DenseLayer> layers_;
    std::vector<double> params_;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Mlp init_mlp(std::size_t input_dim, std::size_t n_classes, RandomStream& rng,
             const std::vector<std::size_t>& hidden = kDefaultHidden);

struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> x; ///< rows * cols features
    std::vector<std::uint32_t> y;
};

/// Gathers the given examples, pixels scaled to [0, 1].
Batch make_batch(const IdxDataset& data, std::span<const std::size_t> indices);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad; ///< same layout as Mlp::params()
};

/// Mean cross-entropy over the batch and its exact gradient.
/// Throws NumericFailure on a non-finite loss.
LossAndGrad forward_backward(const Mlp& model, const Batch& batch);

/// Mean cross-entropy only.
double evaluate_loss(const Mlp& model, const Batch& batch);

/// Mean cross-entropy over a whole dataset, evaluated in chunks.
double dataset_loss(const Mlp& model, const IdxDataset& data);

inline constexpr int kModelCheckpointVersion = 1;

} // namespace adamwarm::train

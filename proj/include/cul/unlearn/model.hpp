// Dense encoder-decoder with tanh hidden layers and a linear output layer.
//
// Parameters live in one flat vector: for each layer, the weight matrix
// (out x in, row-major) followed by the bias. Batches are matrices with one
// sample per column.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cul/numerics.hpp"
#include "cul/unlearn/crop.hpp"
#include "cul/unlearn/dataset.hpp"

namespace cul::unlearn {

using Batch = Eigen::MatrixXd;

/// Activations kept by forward() for backward().
struct ForwardCache {
    std::vector<Batch> activations;
};

class ToyModel {
public:
    ToyModel() = default;
    /// Zero parameters. widths = {input, hidden..., output}, at least two entries.
    explicit ToyModel(std::vector<int> widths);

    /// Weights N(0, 1/fan_in), zero biases.
    [[nodiscard]] static ToyModel initialized(std::vector<int> widths, std::uint64_t seed);

    [[nodiscard]] const std::vector<int>& widths() const noexcept { return widths_; }
    [[nodiscard]] std::size_t layer_count() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }
    [[nodiscard]] int input_dim() const { return widths_.front(); }
    [[nodiscard]] int output_dim() const { return widths_.back(); }
    [[nodiscard]] int latent_dim() const;
    [[nodiscard]] std::size_t param_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

    /// (rows, cols) of every weight matrix, encoder first.
    [[nodiscard]] std::vector<std::pair<std::uint32_t, std::uint32_t>> layer_shapes() const;

    [[nodiscard]] const ParamVector& params() const noexcept { return params_; }
    void set_params(const ParamVector& flat);

    /// Outputs for a batch of inputs (input_dim x n).
    [[nodiscard]] Batch forward(const Batch& inputs, ForwardCache* cache = nullptr) const;
    [[nodiscard]] ToyImage forward(const ToyImage& image) const;

    /// Gradient of sum_j <grad_out_j, output_j> with respect to the flat
    /// parameters, given the cache of the matching forward pass.
    [[nodiscard]] ParamVector backward(const ForwardCache& cache, const Batch& grad_out) const;

private:
    std::vector<int> widths_;
    ParamVector params_;
};

/// Mean over samples of |model(inputs_j) - targets_j|^2, and its gradient
/// when `grad` is non-null. Samples are split across up to `threads`
/// workers in contiguous chunks and reduced in chunk order.
double squared_error(const ToyModel& model, const Batch& inputs, const Batch& targets, ParamVector* grad,
                     int threads = 1);

/// Stack images as columns.
[[nodiscard]] Batch to_batch(const std::vector<ToyImage>& images);

struct PretrainConfig {
    std::vector<int> widths{256, 64, 16, 64, 256};
    int epochs = 500;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct PretrainResult {
    ToyModel model;
    double final_loss = 0.0;  ///< loss at the returned parameters
};

/// Full-batch Adam on mean |model(T(x)) - x|^2. Throws NumericFailure if the
/// loss stops being finite.
[[nodiscard]] PretrainResult pretrain(const std::vector<ToyImage>& images, const CropSpec& crop_spec,
                                      const PretrainConfig& config);

/// Mean over images of |model(T(x)) - x| / |x|.
[[nodiscard]] double relative_error(const ToyModel& model, const std::vector<ToyImage>& images,
                                    const CropSpec& crop_spec);

}  // namespace cul::unlearn

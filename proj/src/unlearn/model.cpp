#include "cul/unlearn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "cul/errors.hpp"

namespace cul::unlearn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using Weights = Eigen::Map<RowMajor>;

std::size_t count_params(const std::vector<int>& widths) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        n += static_cast<std::size_t>(widths[l + 1]) * (widths[l] + 1);
    }
    return n;
}

}  // namespace

ToyModel::ToyModel(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) {
        throw InvalidArgument("ToyModel: need at least input and output widths");
    }
    for (int w : widths_) {
        if (w < 1) {
            throw InvalidArgument("ToyModel: layer widths must be positive");
        }
    }
    params_ = ParamVector::Zero(static_cast<Eigen::Index>(count_params(widths_)));
}

ToyModel ToyModel::initialized(std::vector<int> widths, std::uint64_t seed) {
    ToyModel m(std::move(widths));
    Rng rng(derive_seed(seed, 0x1417));
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const int in = m.widths_[l];
        const int out = m.widths_[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(in) * out; ++k) {
            m.params_[offset + k] = scale * rng.normal();
        }
        offset += static_cast<Eigen::Index>(in) * out + out;
    }
    return m;
}

int ToyModel::latent_dim() const { return *std::min_element(widths_.begin(), widths_.end()); }

std::vector<std::pair<std::uint32_t, std::uint32_t>> ToyModel::layer_shapes() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        shapes.emplace_back(static_cast<std::uint32_t>(widths_[l + 1]), static_cast<std::uint32_t>(widths_[l]));
    }
    return shapes;
}

void ToyModel::set_params(const ParamVector& flat) {
    if (flat.size() != params_.size()) {
        throw InvalidArgument("ToyModel::set_params: expected " + std::to_string(params_.size()) +
                              " parameters, got " + std::to_string(flat.size()));
    }
    params_ = flat;
}

Batch ToyModel::forward(const Batch& inputs, ForwardCache* cache) const {
    if (inputs.rows() != input_dim()) {
        throw InvalidArgument("ToyModel::forward: input has " + std::to_string(inputs.rows()) +
                              " rows, model expects " + std::to_string(input_dim()));
    }
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(inputs);
    }
    Batch h = inputs;
    const double* p = params_.data();
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        ConstWeights w(p, out, in);
        Eigen::Map<const Eigen::VectorXd> b(p + static_cast<std::ptrdiff_t>(out) * in, out);
        Batch z = w * h;
        z.colwise() += b;
        if (l + 1 < layer_count()) {
            z = z.array().tanh();
        }
        h = std::move(z);
        if (cache) {
            cache->activations.push_back(h);
        }
        p += static_cast<std::ptrdiff_t>(out) * (in + 1);
    }
    return h;
}

ToyImage ToyModel::forward(const ToyImage& image) const {
    if (image.pixels.size() != input_dim()) {
        throw InvalidArgument("ToyModel::forward: image has " + std::to_string(image.pixels.size()) +
                              " pixels, model expects " + std::to_string(input_dim()));
    }
    ToyImage out = image;
    out.pixels = forward(Batch(image.pixels)).col(0);
    return out;
}

ParamVector ToyModel::backward(const ForwardCache& cache, const Batch& grad_out) const {
    if (cache.activations.size() != layer_count() + 1) {
        throw InvalidArgument("ToyModel::backward: cache does not match the model");
    }
    if (grad_out.rows() != output_dim() || grad_out.cols() != cache.activations.back().cols()) {
        throw InvalidArgument("ToyModel::backward: output gradient has the wrong shape");
    }
    ParamVector grad(params_.size());
    Batch delta = grad_out;
    std::ptrdiff_t offset = params_.size();
    for (std::size_t l = layer_count(); l-- > 0;) {
        const int in = widths_[l];
        const int out = widths_[l + 1];
        offset -= static_cast<std::ptrdiff_t>(out) * (in + 1);
        if (l + 1 < layer_count()) {
            // tanh' = 1 - tanh^2, with the activation cached after tanh.
            delta = delta.cwiseProduct((1.0 - cache.activations[l + 1].array().square()).matrix());
        }
        Weights gw(grad.data() + offset, out, in);
        gw.noalias() = delta * cache.activations[l].transpose();
        grad.segment(offset + static_cast<std::ptrdiff_t>(out) * in, out) = delta.rowwise().sum();
        if (l > 0) {
            ConstWeights w(params_.data() + offset, out, in);
            delta = w.transpose() * delta;
        }
    }
    return grad;
}

namespace {

struct ChunkResult {
    double loss = 0.0;
    ParamVector grad;
};

ChunkResult chunk_error(const ToyModel& model, const Batch& inputs, const Batch& targets, Eigen::Index begin,
                        Eigen::Index count, double inv_n, bool want_grad) {
    ChunkResult r;
    ForwardCache cache;
    const Batch in = inputs.middleCols(begin, count);
    const Batch out = model.forward(in, want_grad ? &cache : nullptr);
    const Batch resid = out - targets.middleCols(begin, count);
    r.loss = resid.squaredNorm() * inv_n;
    if (want_grad) {
        r.grad = model.backward(cache, (2.0 * inv_n) * resid);
    }
    return r;
}

}  // namespace

double squared_error(const ToyModel& model, const Batch& inputs, const Batch& targets, ParamVector* grad,
                     int threads) {
    if (inputs.cols() != targets.cols() || targets.rows() != model.output_dim()) {
        throw InvalidArgument("squared_error: inputs and targets do not match");
    }
    const Eigen::Index n = inputs.cols();
    if (n == 0) {
        throw InvalidArgument("squared_error: empty batch");
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::Index workers = std::clamp<Eigen::Index>(threads, 1, n);
    std::vector<ChunkResult> parts(static_cast<std::size_t>(workers));
    auto bounds = [&](Eigen::Index w) { return n * w / workers; };
    if (workers == 1) {
        parts[0] = chunk_error(model, inputs, targets, 0, n, inv_n, grad != nullptr);
    } else {
        std::vector<std::thread> pool;
        for (Eigen::Index w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                parts[static_cast<std::size_t>(w)] =
                    chunk_error(model, inputs, targets, bounds(w), bounds(w + 1) - bounds(w), inv_n, grad != nullptr);
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    double loss = 0.0;
    for (std::size_t w = 0; w < parts.size(); ++w) {
        loss += parts[w].loss;
        if (grad) {
            if (w == 0) {
                *grad = std::move(parts[0].grad);
            } else {
                *grad += parts[w].grad;
            }
        }
    }
    return loss;
}

Batch to_batch(const std::vector<ToyImage>& images) {
    if (images.empty()) {
        return Batch();
    }
    const Eigen::Index d = images.front().pixels.size();
    Batch b(d, static_cast<Eigen::Index>(images.size()));
    for (std::size_t j = 0; j < images.size(); ++j) {
        if (images[j].pixels.size() != d) {
            throw InvalidArgument("to_batch: images differ in size");
        }
        b.col(static_cast<Eigen::Index>(j)) = images[j].pixels;
    }
    return b;
}

namespace {

Batch masked(const Batch& clean, const CropSpec& spec, int height, int width) {
    const ParamVector mask = crop_mask(spec, height, width);
    return mask.asDiagonal() * clean;
}

}  // namespace

PretrainResult pretrain(const std::vector<ToyImage>& images, const CropSpec& crop_spec, const PretrainConfig& config) {
    if (images.empty()) {
        throw InvalidArgument("pretrain: empty dataset");
    }
    if (config.epochs < 0) {
        throw InvalidArgument("pretrain: epochs must be non-negative");
    }
    if (!(config.learning_rate > 0.0)) {
        throw InvalidArgument("pretrain: learning rate must be positive");
    }
    PretrainResult result;
    result.model = ToyModel::initialized(config.widths, config.seed);
    const Batch clean = to_batch(images);
    if (clean.rows() != result.model.input_dim() || result.model.output_dim() != result.model.input_dim()) {
        throw InvalidArgument("pretrain: architecture does not match the image size");
    }
    const Batch inputs = masked(clean, crop_spec, images.front().height, images.front().width);

    ParamVector theta = result.model.params();
    ParamVector m = ParamVector::Zero(theta.size());
    ParamVector v = ParamVector::Zero(theta.size());
    ParamVector grad;
    for (int e = 0; e < config.epochs; ++e) {
        const double loss = squared_error(result.model, inputs, clean, &grad, config.threads);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            throw NumericFailure("pretrain: loss became non-finite at epoch " + std::to_string(e), e);
        }
        m = config.beta1 * m + (1.0 - config.beta1) * grad;
        v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(config.beta1, e + 1);
        const double c2 = 1.0 - std::pow(config.beta2, e + 1);
        theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.adam_eps);
        result.model.set_params(theta);
    }
    result.final_loss = squared_error(result.model, inputs, clean, nullptr, config.threads);
    if (!std::isfinite(result.final_loss)) {
        throw NumericFailure("pretrain: final loss is non-finite", config.epochs);
    }
    return result;
}

double relative_error(const ToyModel& model, const std::vector<ToyImage>& images, const CropSpec& crop_spec) {
    if (images.empty()) {
        throw InvalidArgument("relative_error: no images");
    }
    const Batch clean = to_batch(images);
    const Batch out = model.forward(masked(clean, crop_spec, images.front().height, images.front().width));
    double total = 0.0;
    for (Eigen::Index j = 0; j < clean.cols(); ++j) {
        total += (out.col(j) - clean.col(j)).norm() / clean.col(j).norm();
    }
    return total / static_cast<double>(clean.cols());
}

}  // namespace cul::unlearn

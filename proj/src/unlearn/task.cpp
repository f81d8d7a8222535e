#include "cul/unlearn/task.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cul/errors.hpp"

namespace cul::unlearn {

NoiseMode parse_noise_mode(const std::string& name) {
    if (name == "through-original") return NoiseMode::ThroughOriginal;
    if (name == "direct") return NoiseMode::DirectNoise;
    throw InvalidArgument("unknown noise mode '" + name + "' (expected through-original or direct)");
}

std::string to_string(NoiseMode m) { return m == NoiseMode::DirectNoise ? "direct" : "through-original"; }

namespace {

constexpr std::uint64_t kForgetStream = 1;
constexpr std::uint64_t kRetainStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

std::vector<std::size_t> epoch_batch(std::size_t set_size, std::size_t batch, EvalKey key, std::uint64_t stream) {
    const std::size_t per_epoch = set_size / batch;
    const std::uint64_t epoch = key.iteration / per_epoch;
    const std::size_t pos = static_cast<std::size_t>(key.iteration % per_epoch);
    Rng rng(derive_seed(key.seed, stream, epoch));
    const auto perm = rng.permutation(set_size);
    return {perm.begin() + static_cast<std::ptrdiff_t>(pos * batch),
            perm.begin() + static_cast<std::ptrdiff_t>((pos + 1) * batch)};
}

DiagCovariance estimate_sigma(const std::vector<ToyImage>& forget) {
    const std::size_t dim = static_cast<std::size_t>(forget.front().pixels.size());
    if (forget.size() < 2) {
        return DiagCovariance::identity(dim);
    }
    std::vector<ParamVector> samples;
    samples.reserve(forget.size());
    for (const auto& img : forget) {
        samples.push_back(img.pixels);
    }
    DiagCovariance cov = estimate_covariance(samples);
    const bool collapsed =
        std::all_of(cov.variances.begin(), cov.variances.end(), [](double v) { return v < 1e-12; });
    return collapsed ? DiagCovariance::identity(dim) : cov;
}

}  // namespace

Batch gather(const Batch& source, const std::vector<std::size_t>& index) {
    Batch out(source.rows(), static_cast<Eigen::Index>(index.size()));
    for (std::size_t j = 0; j < index.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = source.col(static_cast<Eigen::Index>(index[j]));
    }
    return out;
}

TaskContext::TaskContext(UnlearnTask task) : task_(std::move(task)) {
    if (task_.forget.empty() || task_.retain.empty()) {
        throw InvalidArgument("unlearn task: forget and retain sets must be nonempty");
    }
    if (task_.batch < 1) {
        throw InvalidArgument("unlearn task: batch must be positive");
    }
    const auto batch = static_cast<std::size_t>(task_.batch);
    if (batch > task_.forget.size() || batch > task_.retain.size()) {
        throw InvalidArgument("unlearn task: batch " + std::to_string(batch) + " exceeds the forget (" +
                              std::to_string(task_.forget.size()) + ") or retain (" +
                              std::to_string(task_.retain.size()) + ") set size");
    }
    if (task_.threads < 1) {
        throw InvalidArgument("unlearn task: threads must be >= 1");
    }
    std::set<int> forget_classes;
    for (const auto& img : task_.forget) {
        forget_classes.insert(img.class_id);
    }
    for (const auto& img : task_.retain) {
        if (forget_classes.count(img.class_id)) {
            throw InvalidArgument("unlearn task: class " + std::to_string(img.class_id) +
                                  " appears in both forget and retain sets");
        }
    }
    const ToyImage& first = task_.forget.front();
    if (task_.original.layer_count() == 0 || task_.original.input_dim() != first.pixels.size() ||
        task_.original.output_dim() != first.pixels.size()) {
        throw InvalidArgument("unlearn task: model shape does not match the images");
    }
    task_.crop.validate();

    sigma_ = task_.sigma ? *task_.sigma : estimate_sigma(task_.forget);
    if (sigma_.size() != static_cast<std::size_t>(first.pixels.size())) {
        throw InvalidArgument("unlearn task: sigma has the wrong dimension");
    }
    mask_ = crop_mask(task_.crop, first.height, first.width);
    forget_clean_ = to_batch(task_.forget);
    retain_clean_ = to_batch(task_.retain);
    forget_in_ = mask_.asDiagonal() * forget_clean_;
    retain_in_ = mask_.asDiagonal() * retain_clean_;
    retain_ref_ = task_.original.forward(retain_in_);

    const Batch noise = noise_images(task_.forget.size(), derive_seed(task_.eval_seed, 0xE7A1));
    eval_noise_target_ = noise_target(noise);
    const Batch out = retain_ref_;
    double err = 0.0;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        err += (out.col(j) - retain_clean_.col(j)).norm();
    }
    original_retain_err_ = err / static_cast<double>(out.cols());
}

std::vector<std::size_t> TaskContext::forget_batch(EvalKey key) const {
    return epoch_batch(task_.forget.size(), static_cast<std::size_t>(task_.batch), key, kForgetStream);
}

std::vector<std::size_t> TaskContext::retain_batch(EvalKey key) const {
    return epoch_batch(task_.retain.size(), static_cast<std::size_t>(task_.batch), key, kRetainStream);
}

Batch TaskContext::noise_images(std::size_t n, std::uint64_t seed) const {
    const auto dim = sigma_.size();
    Batch noise(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        noise.col(static_cast<Eigen::Index>(j)) = sample_gaussian(dim, sigma_, derive_seed(seed, j));
    }
    return noise;
}

Batch TaskContext::noise_target(const Batch& noise) const {
    if (task_.noise_mode == NoiseMode::DirectNoise) {
        return noise;
    }
    return task_.original.forward(mask_.asDiagonal() * noise);
}

ToyModel TaskContext::with_params(const ParamVector& theta) const {
    ToyModel m = task_.original;
    m.set_params(theta);
    return m;
}

ObjectiveEval TaskContext::combine(const ToyModel& model, const Batch& f_in, const Batch& f_target,
                                   const Batch& r_in, const Batch& r_target) const {
    ObjectiveEval e;
    e.f1 = squared_error(model, f_in, f_target, &e.grad_f1, task_.threads);
    e.f2 = squared_error(model, r_in, r_target, &e.grad_f2, task_.threads);
    return e;
}

ObjectiveEval TaskContext::objectives(const ParamVector& theta, EvalKey key) const {
    const ToyModel model = with_params(theta);
    const auto fi = forget_batch(key);
    const auto ri = retain_batch(key);
    const Batch noise = noise_images(fi.size(), derive_seed(key.seed, kNoiseStream, key.iteration));
    // The reference is recomputed on the gathered batch so that current ==
    // original reproduces it bit for bit.
    const Batch r_in = gather(retain_in_, ri);
    return combine(model, gather(forget_in_, fi), noise_target(noise), r_in, task_.original.forward(r_in));
}

ObjectiveEval TaskContext::full_objectives(const ParamVector& theta) const {
    return combine(with_params(theta), forget_in_, eval_noise_target_, retain_in_, retain_ref_);
}

UnlearnMetrics TaskContext::evaluate(const ToyModel& model) const {
    auto mean_dist = [](const Batch& a, const Batch& b) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            s += (a.col(j) - b.col(j)).norm();
        }
        return s / static_cast<double>(a.cols());
    };
    const Batch of = model.forward(forget_in_);
    const Batch orr = model.forward(retain_in_);
    UnlearnMetrics m;
    m.forget_err = mean_dist(of, forget_clean_);
    m.retain_err = mean_dist(orr, retain_clean_);
    m.noise_prox = mean_dist(of, eval_noise_target_);
    m.retain_degradation = m.retain_err - original_retain_err_;
    return m;
}

ObjectiveEval unlearn_objectives(const TaskContext& ctx, const ToyModel& current, EvalKey key) {
    return ctx.objectives(current.params(), key);
}

UnlearnMetrics evaluate(const ToyModel& model, const TaskContext& ctx) { return ctx.evaluate(model); }

BiObjectiveProblem make_unlearn_problem(std::shared_ptr<const TaskContext> ctx) {
    const std::size_t dim = ctx->dim();
    return BiObjectiveProblem(
        "unlearn-toy", dim, [ctx](const ParamVector& theta, EvalKey key) { return ctx->objectives(theta, key); },
        [ctx](const ParamVector& theta) { return ctx->full_objectives(theta); });
}

}  // namespace cul::unlearn

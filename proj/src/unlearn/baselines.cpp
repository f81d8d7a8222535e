#include "cul/unlearn/baselines.hpp"

#include <cmath>
#include <string>

#include "cul/errors.hpp"

namespace cul::unlearn {

BaselineKind parse_baseline(const std::string& name) {
    if (name == "max-loss") return BaselineKind::MaxLoss;
    if (name == "retain-label") return BaselineKind::RetainLabel;
    if (name == "noisy-label") return BaselineKind::NoisyLabel;
    if (name == "composite-loss") return BaselineKind::CompositeLoss;
    throw InvalidArgument("unknown baseline '" + name +
                          "' (expected max-loss, retain-label, noisy-label or composite-loss)");
}

std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::MaxLoss: return "max-loss";
        case BaselineKind::RetainLabel: return "retain-label";
        case BaselineKind::NoisyLabel: return "noisy-label";
        case BaselineKind::CompositeLoss: return "composite-loss";
    }
    return "max-loss";
}

void BaselineConfig::validate() const {
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
        throw InvalidArgument("baseline step size must be non-negative");
    }
    if (!(lambda >= 0.0)) {
        throw InvalidArgument("baseline lambda must be non-negative");
    }
    if (!(noise_std > 0.0)) {
        throw InvalidArgument("baseline noise_std must be positive");
    }
}

namespace {

// Forget images corrupted by seeded Gaussian label noise.
Batch noisy_targets(const Batch& clean, double noise_std, std::uint64_t seed) {
    Rng rng(seed);
    Batch out = clean;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            out(i, j) += noise_std * rng.normal();
        }
    }
    return out;
}

// Retain images paired with the forget batch through a per-epoch seeded
// bijection of the forget schedule positions onto retain indices.
Batch paired_retain(const TaskContext& ctx, EvalKey key) {
    const std::size_t nf = ctx.task().forget.size();
    const std::size_t nr = ctx.task().retain.size();
    const auto batch = static_cast<std::size_t>(ctx.task().batch);
    const std::size_t per_epoch = nf / batch;
    const std::uint64_t epoch = key.iteration / per_epoch;
    const std::size_t pos = static_cast<std::size_t>(key.iteration % per_epoch);
    Rng rng(derive_seed(key.seed, 4, epoch));
    const auto perm = rng.permutation(nr);
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < batch; ++j) {
        idx.push_back(perm[(pos * batch + j) % nr]);
    }
    return gather(ctx.retain_clean(), idx);
}

}  // namespace

double baseline_loss(BaselineKind kind, const TaskContext& ctx, const ParamVector& theta, EvalKey key, double lambda,
                     double noise_std, ParamVector* grad) {
    const ToyModel model = ctx.with_params(theta);
    const int threads = ctx.task().threads;
    const auto fi = ctx.forget_batch(key);
    const Batch f_in = gather(ctx.forget_inputs(), fi);
    switch (kind) {
        case BaselineKind::MaxLoss:
            return squared_error(model, f_in, gather(ctx.forget_clean(), fi), grad, threads);
        case BaselineKind::RetainLabel:
            return squared_error(model, f_in, paired_retain(ctx, key), grad, threads);
        case BaselineKind::NoisyLabel:
        case BaselineKind::CompositeLoss: {
            const Batch target = noisy_targets(gather(ctx.forget_clean(), fi), noise_std,
                                               derive_seed(key.seed, 5, key.iteration));
            double loss = squared_error(model, f_in, target, grad, threads);
            if (kind == BaselineKind::CompositeLoss) {
                const auto ri = ctx.retain_batch(key);
                ParamVector g_r;
                loss += lambda * squared_error(model, gather(ctx.retain_inputs(), ri), gather(ctx.retain_clean(), ri),
                                               grad ? &g_r : nullptr, threads);
                if (grad) {
                    *grad += lambda * g_r;
                }
            }
            return loss;
        }
    }
    throw InvalidArgument("unknown baseline kind");
}

ToyModel baseline_step(BaselineKind kind, const TaskContext& ctx, const ToyModel& current, double mu, double lambda,
                       double noise_std, EvalKey key) {
    ParamVector grad;
    const double loss = baseline_loss(kind, ctx, current.params(), key, lambda, noise_std, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
        throw NumericFailure("baseline " + to_string(kind) + ": non-finite loss at iteration " +
                                 std::to_string(key.iteration),
                             static_cast<std::int64_t>(key.iteration));
    }
    const double sign = kind == BaselineKind::MaxLoss ? 1.0 : -1.0;
    ToyModel next = current;
    next.set_params(current.params() + sign * mu * grad);
    return next;
}

ToyModel run_baseline(BaselineKind kind, const TaskContext& ctx, const ToyModel& start, const BaselineConfig& config) {
    config.validate();
    ToyModel model = start;
    for (std::uint64_t t = 0; t < config.iterations; ++t) {
        model = baseline_step(kind, ctx, model, config.step_size, config.lambda, config.noise_std,
                              EvalKey{config.seed, t});
    }
    return model;
}

}  // namespace cul::unlearn

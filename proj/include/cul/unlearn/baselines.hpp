// Fine-tuning baselines compared against the constrained solver.

#pragma once

#include <cstdint>
#include <string>

#include "cul/objective.hpp"
#include "cul/unlearn/task.hpp"

namespace cul::unlearn {

enum class BaselineKind {
    MaxLoss,        ///< ascend the reconstruction loss on forget images
    RetainLabel,    ///< regress forget inputs onto paired retain images
    NoisyLabel,     ///< regress forget inputs onto noise-corrupted ground truth
    CompositeLoss,  ///< NoisyLabel loss + lambda * retain reconstruction loss
};

[[nodiscard]] BaselineKind parse_baseline(const std::string& name);
[[nodiscard]] std::string to_string(BaselineKind k);

struct BaselineConfig {
    double step_size = 1e-3;
    double lambda = 1.0;     ///< CompositeLoss only
    double noise_std = 0.5;  ///< NoisyLabel and CompositeLoss
    std::uint64_t iterations = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The loss a baseline descends (MaxLoss: the forget loss it ascends) on the
/// minibatch selected by key, with its gradient when grad is non-null.
double baseline_loss(BaselineKind kind, const TaskContext& ctx, const ParamVector& theta, EvalKey key,
                     double lambda, double noise_std, ParamVector* grad);

/// One gradient step from `current`.
[[nodiscard]] ToyModel baseline_step(BaselineKind kind, const TaskContext& ctx, const ToyModel& current, double mu,
                                     double lambda, double noise_std, EvalKey key);

[[nodiscard]] ToyModel run_baseline(BaselineKind kind, const TaskContext& ctx, const ToyModel& start,
                                    const BaselineConfig& config);

}  // namespace cul::unlearn

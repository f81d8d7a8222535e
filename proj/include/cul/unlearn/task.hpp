// Unlearning objectives on the toy task.
//
// f1 pulls the model's outputs on cropped forget images towards a Gaussian
// noise target; f2 keeps its outputs on cropped retain images close to the
// original model's. Both are batch means of squared L2 distances.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cul/numerics.hpp"
#include "cul/objective.hpp"
#include "cul/unlearn/crop.hpp"
#include "cul/unlearn/dataset.hpp"
#include "cul/unlearn/model.hpp"

namespace cul::unlearn {

enum class NoiseMode {
    ThroughOriginal,  ///< target = original(T(noise))
    DirectNoise,      ///< target = noise
};

[[nodiscard]] NoiseMode parse_noise_mode(const std::string& name);
[[nodiscard]] std::string to_string(NoiseMode m);

struct UnlearnTask {
    ToyModel original;
    std::vector<ToyImage> forget;
    std::vector<ToyImage> retain;
    CropSpec crop;
    /// Noise covariance. Estimated from the forget images when unset; the
    /// identity replaces an estimate whose variances all fall below 1e-12.
    std::optional<DiagCovariance> sigma;
    int batch = 32;
    NoiseMode noise_mode = NoiseMode::ThroughOriginal;
    int threads = 1;
    /// Seeds the fixed noise set used by full-data evaluations.
    std::uint64_t eval_seed = 0;
};

struct UnlearnMetrics {
    double forget_err = 0.0;          ///< mean |I(T(xf)) - xf|
    double retain_err = 0.0;          ///< mean |I(T(xr)) - xr|
    double noise_prox = 0.0;          ///< mean |I(T(xf)) - noise target|
    double retain_degradation = 0.0;  ///< retain_err(model) - retain_err(original)
};

/// A validated task with cropped inputs and fixed reference outputs
/// precomputed.
class TaskContext {
public:
    explicit TaskContext(UnlearnTask task);

    [[nodiscard]] const UnlearnTask& task() const noexcept { return task_; }
    [[nodiscard]] const DiagCovariance& sigma() const noexcept { return sigma_; }
    [[nodiscard]] std::size_t dim() const noexcept { return task_.original.param_count(); }

    [[nodiscard]] const Batch& forget_inputs() const noexcept { return forget_in_; }
    [[nodiscard]] const Batch& forget_clean() const noexcept { return forget_clean_; }
    [[nodiscard]] const Batch& retain_inputs() const noexcept { return retain_in_; }
    [[nodiscard]] const Batch& retain_clean() const noexcept { return retain_clean_; }
    /// Original-model outputs on the cropped retain images.
    [[nodiscard]] const Batch& retain_reference() const noexcept { return retain_ref_; }

    /// Minibatch column indices for an iteration. Each epoch walks a fresh
    /// seeded permutation of the set.
    [[nodiscard]] std::vector<std::size_t> forget_batch(EvalKey key) const;
    [[nodiscard]] std::vector<std::size_t> retain_batch(EvalKey key) const;

    /// n noise images drawn from N(0, sigma) and the matching f1 target.
    [[nodiscard]] Batch noise_images(std::size_t n, std::uint64_t seed) const;
    [[nodiscard]] Batch noise_target(const Batch& noise) const;

    /// f1/f2 on the minibatch selected by key.
    [[nodiscard]] ObjectiveEval objectives(const ParamVector& theta, EvalKey key) const;
    /// f1/f2 on all images, with one fixed noise image per forget image.
    [[nodiscard]] ObjectiveEval full_objectives(const ParamVector& theta) const;

    [[nodiscard]] UnlearnMetrics evaluate(const ToyModel& model) const;

    [[nodiscard]] ToyModel with_params(const ParamVector& theta) const;

private:
    [[nodiscard]] ObjectiveEval combine(const ToyModel& model, const Batch& f_in, const Batch& f_target,
                                        const Batch& r_in, const Batch& r_target) const;

    UnlearnTask task_;
    DiagCovariance sigma_;
    ParamVector mask_;
    Batch forget_in_, forget_clean_, retain_in_, retain_clean_, retain_ref_;
    Batch eval_noise_target_;
    double original_retain_err_ = 0.0;
};

[[nodiscard]] ObjectiveEval unlearn_objectives(const TaskContext& ctx, const ToyModel& current, EvalKey key);

[[nodiscard]] UnlearnMetrics evaluate(const ToyModel& model, const TaskContext& ctx);

/// Bi-objective view of the task over the flat model parameters.
[[nodiscard]] BiObjectiveProblem make_unlearn_problem(std::shared_ptr<const TaskContext> ctx);

/// Columns of `source` selected by `index`.
[[nodiscard]] Batch gather(const Batch& source, const std::vector<std::size_t>& index);

}  // namespace cul::unlearn

// Built-in problems: the analytic quadratic pair and the toy unlearning task.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cul/objective.hpp"
#include "cul/unlearn/crop.hpp"
#include "cul/unlearn/dataset.hpp"
#include "cul/unlearn/model.hpp"
#include "cul/unlearn/task.hpp"

namespace cul {

struct ToyTaskConfig {
    int classes = 8;
    int per_class = 32;
    std::uint64_t data_seed = 1;
    int side = 16;
    unlearn::CropSpec crop{};
    int batch = 32;
    unlearn::NoiseMode noise_mode = unlearn::NoiseMode::ThroughOriginal;
    /// Fraction of the retain set replaced by held-out classes.
    double proxy_retain_fraction = 0.0;
    int threads = 1;
    unlearn::PretrainConfig pretrain{};
    /// Load the original model from here instead of pretraining.
    std::optional<std::string> checkpoint;
    std::uint64_t eval_seed = 0;

    void validate() const;
};

/// Every key accepted by toy_config_from_json.
[[nodiscard]] std::vector<std::string> toy_config_keys();

/// Flat JSON object to config. Unknown keys throw InvalidArgument.
[[nodiscard]] ToyTaskConfig toy_config_from_json(const nlohmann::json& params);

struct ToyTask {
    unlearn::ToyDataset dataset;
    std::shared_ptr<const unlearn::TaskContext> context;
    double pretrain_loss = 0.0;  ///< 0 when loaded from a checkpoint
};

/// Build the dataset and the original model (pretrained or loaded).
[[nodiscard]] ToyTask build_toy_task(const ToyTaskConfig& config);

/// Same, with the original model supplied by the caller.
[[nodiscard]] ToyTask build_toy_task(const ToyTaskConfig& config, const unlearn::ToyModel& original);

/// Worker count from CUL_THREADS, default 1.
[[nodiscard]] int threads_from_env();

/// "quad" (params: a, b, start) and "unlearn-toy" (params: toy_config_keys()).
[[nodiscard]] ProblemRegistry builtin_problems();

}  // namespace cul

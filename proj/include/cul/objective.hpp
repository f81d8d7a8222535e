// Bi-objective problem abstraction and the analytic quadratic test problem.
//
// f1 is the constraint objective (unlearning loss) and f2 the utility
// objective (retain loss). Problems are type-erased so the optimizer, the
// Pareto driver and the CLI can treat the analytic suite and the toy
// unlearning task uniformly.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cul/numerics.hpp"

namespace cul {

struct ObjectiveEval {
    double f1 = 0.0;
    double f2 = 0.0;
    ParamVector grad_f1;
    ParamVector grad_f2;
};

/// Identifies a stochastic evaluation: minibatches and noise draws are a
/// pure function of (seed, iteration).
struct EvalKey {
    std::uint64_t seed = 0;
    std::uint64_t iteration = 0;
};

class BiObjectiveProblem {
public:
    using StochasticFn = std::function<ObjectiveEval(const ParamVector&, EvalKey)>;
    using FullFn = std::function<ObjectiveEval(const ParamVector&)>;

    /// `full` may be empty, in which case the stochastic evaluation with a
    /// zero key stands in for the full-data evaluation.
    BiObjectiveProblem(std::string name, std::size_t dim, StochasticFn stochastic, FullFn full = {});

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

    /// Minibatch evaluation used inside the optimizer loop.
    [[nodiscard]] ObjectiveEval evaluate(const ParamVector& theta, EvalKey key) const;

    /// Deterministic evaluation on the complete data.
    [[nodiscard]] ObjectiveEval evaluate_full(const ParamVector& theta) const;

    /// The same problem with the roles of f1 and f2 exchanged.
    [[nodiscard]] BiObjectiveProblem swapped() const;

private:
    void check(const ParamVector& theta) const;

    std::string name_;
    std::size_t dim_;
    StochasticFn stochastic_;
    FullFn full_;
};

struct QuadraticPair {
    ParamVector a;  ///< minimizer of f1
    ParamVector b;  ///< minimizer of f2
};

/// f1 = |theta - a|^2, f2 = |theta - b|^2 with exact gradients.
[[nodiscard]] BiObjectiveProblem make_quadratic_pair(const ParamVector& a, const ParamVector& b);

/// Minimal feasible f2 on the Pareto front at the given f1 level:
/// (|a - b| - sqrt(f1))^2.
[[nodiscard]] double quadratic_front_oracle(const QuadraticPair& pair, double f1_value);

struct FiniteDifferenceGrad {
    ParamVector grad_f1;
    ParamVector grad_f2;
};

/// Central differences of f1 and f2, one coordinate at a time. Uses the
/// full-data evaluation unless a key is given.
[[nodiscard]] FiniteDifferenceGrad finite_difference_grad(const BiObjectiveProblem& problem,
                                                          const ParamVector& theta, double h,
                                                          std::optional<EvalKey> key = std::nullopt);

/// A problem together with what a driver needs to run it.
struct ProblemSetup {
    BiObjectiveProblem problem;
    /// Starting point of every solve: the "original model".
    ParamVector start;
    /// Extra per-solution measurements for reports (may be empty).
    std::function<nlohmann::json(const ParamVector&)> describe;
};

/// Named problem factories. Parameters arrive as a flat JSON object.
class ProblemRegistry {
public:
    using Factory = std::function<ProblemSetup(const nlohmann::json& params)>;

    void add(const std::string& name, Factory factory);
    [[nodiscard]] bool contains(const std::string& name) const;
    [[nodiscard]] ProblemSetup make(const std::string& name, const nlohmann::json& params) const;
    [[nodiscard]] std::vector<std::string> names() const;

private:
    std::map<std::string, Factory> factories_;
};

}  // namespace cul

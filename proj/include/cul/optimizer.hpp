// Gradient-based epsilon-constrained solver.
//
// Each step solves the per-iteration subproblem
//
//     min_g |grad f2 - g|^2   s.t.   grad f1 . g >= psi(theta)
//
// through its closed-form dual
//
//     eta = max((psi - grad f2 . grad f1) / (|grad f1|^2 + omega), 0),
//     g   = grad f2 + eta * grad f1,
//
// and moves theta <- theta - mu * g. The control function psi decides how
// hard the step pushes on f1: Phase I drives f1 to its infimum, Phase II
// holds f1 at a level epsilon.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cul/numerics.hpp"
#include "cul/objective.hpp"

namespace cul {

enum class Phase { PhaseI, PhaseII };

/// psi(theta). Phase I: alpha * |grad f1|^delta. Phase II:
/// beta * (f1 - epsilon)^delta, optionally times |grad f1|^2.
struct ControlFunction {
    Phase phase = Phase::PhaseI;
    double alpha = 1.0;
    double beta = 1.0;
    double delta = 2.0;
    bool scaled = false;
    double epsilon = 0.0;

    static ControlFunction phase_one(double alpha, double delta);
    static ControlFunction phase_two(double beta, double delta, double epsilon, bool scaled);

    /// Throws InvalidArgument when the phase invariants do not hold
    /// (Phase II needs an odd integer delta so psi keeps the sign of f1 - epsilon).
    void validate() const;
};

enum class Preconditioner { None, Adam };

struct StepConfig {
    double step_size = 0.05;       ///< mu
    std::uint64_t max_iters = 5000;
    double grad_tol = 1e-6;        ///< stop once |g| drops below
    double omega = 1e-7;           ///< dual denominator regularizer
    std::uint64_t seed = 0;        ///< keys minibatch schedules of stochastic problems
    double eta_warn = 1e6;
    bool record_timing = false;    ///< wall_ms stays 0 unless set, keeping outputs reproducible
    Preconditioner preconditioner = Preconditioner::None;
    double adam_beta2 = 0.95;
    double adam_eps = 1e-8;

    void validate() const;
};

struct OptimizerState {
    ParamVector theta;
    std::uint64_t iter = 0;
    /// Second-moment estimate; only used with Preconditioner::Adam.
    ParamVector second_moment;
};

struct TrajectoryRecord {
    std::uint64_t iter = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    double norm_grad_f1 = 0.0;
    double norm_g = 0.0;
    double eta = 0.0;
    double psi = 0.0;
    std::int64_t wall_ms = 0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;

    [[nodiscard]] bool empty() const noexcept { return records.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] double max_eta() const noexcept;
};

[[nodiscard]] double control_value(const ControlFunction& cf, double f1, double norm_grad_f1);

[[nodiscard]] double dual_multiplier(const ParamVector& grad_f1, const ParamVector& grad_f2, double psi,
                                     double omega);

[[nodiscard]] ParamVector update_direction(const ParamVector& grad_f1, const ParamVector& grad_f2,
                                           double eta);

struct StepResult {
    OptimizerState state;
    TrajectoryRecord record;
};

/// One iteration. The record describes the state *before* the update.
[[nodiscard]] StepResult step(const OptimizerState& state, const BiObjectiveProblem& problem,
                              const ControlFunction& cf, const StepConfig& sc);

struct RunResult {
    OptimizerState state;
    Trajectory trajectory;
    bool converged = false;  ///< stopped on grad_tol rather than max_iters
    std::vector<std::string> warnings;
};

/// Iterate until max_iters steps were taken or |g| < grad_tol. In the latter
/// case the final record belongs to the returned theta.
[[nodiscard]] RunResult run(const BiObjectiveProblem& problem, const ControlFunction& cf,
                            const StepConfig& sc, const ParamVector& theta0);

}  // namespace cul

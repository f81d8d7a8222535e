// Two-phase orchestration: the boundaries of the Pareto set (Phase I) and
// the epsilon sweep between them (Phase II).

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cul/numerics.hpp"
#include "cul/objective.hpp"
#include "cul/optimizer.hpp"

namespace cul {

enum class Boundary { HighestCompleteness, LowestCompleteness };

struct BoundaryResult {
    ParamVector theta_star;
    double f1_at = 0.0;  ///< full-data values at theta_star
    double f2_at = 0.0;
    Boundary which = Boundary::HighestCompleteness;
    RunResult run;       ///< the solve that produced theta_star
};

struct BoundaryPair {
    BoundaryResult high;  ///< f1 minimized
    BoundaryResult low;   ///< f2 minimized
};

struct FrontEntry {
    double epsilon = 0.0;
    ParamVector theta;
    double f1 = 0.0;
    double f2 = 0.0;
    RunResult run;
};

struct ParetoFront {
    std::vector<FrontEntry> entries;     ///< sorted by epsilon, mutually nondominated
    std::vector<FrontEntry> dominated;   ///< solutions dropped by the dominance filter
    BoundaryPair boundaries;
};

struct Objectives {
    double f1 = 0.0;
    double f2 = 0.0;
};

/// Phase I on the original problem: psi = alpha |grad f1|^delta.
[[nodiscard]] BoundaryResult solve_boundary_high(const BiObjectiveProblem& problem, const StepConfig& sc,
                                                 double alpha, double delta, const ParamVector& theta0);

/// Phase I with f1 and f2 exchanged. f1_at/f2_at are reported for the
/// original (unswapped) objectives.
[[nodiscard]] BoundaryResult solve_boundary_low(const BiObjectiveProblem& problem, const StepConfig& sc,
                                                double alpha, double delta, const ParamVector& theta0);

/// Both boundaries from the same start. The two solves draw minibatches from
/// independent streams derived from sc.seed.
[[nodiscard]] BoundaryPair solve_boundaries(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha,
                                            double delta, const ParamVector& theta0);

/// epsilon_k = f1(high) + fraction_k * (f1(low) - f1(high)), endpoints excluded.
[[nodiscard]] std::vector<double> epsilon_grid(const BoundaryPair& boundaries,
                                               const std::vector<double>& fractions);

struct SweepOptions {
    bool warm_start = true;
    /// Start point of every run in cold-start mode.
    std::optional<ParamVector> cold_start_theta;
    /// Absolute slack allowed on f1 <= epsilon; when unset, 1% of the epsilon range.
    std::optional<double> tolerance;
};

/// Phase II at every grid level. Warm-started runs begin at the previous
/// solution (the first at the high boundary). Throws ConstraintViolation
/// when a run ends with f1 > epsilon + tolerance. A degenerate range
/// (f1(high) >= f1(low)) yields an empty front.
[[nodiscard]] ParetoFront sweep(const BiObjectiveProblem& problem, const StepConfig& sc,
                                const ControlFunction& phase2_template, const BoundaryPair& boundaries,
                                const std::vector<double>& fractions, const SweepOptions& options = {});

/// p dominates q: no worse in both objectives, strictly better in one.
[[nodiscard]] bool dominates(const Objectives& p, const Objectives& q) noexcept;

/// Indices of points not dominated by any other point, in input order.
[[nodiscard]] std::vector<std::size_t> nondominated_indices(const std::vector<Objectives>& points);

/// Points not dominated by any other input point, input order preserved.
[[nodiscard]] std::vector<Objectives> filter_nondominated(const std::vector<Objectives>& points);

}  // namespace cul

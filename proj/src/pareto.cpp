#include "cul/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cul/errors.hpp"

namespace cul {

namespace {

BoundaryResult finish(RunResult run, const BiObjectiveProblem& problem, Boundary which) {
    BoundaryResult b;
    b.which = which;
    b.theta_star = run.state.theta;
    const ObjectiveEval e = problem.evaluate_full(b.theta_star);
    b.f1_at = e.f1;
    b.f2_at = e.f2;
    b.run = std::move(run);
    return b;
}

}  // namespace

BoundaryResult solve_boundary_high(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha,
                                   double delta, const ParamVector& theta0) {
    const auto cf = ControlFunction::phase_one(alpha, delta);
    return finish(run(problem, cf, sc, theta0), problem, Boundary::HighestCompleteness);
}

BoundaryResult solve_boundary_low(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha,
                                  double delta, const ParamVector& theta0) {
    const auto cf = ControlFunction::phase_one(alpha, delta);
    return finish(run(problem.swapped(), cf, sc, theta0), problem, Boundary::LowestCompleteness);
}

BoundaryPair solve_boundaries(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha, double delta,
                              const ParamVector& theta0) {
    StepConfig high_cfg = sc;
    high_cfg.seed = derive_seed(sc.seed, 0xB0, 1);
    StepConfig low_cfg = sc;
    low_cfg.seed = derive_seed(sc.seed, 0xB0, 2);
    return {solve_boundary_high(problem, high_cfg, alpha, delta, theta0),
            solve_boundary_low(problem, low_cfg, alpha, delta, theta0)};
}

std::vector<double> epsilon_grid(const BoundaryPair& boundaries, const std::vector<double>& fractions) {
    const double lo = boundaries.high.f1_at;
    const double hi = boundaries.low.f1_at;
    if (!(lo < hi)) {
        throw InvalidArgument("epsilon_grid: degenerate front, f1(high) = " + std::to_string(lo) +
                              " is not below f1(low) = " + std::to_string(hi));
    }
    std::vector<double> grid;
    grid.reserve(fractions.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        const double fr = fractions[k];
        if (!(fr > 0.0 && fr < 1.0)) {
            throw InvalidArgument("epsilon_grid: fraction " + std::to_string(fr) + " outside (0, 1)");
        }
        if (k > 0 && !(fr > prev)) {
            throw InvalidArgument("epsilon_grid: fractions must be strictly increasing");
        }
        prev = fr;
        grid.push_back(lo + fr * (hi - lo));
    }
    return grid;
}

ParetoFront sweep(const BiObjectiveProblem& problem, const StepConfig& sc, const ControlFunction& phase2_template,
                  const BoundaryPair& boundaries, const std::vector<double>& fractions,
                  const SweepOptions& options) {
    ParetoFront front;
    front.boundaries = boundaries;
    const double lo = boundaries.high.f1_at;
    const double hi = boundaries.low.f1_at;
    if (!(lo < hi)) {
        return front;
    }
    const std::vector<double> grid = epsilon_grid(boundaries, fractions);
    const double tol = options.tolerance.value_or(0.01 * (hi - lo));

    std::vector<FrontEntry> entries;
    ParamVector theta = boundaries.high.theta_star;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        ControlFunction cf = phase2_template;
        cf.phase = Phase::PhaseII;
        cf.epsilon = grid[k];
        cf.validate();

        StepConfig step_cfg = sc;
        step_cfg.seed = derive_seed(sc.seed, 0x5EE9, k);
        const ParamVector& start =
            options.warm_start ? theta : options.cold_start_theta.value_or(boundaries.high.theta_star);

        FrontEntry entry;
        entry.epsilon = grid[k];
        entry.run = run(problem, cf, step_cfg, start);
        entry.theta = entry.run.state.theta;
        const ObjectiveEval e = problem.evaluate_full(entry.theta);
        entry.f1 = e.f1;
        entry.f2 = e.f2;
        if (entry.f1 > grid[k] + tol) {
            throw ConstraintViolation("sweep: epsilon index " + std::to_string(k) + " ended with f1 = " +
                                          std::to_string(entry.f1) + " > epsilon + tol = " +
                                          std::to_string(grid[k] + tol),
                                      k);
        }
        theta = entry.theta;
        entries.push_back(std::move(entry));
    }

    std::vector<Objectives> points;
    points.reserve(entries.size());
    for (const auto& e : entries) {
        points.push_back({e.f1, e.f2});
    }
    const auto keep = nondominated_indices(points);
    std::vector<bool> kept(entries.size(), false);
    for (auto i : keep) {
        kept[i] = true;
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        (kept[i] ? front.entries : front.dominated).push_back(std::move(entries[i]));
    }
    return front;
}

bool dominates(const Objectives& p, const Objectives& q) noexcept {
    return p.f1 <= q.f1 && p.f2 <= q.f2 && (p.f1 < q.f1 || p.f2 < q.f2);
}

std::vector<std::size_t> nondominated_indices(const std::vector<Objectives>& points) {
    const std::size_t n = points.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (points[i].f1 != points[j].f1) {
            return points[i].f1 < points[j].f1;
        }
        return points[i].f2 < points[j].f2;
    });

    // Scan groups of equal f1. A point is dominated by an earlier group when
    // that group reached f2 <= its f2, and by its own group when some member
    // has strictly smaller f2.
    std::vector<bool> dominated(n, false);
    double best_prev = std::numeric_limits<double>::infinity();
    std::size_t g = 0;
    while (g < n) {
        std::size_t end = g;
        while (end < n && points[order[end]].f1 == points[order[g]].f1) {
            ++end;
        }
        const double group_min = points[order[g]].f2;
        for (std::size_t k = g; k < end; ++k) {
            const double f2 = points[order[k]].f2;
            dominated[order[k]] = best_prev <= f2 || group_min < f2;
        }
        best_prev = std::min(best_prev, group_min);
        g = end;
    }

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!dominated[i]) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<Objectives> filter_nondominated(const std::vector<Objectives>& points) {
    std::vector<Objectives> out;
    for (auto i : nondominated_indices(points)) {
        out.push_back(points[i]);
    }
    return out;
}

}  // namespace cul

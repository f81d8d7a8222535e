// Penalty and KKT residuals used as run-time monitors and test oracles,
// plus log-log rate fitting for convergence studies.

#pragma once

#include <utility>
#include <vector>

#include "cul/numerics.hpp"
#include "cul/objective.hpp"
#include "cul/optimizer.hpp"

namespace cul {

struct PenaltyConfig {
    double xi = 0.0;       ///< penalty scale, >= 0
    double epsilon = 0.0;  ///< constraint level
};

struct KktConfig {
    double tau = 1.0;  ///< > 0
};

/// L1 penalty f2 + xi [f1 - epsilon]_+.
[[nodiscard]] double penalty(double f1, double f2, const PenaltyConfig& pc);

/// First-order KKT residual
/// |grad f2 + eta grad f1|^2 + tau [psi]_+ + eta [-psi]_+.
/// Zero exactly at first-order KKT points.
[[nodiscard]] double kkt_first_order(const ParamVector& grad_f1, const ParamVector& grad_f2, double eta,
                                     double psi, const KktConfig& kc);

/// Phase I residual |grad f2 + eta grad f1|^2 + tau psi, for psi >= 0.
[[nodiscard]] double kkt_phase1(const ParamVector& grad_f1, const ParamVector& grad_f2, double eta, double psi,
                                const KktConfig& kc);

/// The same residuals evaluated from a trajectory record, whose norm_g is
/// |grad f2 + eta grad f1|.
[[nodiscard]] double kkt_first_order(const TrajectoryRecord& r, const KktConfig& kc);
[[nodiscard]] double kkt_phase1(const TrajectoryRecord& r, const KktConfig& kc);

/// Penalty of every record in order.
[[nodiscard]] std::vector<double> penalty_series(const Trajectory& t, const PenaltyConfig& pc);

/// Largest single-step increase series[i+1] - series[i] (0 for monotone
/// nonincreasing input).
[[nodiscard]] double max_step_increase(const std::vector<double>& series);

/// Least-squares slope of log(running min of value) against log(t) over the
/// trailing window_fraction of points. t must be positive.
[[nodiscard]] double rate_exponent(const std::vector<std::pair<double, double>>& series, double window_fraction);

struct RateEntry {
    double delta = 0.0;
    double slope = 0.0;  ///< NaN when the series was degenerate
    std::uint64_t iterations = 0;
    double final_grad_f1_norm = 0.0;
    Trajectory trajectory;
};

/// Phase I runs (psi = alpha |grad f1|^delta) for each delta, each fitted
/// with rate_exponent on (iter + 1, |grad f1|).
[[nodiscard]] std::vector<RateEntry> rate_study(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha,
                                                const std::vector<double>& deltas, const ParamVector& theta0,
                                                double window_fraction);

/// Slopes strictly increase with delta (faster decay for smaller delta).
[[nodiscard]] bool rates_monotone(const std::vector<RateEntry>& entries);

}  // namespace cul

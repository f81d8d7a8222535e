#include "cul/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cul/errors.hpp"

namespace cul {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

void check_tau(const KktConfig& kc) {
    if (!(kc.tau > 0.0)) {
        throw InvalidArgument("KKT weight tau must be positive");
    }
}

}  // namespace

double penalty(double f1, double f2, const PenaltyConfig& pc) {
    if (!(pc.xi >= 0.0)) {
        throw InvalidArgument("penalty scale xi must be non-negative");
    }
    return f2 + pc.xi * positive_part(f1 - pc.epsilon);
}

double kkt_first_order(const ParamVector& grad_f1, const ParamVector& grad_f2, double eta, double psi,
                       const KktConfig& kc) {
    check_tau(kc);
    if (!(eta >= 0.0)) {
        throw InvalidArgument("kkt_first_order: eta must be non-negative");
    }
    if (grad_f1.size() != grad_f2.size()) {
        throw InvalidArgument("kkt_first_order: gradient lengths differ");
    }
    return (grad_f2 + eta * grad_f1).squaredNorm() + kc.tau * positive_part(psi) + eta * positive_part(-psi);
}

double kkt_phase1(const ParamVector& grad_f1, const ParamVector& grad_f2, double eta, double psi,
                  const KktConfig& kc) {
    check_tau(kc);
    if (psi < 0.0) {
        throw InvalidArgument("kkt_phase1: psi must be non-negative, got " + std::to_string(psi));
    }
    if (grad_f1.size() != grad_f2.size()) {
        throw InvalidArgument("kkt_phase1: gradient lengths differ");
    }
    return (grad_f2 + eta * grad_f1).squaredNorm() + kc.tau * psi;
}

double kkt_first_order(const TrajectoryRecord& r, const KktConfig& kc) {
    check_tau(kc);
    return r.norm_g * r.norm_g + kc.tau * positive_part(r.psi) + r.eta * positive_part(-r.psi);
}

double kkt_phase1(const TrajectoryRecord& r, const KktConfig& kc) {
    check_tau(kc);
    if (r.psi < 0.0) {
        throw InvalidArgument("kkt_phase1: record has negative psi");
    }
    return r.norm_g * r.norm_g + kc.tau * r.psi;
}

std::vector<double> penalty_series(const Trajectory& t, const PenaltyConfig& pc) {
    std::vector<double> out;
    out.reserve(t.records.size());
    for (const auto& r : t.records) {
        out.push_back(penalty(r.f1, r.f2, pc));
    }
    return out;
}

double max_step_increase(const std::vector<double>& series) {
    double worst = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        worst = std::max(worst, series[i] - series[i - 1]);
    }
    return worst;
}

double rate_exponent(const std::vector<std::pair<double, double>>& series, double window_fraction) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
        throw InvalidArgument("rate_exponent: window fraction must lie in (0, 1]");
    }
    if (series.size() < 10) {
        throw InvalidArgument("rate_exponent: need at least 10 points, got " + std::to_string(series.size()));
    }
    std::vector<double> running(series.size());
    double m = series.front().second;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!(series[i].first > 0.0)) {
            throw InvalidArgument("rate_exponent: time values must be positive");
        }
        m = std::min(m, series[i].second);
        running[i] = m;
    }
    const auto n = series.size();
    const auto window = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n))));
    const std::size_t first = n - std::min(window, n);

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = first; i < n; ++i) {
        if (!(running[i] > 0.0)) {
            continue;
        }
        const double x = std::log(series[i].first);
        const double y = std::log(running[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) {
        throw DegenerateSeries("rate_exponent: fewer than two positive values in the fitting window");
    }
    const double c = static_cast<double>(count);
    const double denom = c * sxx - sx * sx;
    if (!(denom > 0.0)) {
        throw DegenerateSeries("rate_exponent: fitting window has a single time value");
    }
    return (c * sxy - sx * sy) / denom;
}

std::vector<RateEntry> rate_study(const BiObjectiveProblem& problem, const StepConfig& sc, double alpha,
                                  const std::vector<double>& deltas, const ParamVector& theta0,
                                  double window_fraction) {
    std::vector<RateEntry> out;
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        StepConfig cfg = sc;
        cfg.seed = derive_seed(sc.seed, 0x4A7E, k);
        RunResult r = run(problem, ControlFunction::phase_one(alpha, deltas[k]), cfg, theta0);
        RateEntry e;
        e.delta = deltas[k];
        e.iterations = r.state.iter;
        e.final_grad_f1_norm = r.trajectory.empty() ? 0.0 : r.trajectory.records.back().norm_grad_f1;
        std::vector<std::pair<double, double>> series;
        series.reserve(r.trajectory.size());
        for (const auto& rec : r.trajectory.records) {
            series.emplace_back(static_cast<double>(rec.iter + 1), rec.norm_grad_f1);
        }
        try {
            e.slope = rate_exponent(series, window_fraction);
        } catch (const DegenerateSeries&) {
            e.slope = std::numeric_limits<double>::quiet_NaN();
        }
        e.trajectory = std::move(r.trajectory);
        out.push_back(std::move(e));
    }
    return out;
}

bool rates_monotone(const std::vector<RateEntry>& entries) {
    std::vector<std::pair<double, double>> by_delta;
    for (const auto& e : entries) {
        by_delta.emplace_back(e.delta, e.slope);
    }
    std::sort(by_delta.begin(), by_delta.end());
    for (std::size_t i = 1; i < by_delta.size(); ++i) {
        if (!(by_delta[i].second > by_delta[i - 1].second)) {
            return false;
        }
    }
    return true;
}

}  // namespace cul

#include "cul/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "cul/errors.hpp"

namespace cul {

namespace {

bool is_odd_integer(double x) {
    if (!std::isfinite(x) || x != std::floor(x)) {
        return false;
    }
    return std::fmod(std::fabs(x), 2.0) == 1.0;
}

struct Prepared {
    TrajectoryRecord record;
    ParamVector direction;
};

Prepared prepare(const OptimizerState& state, const BiObjectiveProblem& problem, const ControlFunction& cf,
                 const StepConfig& sc) {
    const auto iter = static_cast<std::int64_t>(state.iter);
    const ObjectiveEval e = problem.evaluate(state.theta, EvalKey{sc.seed, state.iter});
    if (!std::isfinite(e.f1) || !std::isfinite(e.f2) || !e.grad_f1.allFinite() || !e.grad_f2.allFinite()) {
        throw NumericFailure("non-finite objective or gradient at iteration " + std::to_string(iter), iter);
    }
    Prepared p;
    const double norm1 = e.grad_f1.norm();
    const double psi = control_value(cf, e.f1, norm1);
    const double eta = dual_multiplier(e.grad_f1, e.grad_f2, psi, sc.omega);
    p.direction = update_direction(e.grad_f1, e.grad_f2, eta);
    if (!std::isfinite(psi) || !std::isfinite(eta) || !p.direction.allFinite()) {
        throw NumericFailure("non-finite update direction at iteration " + std::to_string(iter), iter);
    }
    p.record = TrajectoryRecord{state.iter, e.f1, e.f2, norm1, p.direction.norm(), eta, psi, 0};
    return p;
}

OptimizerState apply(const OptimizerState& state, const ParamVector& direction, const StepConfig& sc) {
    OptimizerState next;
    next.iter = state.iter + 1;
    if (sc.preconditioner == Preconditioner::Adam) {
        const double b2 = sc.adam_beta2;
        next.second_moment = state.second_moment.size() == direction.size()
                                 ? ParamVector(b2 * state.second_moment + (1.0 - b2) * direction.cwiseAbs2())
                                 : ParamVector((1.0 - b2) * direction.cwiseAbs2());
        const double correction = 1.0 - std::pow(b2, static_cast<double>(next.iter));
        const ParamVector scale =
            ((next.second_moment / correction).cwiseSqrt().array() + sc.adam_eps).inverse().matrix();
        next.theta = state.theta - sc.step_size * direction.cwiseProduct(scale);
    } else {
        next.theta = state.theta - sc.step_size * direction;
    }
    if (!next.theta.allFinite()) {
        const auto iter = static_cast<std::int64_t>(state.iter);
        throw NumericFailure("parameters became non-finite at iteration " + std::to_string(iter), iter);
    }
    return next;
}

}  // namespace

ControlFunction ControlFunction::phase_one(double alpha, double delta) {
    ControlFunction cf;
    cf.phase = Phase::PhaseI;
    cf.alpha = alpha;
    cf.delta = delta;
    cf.validate();
    return cf;
}

ControlFunction ControlFunction::phase_two(double beta, double delta, double epsilon, bool scaled) {
    ControlFunction cf;
    cf.phase = Phase::PhaseII;
    cf.beta = beta;
    cf.delta = delta;
    cf.epsilon = epsilon;
    cf.scaled = scaled;
    cf.validate();
    return cf;
}

void ControlFunction::validate() const {
    if (phase == Phase::PhaseI) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw InvalidArgument("Phase I control: alpha must be positive");
        }
        if (!(delta >= 1.0) || !std::isfinite(delta)) {
            throw InvalidArgument("Phase I control: delta must be >= 1");
        }
    } else {
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            throw InvalidArgument("Phase II control: beta must be positive");
        }
        if (!is_odd_integer(delta) || delta < 1.0) {
            throw InvalidArgument("Phase II control: delta must be an odd positive integer, got " +
                                  std::to_string(delta));
        }
        if (!std::isfinite(epsilon)) {
            throw InvalidArgument("Phase II control: epsilon must be finite");
        }
    }
}

void StepConfig::validate() const {
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
        throw InvalidArgument("step size must be non-negative and finite");
    }
    if (!(grad_tol >= 0.0)) {
        throw InvalidArgument("grad_tol must be non-negative");
    }
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
        throw InvalidArgument("omega must be non-negative and finite");
    }
    if (preconditioner == Preconditioner::Adam && !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw InvalidArgument("adam_beta2 must lie in (0, 1)");
    }
}

double Trajectory::max_eta() const noexcept {
    double m = 0.0;
    for (const auto& r : records) {
        m = std::max(m, r.eta);
    }
    return m;
}

double control_value(const ControlFunction& cf, double f1, double norm_grad_f1) {
    cf.validate();
    if (cf.phase == Phase::PhaseI) {
        return cf.alpha * std::pow(norm_grad_f1, cf.delta);
    }
    // Integral odd exponent: pow keeps the sign of the base.
    double value = cf.beta * std::pow(f1 - cf.epsilon, cf.delta);
    if (cf.scaled) {
        value *= norm_grad_f1 * norm_grad_f1;
    }
    return value;
}

double dual_multiplier(const ParamVector& grad_f1, const ParamVector& grad_f2, double psi, double omega) {
    if (grad_f1.size() != grad_f2.size()) {
        throw InvalidArgument("dual_multiplier: gradient lengths differ");
    }
    const double numerator = psi - grad_f2.dot(grad_f1);
    const double denominator = grad_f1.squaredNorm() + omega;
    if (denominator == 0.0) {
        // grad f1 = 0 with omega = 0: the constraint cannot be moved.
        return numerator > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return std::max(numerator / denominator, 0.0);
}

ParamVector update_direction(const ParamVector& grad_f1, const ParamVector& grad_f2, double eta) {
    if (grad_f1.size() != grad_f2.size()) {
        throw InvalidArgument("update_direction: gradient lengths differ");
    }
    if (eta == 0.0) {
        return grad_f2;
    }
    return grad_f2 + eta * grad_f1;
}

StepResult step(const OptimizerState& state, const BiObjectiveProblem& problem, const ControlFunction& cf,
                const StepConfig& sc) {
    cf.validate();
    sc.validate();
    Prepared p = prepare(state, problem, cf, sc);
    return {apply(state, p.direction, sc), p.record};
}

RunResult run(const BiObjectiveProblem& problem, const ControlFunction& cf, const StepConfig& sc,
              const ParamVector& theta0) {
    cf.validate();
    sc.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    RunResult result;
    result.state.theta = theta0;
    bool warned = false;
    while (result.state.iter < sc.max_iters) {
        Prepared p = prepare(result.state, problem, cf, sc);
        if (sc.record_timing) {
            p.record.wall_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count();
        }
        if (!warned && p.record.eta > sc.eta_warn) {
            result.warnings.push_back("dual multiplier " + std::to_string(p.record.eta) + " exceeds " +
                                      std::to_string(sc.eta_warn) + " at iteration " +
                                      std::to_string(p.record.iter));
            warned = true;
        }
        result.trajectory.records.push_back(p.record);
        if (p.record.norm_g < sc.grad_tol) {
            result.converged = true;
            break;
        }
        result.state = apply(result.state, p.direction, sc);
    }
    return result;
}

}  // namespace cul

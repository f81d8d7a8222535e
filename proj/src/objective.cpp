#include "cul/objective.hpp"

#include <cmath>
#include <string>

#include "cul/errors.hpp"

namespace cul {

BiObjectiveProblem::BiObjectiveProblem(std::string name, std::size_t dim, StochasticFn stochastic,
                                       FullFn full)
    : name_(std::move(name)), dim_(dim), stochastic_(std::move(stochastic)), full_(std::move(full)) {
    if (dim_ == 0) {
        throw InvalidArgument("problem '" + name_ + "': dimension must be positive");
    }
    if (!stochastic_) {
        throw InvalidArgument("problem '" + name_ + "': missing evaluation function");
    }
}

void BiObjectiveProblem::check(const ParamVector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != dim_) {
        throw InvalidArgument("problem '" + name_ + "': parameter vector has length " +
                              std::to_string(theta.size()) + ", expected " + std::to_string(dim_));
    }
}

ObjectiveEval BiObjectiveProblem::evaluate(const ParamVector& theta, EvalKey key) const {
    check(theta);
    return stochastic_(theta, key);
}

ObjectiveEval BiObjectiveProblem::evaluate_full(const ParamVector& theta) const {
    check(theta);
    return full_ ? full_(theta) : stochastic_(theta, EvalKey{});
}

BiObjectiveProblem BiObjectiveProblem::swapped() const {
    auto swap_eval = [](ObjectiveEval e) {
        std::swap(e.f1, e.f2);
        std::swap(e.grad_f1, e.grad_f2);
        return e;
    };
    StochasticFn stochastic = [inner = stochastic_, swap_eval](const ParamVector& theta, EvalKey key) {
        return swap_eval(inner(theta, key));
    };
    FullFn full;
    if (full_) {
        full = [inner = full_, swap_eval](const ParamVector& theta) { return swap_eval(inner(theta)); };
    }
    return {name_ + ":swapped", dim_, std::move(stochastic), std::move(full)};
}

BiObjectiveProblem make_quadratic_pair(const ParamVector& a, const ParamVector& b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("make_quadratic_pair: minimizers have lengths " +
                              std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    if (a.size() == 0) {
        throw InvalidArgument("make_quadratic_pair: empty minimizers");
    }
    auto eval = [a, b](const ParamVector& theta, EvalKey) {
        ObjectiveEval e;
        const ParamVector da = theta - a;
        const ParamVector db = theta - b;
        e.f1 = da.squaredNorm();
        e.f2 = db.squaredNorm();
        e.grad_f1 = 2.0 * da;
        e.grad_f2 = 2.0 * db;
        return e;
    };
    return {"quad", static_cast<std::size_t>(a.size()), eval};
}

double quadratic_front_oracle(const QuadraticPair& pair, double f1_value) {
    if (pair.a.size() != pair.b.size()) {
        throw InvalidArgument("quadratic_front_oracle: minimizers have unequal lengths");
    }
    const double dist2 = (pair.a - pair.b).squaredNorm();
    if (!(f1_value >= 0.0) || f1_value > dist2) {
        throw OutOfRange("quadratic_front_oracle: f1 value " + std::to_string(f1_value) +
                         " outside [0, " + std::to_string(dist2) + "]");
    }
    const double gap = std::sqrt(dist2) - std::sqrt(f1_value);
    return gap * gap;
}

FiniteDifferenceGrad finite_difference_grad(const BiObjectiveProblem& problem, const ParamVector& theta,
                                            double h, std::optional<EvalKey> key) {
    if (!(h > 0.0)) {
        throw InvalidArgument("finite_difference_grad: step must be positive");
    }
    if (!theta.allFinite()) {
        throw InvalidArgument("finite_difference_grad: non-finite parameters");
    }
    auto eval = [&](const ParamVector& x) {
        return key ? problem.evaluate(x, *key) : problem.evaluate_full(x);
    };
    const Eigen::Index n = theta.size();
    FiniteDifferenceGrad out{ParamVector(n), ParamVector(n)};
    ParamVector x = theta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const ObjectiveEval plus = eval(x);
        x[i] = orig - h;
        const ObjectiveEval minus = eval(x);
        x[i] = orig;
        if (!std::isfinite(plus.f1) || !std::isfinite(plus.f2) || !std::isfinite(minus.f1) ||
            !std::isfinite(minus.f2)) {
            throw NumericFailure("finite_difference_grad: non-finite objective at coordinate " +
                                 std::to_string(i));
        }
        out.grad_f1[i] = (plus.f1 - minus.f1) / (2.0 * h);
        out.grad_f2[i] = (plus.f2 - minus.f2) / (2.0 * h);
    }
    return out;
}

void ProblemRegistry::add(const std::string& name, Factory factory) {
    factories_[name] = std::move(factory);
}

bool ProblemRegistry::contains(const std::string& name) const { return factories_.contains(name); }

ProblemSetup ProblemRegistry::make(const std::string& name, const nlohmann::json& params) const {
    const auto it = factories_.find(name);
    if (it == factories_.end()) {
        std::string known;
        for (const auto& [k, _] : factories_) {
            known += (known.empty() ? "" : ", ") + k;
        }
        throw InvalidArgument("unknown problem '" + name + "' (known: " + known + ")");
    }
    return it->second(params);
}

std::vector<std::string> ProblemRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) {
        out.push_back(k);
    }
    return out;
}

}  // namespace cul

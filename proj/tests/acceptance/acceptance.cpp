// Acceptance suite: one PASS/FAIL line per criterion.
//
//   cul_acceptance                 run every criterion
//   cul_acceptance --criterion N   run criterion N only
//
// Exit status is 0 when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cul/cli.hpp"
#include "cul/diagnostics.hpp"
#include "cul/objective.hpp"
#include "cul/optimizer.hpp"
#include "cul/pareto.hpp"
#include "cul/persistence.hpp"
#include "cul/problems.hpp"
#include "cul/unlearn/task.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using cul::ParamVector;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Verdict()> check;
};

ParamVector v2(double x, double y) { return (ParamVector(2) << x, y).finished(); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

const cul::QuadraticPair kPair{v2(0, 0), v2(1, 0)};

cul::StepConfig quad_step() {
    cul::StepConfig sc;
    sc.step_size = 0.05;
    sc.max_iters = 5000;
    sc.grad_tol = 1e-6;
    sc.omega = 0.0;
    return sc;
}

struct QuadSweepResult {
    cul::BoundaryPair boundaries;
    cul::ParetoFront front;
};

const QuadSweepResult& quad_sweep() {
    static const QuadSweepResult r = [] {
        const auto problem = cul::make_quadratic_pair(kPair.a, kPair.b);
        QuadSweepResult out;
        out.boundaries = cul::solve_boundaries(problem, quad_step(), 1.0, 2.0, kPair.b);
        cul::SweepOptions opt;
        opt.tolerance = 1e-3;
        out.front = cul::sweep(problem, quad_step(), cul::ControlFunction::phase_two(5.0, 1.0, 0.0, true),
                               out.boundaries, {0.25, 0.5, 0.75}, opt);
        return out;
    }();
    return r;
}

Verdict dual_exactness() {
    cul::Rng rng(20240);
    double worst_g = 0.0, worst_active = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
        ParamVector g1(d), g2(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            g1[i] = rng.uniform(-2, 2);
            g2[i] = rng.uniform(-2, 2);
        }
        const double psi = rng.uniform(-3, 3);
        const double eta = cul::dual_multiplier(g1, g2, psi, 0.0);
        const ParamVector g = cul::update_direction(g1, g2, eta);
        worst_g = std::max(worst_g, (g - cul::testing::qp_direction(g1, g2, psi)).norm());
        if (eta > 0.0) worst_active = std::max(worst_active, std::abs(g1.dot(g) - psi));
    }
    return {worst_g < 1e-6 && worst_active < 1e-9,
            "max |g - g_qp| = " + fmt(worst_g) + ", max active |grad f1.g - psi| = " + fmt(worst_active)};
}

Verdict boundary_optimality() {
    const auto problem = cul::make_quadratic_pair(kPair.a, kPair.b);
    const auto high = cul::solve_boundary_high(problem, quad_step(), 1.0, 2.0, kPair.b);
    const double dist = (high.theta_star - kPair.a).norm();
    const double kkt = cul::kkt_phase1(high.run.trajectory.records.back(), {});
    return {dist < 1e-3 && kkt < 1e-6 && high.run.state.iter <= 5000,
            "|theta - a| = " + fmt(dist) + ", kkt_phase1 = " + fmt(kkt) + ", iters = " +
                std::to_string(high.run.state.iter)};
}

Verdict front_accuracy() {
    const auto& r = quad_sweep();
    double worst_f1 = 0.0, worst_f2 = 0.0;
    for (const auto& e : r.front.entries) {
        worst_f1 = std::max(worst_f1, std::abs(e.f1 - e.epsilon));
        worst_f2 = std::max(worst_f2, std::abs(e.f2 - cul::quadratic_front_oracle(kPair, e.f1)));
    }
    const bool complete = r.front.entries.size() == 3;
    return {complete && worst_f1 < 1e-3 && worst_f2 < 1e-2,
            std::to_string(r.front.entries.size()) + " points, max |f1 - eps| = " + fmt(worst_f1) +
                ", max |f2 - front| = " + fmt(worst_f2)};
}

Verdict rate_exponents() {
    const auto problem = cul::make_quadratic_pair(kPair.a, kPair.b);
    cul::StepConfig sc;
    sc.step_size = 1e-3;
    sc.max_iters = 5000;
    sc.grad_tol = 0.0;
    sc.omega = 0.0;
    const auto entries = cul::rate_study(problem, sc, 1.0, {1, 2, 3, 4}, kPair.b, 0.5);
    bool in_band = true;
    std::string detail = "slopes";
    for (const auto& e : entries) {
        const double target = -1.0 / e.delta;
        const bool ok = std::isfinite(e.slope) && std::abs(e.slope - target) <= 0.3 * std::abs(target);
        in_band = in_band && ok;
        detail += " d=" + fmt(e.delta) + ":" + fmt(e.slope) + (ok ? "" : "(out)");
    }
    const bool monotone = cul::rates_monotone(entries);
    detail += monotone ? ", ordering monotone" : ", ordering not monotone";
    return {in_band && monotone, detail};
}

Verdict penalty_monotonicity() {
    const auto& r = quad_sweep();
    double worst_hinge = 0.0, worst_penalty = 0.0;
    std::size_t n = 0;
    for (const auto* group : {&r.front.entries, &r.front.dominated}) {
        for (const auto& e : *group) {
            const auto& recs = e.run.trajectory.records;
            const double xi = 1.1 * e.run.trajectory.max_eta();
            const auto pen = cul::penalty_series(e.run.trajectory, {xi, e.epsilon});
            for (std::size_t i = 1; i < recs.size(); ++i) {
                const double h0 = std::max(recs[i - 1].f1 - e.epsilon, 0.0);
                const double h1 = std::max(recs[i].f1 - e.epsilon, 0.0);
                worst_hinge = std::max(worst_hinge, h1 - h0);
            }
            worst_penalty = std::max(worst_penalty, cul::max_step_increase(pen));
            ++n;
        }
    }
    return {n > 0 && worst_hinge <= 1e-8 && worst_penalty <= 1e-8,
            std::to_string(n) + " trajectories, max step increase of [f1-eps]+ = " + fmt(worst_hinge) +
                ", of P_xi = " + fmt(worst_penalty)};
}

Verdict gradient_correctness() {
    using namespace cul::unlearn;
    cul::Rng rng(606);
    double worst = 0.0;
    std::size_t max_params = 0;
    for (int draw = 0; draw < 20; ++draw) {
        const int side = 3 + static_cast<int>(rng.below(3));
        const int d = side * side;
        const int h = 4 + static_cast<int>(rng.below(8));
        const int z = 2 + static_cast<int>(rng.below(4));
        const std::vector<int> widths{d, h, z, h, d};
        const auto ds = build_dataset(2, 4, rng.next_u64(), side);
        UnlearnTask t;
        t.original = ToyModel::initialized(widths, rng.next_u64());
        t.forget = ds.forget;
        t.retain = ds.retain;
        t.crop = CropSpec{CropPattern::Center, 0.25, 0};
        t.batch = 2 + static_cast<int>(rng.below(3));
        t.noise_mode = draw % 2 == 0 ? NoiseMode::ThroughOriginal : NoiseMode::DirectNoise;
        auto ctx = std::make_shared<const TaskContext>(t);
        const auto problem = make_unlearn_problem(ctx);
        ParamVector theta = t.original.params();
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.2 * rng.normal();
        const cul::EvalKey key{rng.next_u64(), rng.below(10)};
        const auto e = problem.evaluate(theta, key);
        const auto fd = cul::finite_difference_grad(problem, theta, 1e-5, key);
        worst = std::max({worst, (fd.grad_f1 - e.grad_f1).norm() / e.grad_f1.norm(),
                          (fd.grad_f2 - e.grad_f2).norm() / e.grad_f2.norm()});
        max_params = std::max(max_params, t.original.param_count());
    }
    return {worst < 1e-4, "20 draws up to " + std::to_string(max_params) + " params, max rel. error = " + fmt(worst)};
}

// The toy criteria use the command-line defaults for the unlearn-toy problem.
struct ToyRun {
    cul::ToyTask task;
    cul::StepConfig sc;
    nlohmann::ordered_json cfg;
};

const ToyRun& toy_run() {
    static const ToyRun r = [] {
        const auto cfg = cul::cli::resolve_config({{"problem", "unlearn-toy"}, {"out", "unused.csv"}}, "sweep");
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [k, v] : cfg.items()) {
            if (k.rfind("task.", 0) == 0) params[k.substr(5)] = v;
        }
        cul::ToyTaskConfig tc = cul::toy_config_from_json(params);
        tc.threads = cul::threads_from_env();
        ToyRun out{cul::build_toy_task(tc), {}, cfg};
        out.sc.step_size = cfg.at("step.mu").get<double>();
        out.sc.max_iters = cfg.at("step.max_iters").get<std::uint64_t>();
        out.sc.grad_tol = cfg.at("step.grad_tol").get<double>();
        out.sc.omega = cfg.at("step.omega").get<double>();
        out.sc.seed = cfg.at("seed").get<std::uint64_t>();
        return out;
    }();
    return r;
}

Verdict toy_direction() {
    const auto& r = toy_run();
    const auto& ctx = *r.task.context;
    const auto problem = cul::unlearn::make_unlearn_problem(r.task.context);
    const double alpha = r.cfg.at("phase1.alpha").get<double>();
    const double delta = r.cfg.at("phase1.delta").get<double>();
    const auto high = cul::solve_boundaries(problem, r.sc, alpha, delta, ctx.task().original.params()).high;
    const auto base = ctx.evaluate(ctx.task().original);
    const auto after = ctx.evaluate(ctx.with_params(high.theta_star));
    const double increase = after.forget_err - base.forget_err;
    const bool ok = increase >= 0.5 * base.forget_err && after.retain_degradation <= 0.25 * increase;
    return {ok, "alpha=" + fmt(alpha) + " delta=" + fmt(delta) + " iters=" + std::to_string(high.run.state.iter) +
                    ", forget_err " + fmt(base.forget_err) + " -> " + fmt(after.forget_err) +
                    ", retain_degradation = " + fmt(after.retain_degradation) + " (" +
                    fmt(after.retain_degradation / increase) + " of the increase)"};
}

Verdict toy_controllability() {
    const auto& r = toy_run();
    const auto& ctx = *r.task.context;
    const auto problem = cul::unlearn::make_unlearn_problem(r.task.context);
    const auto bp = cul::solve_boundaries(problem, r.sc, r.cfg.at("phase1.alpha").get<double>(),
                                          r.cfg.at("phase1.delta").get<double>(), ctx.task().original.params());
    const auto fractions = r.cfg.at("sweep.fractions").get<std::vector<double>>();
    const auto cf = cul::ControlFunction::phase_two(r.cfg.at("phase2.beta").get<double>(),
                                                    r.cfg.at("phase2.delta").get<double>(), 0.0,
                                                    r.cfg.at("phase2.scaled").get<bool>());
    cul::SweepOptions opt;
    opt.warm_start = r.cfg.at("sweep.warm_start").get<bool>();
    const auto front = cul::sweep(problem, r.sc, cf, bp, fractions, opt);

    std::vector<const cul::FrontEntry*> all;
    for (const auto& e : front.entries) all.push_back(&e);
    for (const auto& e : front.dominated) all.push_back(&e);
    std::sort(all.begin(), all.end(), [](auto* a, auto* b) { return a->epsilon < b->epsilon; });
    std::vector<double> eps, forget, degradation;
    for (const auto* e : all) {
        const auto m = ctx.evaluate(ctx.with_params(e->theta));
        eps.push_back(e->epsilon);
        forget.push_back(m.forget_err);
        degradation.push_back(m.retain_degradation);
    }
    if (eps.size() < 2) return {false, "only " + std::to_string(eps.size()) + " levels solved"};
    // Nonincreasing in epsilon means rank correlation -1; report rho of the reversed order.
    const double rho_forget = -cul::testing::spearman(eps, forget);
    const double rho_degr = -cul::testing::spearman(eps, degradation);
    std::string detail = std::to_string(eps.size()) + " levels, forget_err";
    for (double v : forget) detail += " " + fmt(v);
    detail += ", retain_degradation";
    for (double v : degradation) detail += " " + fmt(v);
    detail += ", rho = " + fmt(rho_forget) + " / " + fmt(rho_degr);
    return {eps.size() == 5 && rho_forget >= 0.9 && rho_degr >= 0.9, detail};
}

Verdict determinism_and_formats() {
    const fs::path dir = fs::temp_directory_path() / "cul_acceptance_c9";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return cul::cli::run_command(args, sink, sink); };
    bool ok = true;
    std::string detail;
    for (const char* format : {"csv", "json"}) {
        for (const char* name : {"a", "b"}) {
            const std::string base = (dir / (std::string(name) + "." + format)).string();
            ok = ok && run({"sweep", "--problem", "quad", "--seed", "5", "--format", format, "--out", base,
                            "--trajectory-out", base + ".traj"}) == 0;
        }
        const std::string a = (dir / (std::string("a.") + format)).string();
        const std::string b = (dir / (std::string("b.") + format)).string();
        const bool same = cul::read_text(a) == cul::read_text(b) && cul::read_text(a + ".traj") == cul::read_text(b + ".traj");
        ok = ok && same;
        detail += std::string(format) + (same ? " identical, " : " DIFFERS, ");
    }
    for (const char* name : {"a.ckpt", "b.ckpt"}) {
        ok = ok && run({"pretrain", "--classes", "2", "--per-class", "4", "--pretrain-epochs", "20", "--batch", "4",
                        "--out", (dir / name).string()}) == 0;
    }
    const bool ckpt_same = cul::read_text(dir / "a.ckpt") == cul::read_text(dir / "b.ckpt");
    detail += ckpt_same ? "checkpoints identical, " : "checkpoints DIFFER, ";

    const auto model = cul::load_checkpoint(dir / "a.ckpt");
    const auto back = cul::decode_checkpoint(cul::encode_checkpoint(model));
    const bool bitwise = back.param_count() == model.param_count() &&
                         std::memcmp(back.params().data(), model.params().data(),
                                     model.param_count() * sizeof(double)) == 0;
    detail += bitwise ? "round trip bitwise, " : "round trip NOT bitwise, ";

    cul::Rng rng(99);
    std::vector<cul::Objectives> pts(1000);
    for (auto& p : pts) {
        p.f1 = std::floor(rng.uniform(0, 200)) / 10.0;
        p.f2 = std::floor(rng.uniform(0, 200)) / 10.0;
    }
    const bool filter = cul::nondominated_indices(pts) == cul::testing::brute_force_nondominated(pts);
    detail += filter ? "filter matches brute force" : "filter DIFFERS from brute force";
    fs::remove_all(dir);
    return {ok && ckpt_same && bitwise && filter, detail};
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "dual solver exactness", 1.0, dual_exactness},
        {2, "boundary optimality", 1.0, boundary_optimality},
        {3, "front accuracy", 5.0, front_accuracy},
        {4, "rate exponents", 30.0, rate_exponents},
        {5, "penalty and infeasibility monotonicity", 0.0, penalty_monotonicity},
        {6, "gradient correctness", 10.0, gradient_correctness},
        {7, "toy unlearning direction", 120.0, toy_direction},
        {8, "controllability across epsilon", 600.0, toy_controllability},
        {9, "determinism and formats", 0.0, determinism_and_formats},
    };
    return all;
}

bool run_one(const Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = c.check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
        v.pass = false;
        v.detail += ", over the " + fmt(c.budget_s) + " s budget";
    }
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << 'C' << c.id << ' ' << c.title << ": " << v.detail << " ("
              << fmt(secs) << " s)" << std::endl;
    return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    bool all_pass = true;
    for (const auto& c : criteria()) {
        if (only == 0 || only == c.id) all_pass = run_one(c) && all_pass;
    }
    return all_pass ? 0 : 1;
}

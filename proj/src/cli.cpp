#include "cul/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "cul/diagnostics.hpp"
#include "cul/errors.hpp"
#include "cul/pareto.hpp"
#include "cul/persistence.hpp"
#include "cul/problems.hpp"
#include "cul/unlearn/baselines.hpp"

namespace cul::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

enum class Kind { UInt, Real, Bool, String, RealList, StringList };

struct KeySpec {
    const char* key;
    Kind kind;
    const char* flag;  // bools: "--on,!--off"
    const char* help;
};

const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> s = {
        {"problem", Kind::String, "--problem", "problem name: quad or unlearn-toy"},
        {"seed", Kind::UInt, "--seed", "base random seed"},
        {"out", Kind::String, "--out", "output file"},
        {"format", Kind::String, "--format", "result format: csv or json"},
        {"trajectory_out", Kind::String, "--trajectory-out", "also write every iteration of every run here"},
        {"step.mu", Kind::Real, "--mu", "step size"},
        {"step.max_iters", Kind::UInt, "--max-iters", "iteration cap per run"},
        {"step.epochs", Kind::UInt, "--epochs", "unlearning epochs on the toy task (sets max_iters)"},
        {"step.grad_tol", Kind::Real, "--grad-tol", "stop when |g| falls below this"},
        {"step.omega", Kind::Real, "--omega", "regularizer of the dual denominator"},
        {"step.eta_warn", Kind::Real, "--eta-warn", "warn when the dual multiplier exceeds this"},
        {"step.timing", Kind::Bool, "--timing,!--no-timing", "record wall-clock milliseconds"},
        {"phase1.alpha", Kind::Real, "--alpha", "Phase I control coefficient"},
        {"phase1.delta", Kind::Real, "--delta", "Phase I control exponent"},
        {"phase2.beta", Kind::Real, "--beta", "Phase II control coefficient"},
        {"phase2.delta", Kind::Real, "--phase2-delta", "Phase II control exponent (odd integer)"},
        {"phase2.scaled", Kind::Bool, "--scaled,!--unscaled", "scale the Phase II control by |grad f1|^2"},
        {"sweep.fractions", Kind::RealList, "--fractions", "epsilon grid as fractions of the boundary range"},
        {"sweep.warm_start", Kind::Bool, "--warm-start,!--cold-start", "start each level at the previous solution"},
        {"sweep.tolerance", Kind::Real, "--tolerance", "allowed f1 - epsilon at the end of a level"},
        {"rates.deltas", Kind::RealList, "--delta", "control exponents of the rate study"},
        {"rates.window", Kind::Real, "--window", "trailing fraction of the run used for slope fitting"},
        {"rates.mu", Kind::Real, "--rates-mu", "step size of the rate study"},
        {"rates.max_iters", Kind::UInt, "--rates-iters", "iterations per rate-study run"},
        {"quad.a", Kind::RealList, "--quad-a", "minimizer of f1"},
        {"quad.b", Kind::RealList, "--quad-b", "minimizer of f2"},
        {"quad.start", Kind::RealList, "--start", "initial point (default: quad.b)"},
        {"task.classes", Kind::UInt, "--classes", "number of classes, half of them forgotten"},
        {"task.per_class", Kind::UInt, "--per-class", "images per class"},
        {"task.data_seed", Kind::UInt, "--data-seed", "dataset seed"},
        {"task.crop", Kind::String, "--crop", "center, top, bottom, left, right, random or keep-center"},
        {"task.crop_ratio", Kind::Real, "--crop-ratio", "fraction of the image removed (kept for keep-center)"},
        {"task.mask_seed", Kind::UInt, "--mask-seed", "seed of the random crop mask"},
        {"task.batch", Kind::UInt, "--batch", "minibatch size"},
        {"task.noise_mode", Kind::String, "--noise-mode", "through-original or direct"},
        {"task.proxy_retain_fraction", Kind::Real, "--proxy-retain-fraction",
         "fraction of the retain set replaced by held-out classes"},
        {"task.pretrain_epochs", Kind::UInt, "--pretrain-epochs", "full-batch pretraining epochs"},
        {"task.pretrain_lr", Kind::Real, "--pretrain-lr", "pretraining learning rate"},
        {"task.model_seed", Kind::UInt, "--model-seed", "initialization seed of the original model"},
        {"task.eval_seed", Kind::UInt, "--eval-seed", "seed of the fixed evaluation noise set"},
        {"task.checkpoint", Kind::String, "--checkpoint", "load the original model instead of pretraining"},
        {"baselines.kinds", Kind::StringList, "--kinds",
         "subset of max-loss, retain-label, noisy-label, composite-loss"},
        {"baselines.mu", Kind::Real, "--baseline-mu", "baseline step size"},
        {"baselines.lambda", Kind::Real, "--lambda", "retain weight of composite-loss"},
        {"baselines.noise_std", Kind::Real, "--noise-std", "label noise of noisy-label and composite-loss"},
    };
    return s;
}

const KeySpec& spec_for(const std::string& key) {
    for (const auto& s : schema()) {
        if (key == s.key) {
            return s;
        }
    }
    throw InvalidArgument("unknown config key '" + key + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto at = text.find(sep, start);
        parts.push_back(text.substr(start, at - start));
        if (at == std::string::npos) break;
        start = at + 1;
    }
    return parts;
}

json from_text(const KeySpec& s, const std::string& text) {
    const std::string where = std::string(s.flag) + " (" + s.key + ")";
    auto real = [&](const std::string& t) {
        try {
            return parse_double(t);
        } catch (const InvalidArgument&) {
            throw InvalidArgument(where + ": expected a number, got '" + t + "'");
        }
    };
    switch (s.kind) {
        case Kind::UInt: {
            std::uint64_t v = 0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
                throw InvalidArgument(where + ": expected a non-negative integer, got '" + text + "'");
            }
            return v;
        }
        case Kind::Real:
            return real(text);
        case Kind::String:
            return text;
        case Kind::RealList: {
            json arr = json::array();
            for (const auto& p : split(text, ',')) arr.push_back(real(p));
            return arr;
        }
        case Kind::StringList: {
            json arr = json::array();
            for (const auto& p : split(text, ',')) arr.push_back(p);
            return arr;
        }
        case Kind::Bool:
            break;
    }
    throw InvalidArgument(where + ": not a valued option");
}

void check_type(const KeySpec& s, const json& v) {
    bool ok = false;
    switch (s.kind) {
        case Kind::UInt: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); break;
        case Kind::Real: ok = v.is_number(); break;
        case Kind::Bool: ok = v.is_boolean(); break;
        case Kind::String: ok = v.is_string(); break;
        case Kind::RealList:
            ok = v.is_array() && !v.empty();
            for (const auto& e : v) ok = ok && e.is_number();
            break;
        case Kind::StringList:
            ok = v.is_array() && !v.empty();
            for (const auto& e : v) ok = ok && e.is_string();
            break;
    }
    if (!ok) {
        static const char* names[] = {"a non-negative integer", "a number", "a boolean",
                                      "a string", "a nonempty array of numbers", "a nonempty array of strings"};
        throw InvalidArgument("config key '" + std::string(s.key) + "' must be " + names[static_cast<int>(s.kind)]);
    }
}

json load_config_file(const std::string& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError& e) {
        throw InvalidArgument(std::string("config file: ") + e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw InvalidArgument("config file '" + path + "' must contain a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        check_type(spec_for(key), value);
    }
    return j;
}

bool is_toy(const std::string& problem) { return problem == "unlearn-toy"; }

template <typename T>
T get(const ordered_json& cfg, const char* key) {
    return cfg.at(key).get<T>();
}

void set_default(ordered_json& cfg, const char* key, const json& value) {
    if (!cfg.contains(key)) {
        cfg[key] = value;
    }
}

StepConfig step_config(const ordered_json& cfg) {
    StepConfig sc;
    sc.step_size = get<double>(cfg, "step.mu");
    sc.max_iters = get<std::uint64_t>(cfg, "step.max_iters");
    sc.grad_tol = get<double>(cfg, "step.grad_tol");
    sc.omega = get<double>(cfg, "step.omega");
    sc.eta_warn = get<double>(cfg, "step.eta_warn");
    sc.record_timing = get<bool>(cfg, "step.timing");
    sc.seed = get<std::uint64_t>(cfg, "seed");
    sc.validate();
    return sc;
}

json problem_params(const ordered_json& cfg) {
    const std::string problem = get<std::string>(cfg, "problem");
    const std::string prefix = is_toy(problem) ? "task." : "quad.";
    json params = json::object();
    for (const auto& [key, value] : cfg.items()) {
        if (key.rfind(prefix, 0) == 0) {
            params[key.substr(prefix.size())] = value;
        }
    }
    return params;
}

ProblemSetup make_setup(const ordered_json& cfg) {
    return builtin_problems().make(get<std::string>(cfg, "problem"), problem_params(cfg));
}

ResultFormat result_format(const ordered_json& cfg) {
    return get<std::string>(cfg, "format") == "json" ? ResultFormat::JSON : ResultFormat::CSV;
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

void print_warnings(const RunResult& r, const std::string& label, std::ostream& err) {
    for (const auto& w : r.warnings) {
        err << "warning [" << label << "]: " << w << '\n';
    }
}

ResultRow final_row(const std::string& phase, std::optional<double> epsilon, const RunResult& run, double f1,
                    double f2) {
    ResultRow row = run.trajectory.empty() ? ResultRow{} : to_row(phase, epsilon, run.trajectory.records.back());
    row.phase = phase;
    row.epsilon = epsilon;
    row.iter = run.state.iter;
    row.f1 = f1;
    row.f2 = f2;
    return row;
}

void summarize(std::ostream& out, const std::string& label, double f1, double f2, const RunResult& run,
               const ProblemSetup& setup, const ParamVector& theta, std::optional<double> epsilon = std::nullopt) {
    out << label;
    if (epsilon) out << " eps=" << num(*epsilon);
    out << " f1=" << num(f1) << " f2=" << num(f2) << " iters=" << run.state.iter
        << " max_eta=" << num(run.trajectory.max_eta()) << (run.converged ? " converged" : "");
    if (setup.describe) {
        const json d = setup.describe(theta);
        for (const auto& [k, v] : d.items()) {
            out << ' ' << k << '=' << (v.is_number() ? num(v.get<double>()) : v.dump());
        }
    }
    out << '\n';
}

void write_trajectories(const ordered_json& cfg, const std::vector<ResultRow>& rows) {
    if (cfg.contains("trajectory_out")) {
        write_results(rows, get<std::string>(cfg, "trajectory_out"), result_format(cfg));
    }
}

void append(std::vector<ResultRow>& dst, const std::vector<ResultRow>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

// ---- commands -------------------------------------------------------------

int cmd_solve_boundaries(const ordered_json& cfg, std::ostream& out, std::ostream& err) {
    const ProblemSetup setup = make_setup(cfg);
    const StepConfig sc = step_config(cfg);
    const BoundaryPair b = solve_boundaries(setup.problem, sc, get<double>(cfg, "phase1.alpha"),
                                            get<double>(cfg, "phase1.delta"), setup.start);
    print_warnings(b.high.run, "boundary-high", err);
    print_warnings(b.low.run, "boundary-low", err);
    summarize(out, "boundary-high", b.high.f1_at, b.high.f2_at, b.high.run, setup, b.high.theta_star);
    summarize(out, "boundary-low", b.low.f1_at, b.low.f2_at, b.low.run, setup, b.low.theta_star);

    const std::vector<ResultRow> rows = {final_row("boundary-high", std::nullopt, b.high.run, b.high.f1_at, b.high.f2_at),
                                         final_row("boundary-low", std::nullopt, b.low.run, b.low.f1_at, b.low.f2_at)};
    std::vector<ResultRow> traj = to_rows("phase1-high", std::nullopt, b.high.run.trajectory);
    append(traj, to_rows("phase1-low", std::nullopt, b.low.run.trajectory));
    write_results(rows, get<std::string>(cfg, "out"), result_format(cfg));
    write_trajectories(cfg, traj);
    return kOk;
}

int cmd_sweep(const ordered_json& cfg, std::ostream& out, std::ostream& err) {
    const ProblemSetup setup = make_setup(cfg);
    const StepConfig sc = step_config(cfg);
    const BoundaryPair b = solve_boundaries(setup.problem, sc, get<double>(cfg, "phase1.alpha"),
                                            get<double>(cfg, "phase1.delta"), setup.start);
    print_warnings(b.high.run, "boundary-high", err);
    print_warnings(b.low.run, "boundary-low", err);
    summarize(out, "boundary-high", b.high.f1_at, b.high.f2_at, b.high.run, setup, b.high.theta_star);
    summarize(out, "boundary-low", b.low.f1_at, b.low.f2_at, b.low.run, setup, b.low.theta_star);

    ControlFunction cf = ControlFunction::phase_two(get<double>(cfg, "phase2.beta"), get<double>(cfg, "phase2.delta"),
                                                    0.0, get<bool>(cfg, "phase2.scaled"));
    SweepOptions opts;
    opts.warm_start = get<bool>(cfg, "sweep.warm_start");
    opts.cold_start_theta = setup.start;
    if (cfg.contains("sweep.tolerance")) {
        opts.tolerance = get<double>(cfg, "sweep.tolerance");
    }
    const auto fractions = get<std::vector<double>>(cfg, "sweep.fractions");
    const ParetoFront front = sweep(setup.problem, sc, cf, b, fractions, opts);
    if (front.entries.empty() && front.dominated.empty()) {
        err << "warning: boundaries coincide (f1 range is empty); no interior levels solved\n";
    }

    std::vector<const FrontEntry*> all;
    for (const auto& e : front.entries) all.push_back(&e);
    for (const auto& e : front.dominated) all.push_back(&e);
    std::sort(all.begin(), all.end(), [](const FrontEntry* x, const FrontEntry* y) { return x->epsilon < y->epsilon; });

    std::vector<ResultRow> rows = {final_row("boundary-high", std::nullopt, b.high.run, b.high.f1_at, b.high.f2_at)};
    std::vector<ResultRow> traj = to_rows("phase1-high", std::nullopt, b.high.run.trajectory);
    for (const FrontEntry* e : all) {
        const bool dominated = std::any_of(front.dominated.begin(), front.dominated.end(),
                                           [&](const FrontEntry& d) { return &d == e; });
        const std::string phase = dominated ? "phase2-dominated" : "phase2";
        print_warnings(e->run, phase, err);
        summarize(out, phase, e->f1, e->f2, e->run, setup, e->theta, e->epsilon);
        rows.push_back(final_row(phase, e->epsilon, e->run, e->f1, e->f2));
        append(traj, to_rows("phase2", e->epsilon, e->run.trajectory));
    }
    rows.push_back(final_row("boundary-low", std::nullopt, b.low.run, b.low.f1_at, b.low.f2_at));
    append(traj, to_rows("phase1-low", std::nullopt, b.low.run.trajectory));
    write_results(rows, get<std::string>(cfg, "out"), result_format(cfg));
    write_trajectories(cfg, traj);
    return kOk;
}

int cmd_rates(const ordered_json& cfg, std::ostream& out, std::ostream&) {
    const ProblemSetup setup = make_setup(cfg);
    StepConfig sc = step_config(cfg);
    sc.step_size = get<double>(cfg, "rates.mu");
    sc.max_iters = get<std::uint64_t>(cfg, "rates.max_iters");
    sc.grad_tol = 0.0;
    const auto deltas = get<std::vector<double>>(cfg, "rates.deltas");
    const auto entries = rate_study(setup.problem, sc, get<double>(cfg, "phase1.alpha"), deltas, setup.start,
                                    get<double>(cfg, "rates.window"));
    std::vector<std::vector<double>> table;
    std::vector<ResultRow> traj;
    for (const auto& e : entries) {
        const double target = -1.0 / e.delta;
        const double dev = std::abs(e.slope - target) / std::abs(target);
        table.push_back({e.delta, e.slope, target, dev, static_cast<double>(e.iterations), e.final_grad_f1_norm});
        out << "rates delta=" << num(e.delta) << " slope=" << num(e.slope) << " target=" << num(target)
            << " deviation=" << num(dev) << (dev <= 0.3 ? " within-band" : " outside-band") << '\n';
        std::ostringstream label;
        label << "phase1-delta" << num(e.delta);
        append(traj, to_rows(label.str(), std::nullopt, e.trajectory));
    }
    out << "rates ordering " << (rates_monotone(entries) ? "monotone" : "not monotone") << " in delta\n";
    write_table(get<std::string>(cfg, "out"),
                {"delta", "slope", "target", "relative_deviation", "iterations", "final_grad_f1_norm"}, table);
    write_trajectories(cfg, traj);
    return kOk;
}

ToyTask toy_task(const ordered_json& cfg) { return build_toy_task(toy_config_from_json(problem_params(cfg))); }

int cmd_pretrain(const ordered_json& cfg, std::ostream& out, std::ostream&) {
    ToyTaskConfig tc = toy_config_from_json(problem_params(cfg));
    if (tc.checkpoint) {
        throw InvalidArgument("pretrain: task.checkpoint would skip pretraining; drop --checkpoint");
    }
    const ToyTask task = build_toy_task(tc);
    const auto& original = task.context->task().original;
    out << "pretrain loss=" << num(task.pretrain_loss)
        << " rel_err_forget=" << num(unlearn::relative_error(original, task.dataset.forget, tc.crop))
        << " rel_err_retain=" << num(unlearn::relative_error(original, task.dataset.retain, tc.crop))
        << " params=" << original.param_count() << '\n';
    save_checkpoint(original, get<std::string>(cfg, "out"));
    return kOk;
}

int cmd_baselines(const ordered_json& cfg, std::ostream& out, std::ostream& err) {
    const ToyTask task = toy_task(cfg);
    const auto& ctx = *task.context;
    const auto& original = ctx.task().original;
    const StepConfig sc = step_config(cfg);
    const auto kinds = get<std::vector<std::string>>(cfg, "baselines.kinds");
    std::vector<unlearn::BaselineKind> parsed;
    for (const auto& k : kinds) parsed.push_back(unlearn::parse_baseline(k));

    std::vector<std::pair<std::string, unlearn::UnlearnMetrics>> results;
    const auto base = ctx.evaluate(original);
    results.emplace_back("original", base);

    const BiObjectiveProblem problem = unlearn::make_unlearn_problem(task.context);
    StepConfig phase1_cfg = sc;
    phase1_cfg.seed = derive_seed(sc.seed, 0xB0, 1);
    const BoundaryResult high = solve_boundary_high(problem, phase1_cfg, get<double>(cfg, "phase1.alpha"),
                                                    get<double>(cfg, "phase1.delta"), original.params());
    print_warnings(high.run, "constrained", err);
    results.emplace_back("constrained-phase1", ctx.evaluate(ctx.with_params(high.theta_star)));

    for (std::size_t k = 0; k < parsed.size(); ++k) {
        unlearn::BaselineConfig bc;
        bc.step_size = get<double>(cfg, "baselines.mu");
        bc.lambda = get<double>(cfg, "baselines.lambda");
        bc.noise_std = get<double>(cfg, "baselines.noise_std");
        bc.iterations = sc.max_iters;
        bc.seed = derive_seed(sc.seed, 0xBA5E, static_cast<std::uint64_t>(parsed[k]));
        const auto model = unlearn::run_baseline(parsed[k], ctx, original, bc);
        results.emplace_back(unlearn::to_string(parsed[k]), ctx.evaluate(model));
    }

    std::string csv = "method,forget_err,retain_err,noise_prox,retain_degradation,forget_gain\n";
    ordered_json arr = ordered_json::array();
    for (const auto& [name, m] : results) {
        const double gain = (m.forget_err - base.forget_err) / base.forget_err;
        out << name << " forget_err=" << num(m.forget_err) << " retain_err=" << num(m.retain_err)
            << " noise_prox=" << num(m.noise_prox) << " retain_degradation=" << num(m.retain_degradation)
            << " forget_gain=" << num(gain) << '\n';
        csv += name;
        for (double v : {m.forget_err, m.retain_err, m.noise_prox, m.retain_degradation, gain}) {
            csv += ',' + format_double(v);
        }
        csv += '\n';
        arr.push_back({{"method", name},
                       {"forget_err", m.forget_err},
                       {"retain_err", m.retain_err},
                       {"noise_prox", m.noise_prox},
                       {"retain_degradation", m.retain_degradation},
                       {"forget_gain", gain}});
    }
    write_text(get<std::string>(cfg, "out"), result_format(cfg) == ResultFormat::CSV ? csv : arr.dump(1) + "\n");
    return kOk;
}

void write_two_column(const std::filesystem::path& path, const char* x, const char* y,
                      const std::vector<std::pair<double, double>>& pts) {
    std::string text = std::string("# ") + x + ' ' + y + '\n';
    for (const auto& [a, b] : pts) {
        text += format_double(a) + ' ' + format_double(b) + '\n';
    }
    write_text(path, text);
}

int cmd_report(const ordered_json& cfg, bool show_config, const std::string& input, const std::string& out_dir,
               std::ostream& out) {
    if (show_config) {
        out << cfg.dump(2) << '\n';
        return kOk;
    }
    if (input.empty() || out_dir.empty()) {
        throw InvalidArgument("report: need --show-config, or both --input and --out-dir");
    }
    const auto rows = read_results_csv(input);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    // Last row per epsilon level: the final state of each constrained run.
    std::map<double, ResultRow> by_eps;
    std::vector<std::string> phases;
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    std::map<std::string, double> running;
    for (const auto& r : rows) {
        if (r.epsilon) by_eps[*r.epsilon] = r;
        const std::string key = r.epsilon ? r.phase + "_eps" + format_double(*r.epsilon) : r.phase;
        if (!curves.count(key)) {
            phases.push_back(key);
            running[key] = r.grad_f1_norm;
        }
        running[key] = std::min(running[key], r.grad_f1_norm);
        if (running[key] > 0.0) {
            curves[key].emplace_back(std::log(static_cast<double>(r.iter + 1)), std::log(running[key]));
        } else {
            curves[key];
        }
    }
    std::vector<std::string> written;
    if (!by_eps.empty()) {
        std::vector<std::pair<double, double>> f1, f2;
        for (const auto& [eps, r] : by_eps) {
            f1.emplace_back(eps, r.f1);
            f2.emplace_back(eps, r.f2);
        }
        write_two_column(dir / "epsilon_f1.dat", "epsilon", "f1", f1);
        write_two_column(dir / "epsilon_f2.dat", "epsilon", "f2", f2);
        written.insert(written.end(), {"epsilon_f1.dat", "epsilon_f2.dat"});
    }
    for (const auto& key : phases) {
        if (curves[key].size() < 2) continue;
        const std::string name = "logt_runmin_" + key + ".dat";
        write_two_column(dir / name, "log_t", "log_runmin_grad_f1_norm", curves[key]);
        written.push_back(name);
    }
    out << "report wrote " << written.size() << " files to " << out_dir << '\n';
    return kOk;
}

struct SubState {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
    bool show_config = false;
    std::string input;
    std::string out_dir;
};

const std::vector<std::pair<std::string, std::string>>& commands() {
    static const std::vector<std::pair<std::string, std::string>> c = {
        {"pretrain", "train the original toy model and save a checkpoint"},
        {"solve-boundaries", "Phase I solves for the two boundary solutions"},
        {"sweep", "boundaries plus Phase II solves across an epsilon grid"},
        {"rates", "Phase I convergence-rate study over control exponents"},
        {"baselines", "compare the constrained solver with fine-tuning baselines on the toy task"},
        {"report", "echo the resolved config or export plot-ready two-column files"},
    };
    return c;
}

const char* type_name(Kind k) {
    switch (k) {
        case Kind::UInt: return "UINT";
        case Kind::Real: return "REAL";
        case Kind::RealList: return "REAL,...";
        case Kind::StringList: return "NAME,...";
        default: return "TEXT";
    }
}

void register_options(SubState& st, const std::string& command) {
    st.app->add_option("--config", st.config_path, "JSON config with flat dotted keys; flags override it");
    for (const auto& s : schema()) {
        const std::string key = s.key;
        const bool rates_delta = key == "rates.deltas";
        if ((command == "rates" && key == "phase1.delta") || (command != "rates" && rates_delta)) {
            continue;
        }
        if (s.kind == Kind::Bool) {
            st.flags[key] = false;
            st.options[key] = st.app->add_flag(s.flag, st.flags[key], s.help)->default_str("");
        } else {
            st.options[key] = st.app->add_option(s.flag, st.raw[key], s.help)->type_name(type_name(s.kind));
        }
    }
    if (command == "report") {
        st.app->add_flag("--show-config", st.show_config, "print the resolved config as JSON");
        st.app->add_option("--input", st.input, "result CSV to export");
        st.app->add_option("--out-dir", st.out_dir, "directory for the exported files");
    }
}

json gather_given(const SubState& st) {
    json given = st.config_path.empty() ? json::object() : load_config_file(st.config_path);
    for (const auto& [key, opt] : st.options) {
        if (opt->count() == 0) continue;
        const KeySpec& s = spec_for(key);
        given[key] = s.kind == Kind::Bool ? json(st.flags.at(key)) : from_text(s, st.raw.at(key));
    }
    return given;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& s : schema()) keys.emplace_back(s.key);
    return keys;
}

ordered_json resolve_config(const json& given, const std::string& command) {
    for (const auto& [key, value] : given.items()) {
        check_type(spec_for(key), value);
    }
    const bool toy_only = command == "pretrain" || command == "baselines";
    json g = given;
    if (toy_only) {
        if (g.contains("problem") && !is_toy(g["problem"].get<std::string>())) {
            throw InvalidArgument("config key 'problem': " + command + " needs unlearn-toy");
        }
        g["problem"] = "unlearn-toy";
    }
    if (!g.contains("problem")) {
        throw InvalidArgument("missing required config key 'problem' (--problem)");
    }
    const std::string problem = g["problem"].get<std::string>();
    if (!builtin_problems().contains(problem)) {
        throw InvalidArgument("config key 'problem': unknown problem '" + problem + "' (expected quad or unlearn-toy)");
    }
    if (command != "report" && !g.contains("out")) {
        throw InvalidArgument("missing required config key 'out' (--out)");
    }

    ordered_json cfg = ordered_json::object();
    for (const auto& s : schema()) {
        if (g.contains(s.key)) cfg[s.key] = g[s.key];
    }
    const bool toy = is_toy(problem);
    set_default(cfg, "seed", 0);
    set_default(cfg, "format", "csv");
    set_default(cfg, "step.mu", toy ? 1e-4 : 0.05);
    set_default(cfg, "step.grad_tol", toy ? 0.0 : 1e-6);
    set_default(cfg, "step.omega", toy ? 1e-7 : 0.0);
    set_default(cfg, "step.eta_warn", 1e6);
    set_default(cfg, "step.timing", false);
    set_default(cfg, "phase1.alpha", toy ? 5.0 : 1.0);
    set_default(cfg, "phase1.delta", 2.0);
    set_default(cfg, "phase2.beta", 5.0);
    set_default(cfg, "phase2.delta", 1.0);
    set_default(cfg, "phase2.scaled", true);
    set_default(cfg, "sweep.fractions",
                toy ? json::array({0.16, 0.32, 0.48, 0.64, 0.8}) : json::array({0.25, 0.5, 0.75}));
    set_default(cfg, "sweep.warm_start", true);
    set_default(cfg, "rates.deltas", json::array({1.0, 2.0, 3.0, 4.0}));
    set_default(cfg, "rates.window", 0.5);
    set_default(cfg, "rates.mu", 1e-3);
    set_default(cfg, "rates.max_iters", 5000);
    if (toy) {
        set_default(cfg, "task.classes", 8);
        set_default(cfg, "task.per_class", 32);
        set_default(cfg, "task.data_seed", 1);
        set_default(cfg, "task.crop", "center");
        set_default(cfg, "task.crop_ratio", 0.5);
        set_default(cfg, "task.mask_seed", 0);
        set_default(cfg, "task.batch", 32);
        set_default(cfg, "task.noise_mode", "through-original");
        set_default(cfg, "task.proxy_retain_fraction", 0.0);
        set_default(cfg, "task.pretrain_epochs", 500);
        set_default(cfg, "task.pretrain_lr", 0.01);
        set_default(cfg, "task.model_seed", 0);
        set_default(cfg, "task.eval_seed", 0);
        set_default(cfg, "step.epochs", 5);
        const auto forget = get<std::uint64_t>(cfg, "task.classes") / 2 * get<std::uint64_t>(cfg, "task.per_class");
        const auto batch = get<std::uint64_t>(cfg, "task.batch");
        if (batch == 0 || batch > forget) {
            throw InvalidArgument("config key 'task.batch' must lie in [1, forget set size]");
        }
        set_default(cfg, "step.max_iters", get<std::uint64_t>(cfg, "step.epochs") * (forget / batch));
        set_default(cfg, "baselines.kinds",
                    json::array({"max-loss", "retain-label", "noisy-label", "composite-loss"}));
        set_default(cfg, "baselines.mu", 1e-3);
        set_default(cfg, "baselines.lambda", 1.0);
        set_default(cfg, "baselines.noise_std", 0.5);
    } else {
        set_default(cfg, "step.max_iters", 5000);
        set_default(cfg, "quad.a", json::array({0.0, 0.0}));
        set_default(cfg, "quad.b", json::array({1.0, 0.0}));
        set_default(cfg, "quad.start", cfg["quad.b"]);
        set_default(cfg, "sweep.tolerance", 1e-3);
    }
    const std::string fmt = get<std::string>(cfg, "format");
    if (fmt != "csv" && fmt != "json") {
        throw InvalidArgument("config key 'format' must be csv or json, got '" + fmt + "'");
    }
    for (const char* key : {"rates.window"}) {
        const double w = get<double>(cfg, key);
        if (!(w > 0.0 && w <= 1.0)) {
            throw InvalidArgument("config key 'rates.window' must lie in (0, 1]");
        }
    }
    // Fail on bad values before any run starts.
    (void)step_config(cfg);
    ControlFunction::phase_one(get<double>(cfg, "phase1.alpha"), get<double>(cfg, "phase1.delta"));
    ControlFunction::phase_two(get<double>(cfg, "phase2.beta"), get<double>(cfg, "phase2.delta"), 0.0,
                               get<bool>(cfg, "phase2.scaled"));
    if (toy) {
        (void)toy_config_from_json(problem_params(cfg));
    }
    return cfg;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"cul: epsilon-constrained unlearning experiments"};
    app.require_subcommand(1);
    std::vector<std::unique_ptr<SubState>> subs;
    for (const auto& [name, help] : commands()) {
        auto st = std::make_unique<SubState>();
        st->app = app.add_subcommand(name, help);
        register_options(*st, name);
        subs.push_back(std::move(st));
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    SubState* chosen = nullptr;
    for (auto& st : subs) {
        if (st->app->parsed()) chosen = st.get();
    }
    const std::string command = chosen->app->get_name();

    try {
        if (command == "report" && !chosen->show_config) {
            return cmd_report(ordered_json::object(), false, chosen->input, chosen->out_dir, out);
        }
        const ordered_json cfg = resolve_config(gather_given(*chosen), command);
        if (command == "pretrain") return cmd_pretrain(cfg, out, err);
        if (command == "solve-boundaries") return cmd_solve_boundaries(cfg, out, err);
        if (command == "sweep") return cmd_sweep(cfg, out, err);
        if (command == "rates") return cmd_rates(cfg, out, err);
        if (command == "baselines") return cmd_baselines(cfg, out, err);
        return cmd_report(cfg, chosen->show_config, chosen->input, chosen->out_dir, out);
    } catch (const ConstraintViolation& e) {
        err << "constraint violation: " << e.what() << '\n';
        return kConstraintViolation;
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const OutOfRange& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kIoFailure;
    }
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace cul::cli

#include "cul/problems.hpp"

#include <cstdlib>
#include <set>

#include "cul/errors.hpp"
#include "cul/persistence.hpp"

namespace cul {

namespace {

using nlohmann::json;

ParamVector vector_param(const json& params, const char* key, ParamVector fallback) {
    if (!params.contains(key)) {
        return fallback;
    }
    const json& v = params.at(key);
    if (!v.is_array() || v.empty()) {
        throw InvalidArgument(std::string("problem parameter '") + key + "' must be a nonempty array of numbers");
    }
    ParamVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
            throw InvalidArgument(std::string("problem parameter '") + key + "' must contain numbers only");
        }
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
}

void reject_unknown(const json& params, const std::set<std::string>& known, const std::string& problem) {
    if (params.is_null()) {
        return;
    }
    if (!params.is_object()) {
        throw InvalidArgument("parameters of problem '" + problem + "' must be a JSON object");
    }
    for (const auto& [key, value] : params.items()) {
        if (!known.count(key)) {
            throw InvalidArgument("unknown parameter '" + key + "' for problem '" + problem + "'");
        }
    }
}

template <typename T>
T get_or(const json& params, const std::string& key, T fallback) {
    if (params.is_null() || !params.contains(key)) {
        return fallback;
    }
    try {
        return params.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("parameter '" + key + "' has the wrong type");
    }
}

ProblemSetup make_quad(const json& params) {
    reject_unknown(params, {"a", "b", "start"}, "quad");
    const json p = params.is_null() ? json::object() : params;
    ParamVector a = vector_param(p, "a", ParamVector::Zero(2));
    ParamVector b = vector_param(p, "b", (ParamVector(2) << 1.0, 0.0).finished());
    if (a.size() != b.size()) {
        throw InvalidArgument("quad: a and b must have the same length");
    }
    ParamVector start = vector_param(p, "start", b);
    if (start.size() != a.size()) {
        throw InvalidArgument("quad: start must have the same length as a and b");
    }
    const QuadraticPair pair{a, b};
    ProblemSetup setup{make_quadratic_pair(a, b), start, {}};
    setup.describe = [pair](const ParamVector& theta) {
        const double f1 = (theta - pair.a).squaredNorm();
        json out = json::object();
        const double gap = (pair.a - pair.b).squaredNorm();
        out["front_f2"] = f1 <= gap ? json(quadratic_front_oracle(pair, f1)) : json(nullptr);
        return out;
    };
    return setup;
}

ProblemSetup make_toy(const json& params) {
    const ToyTaskConfig cfg = toy_config_from_json(params.is_null() ? json::object() : params);
    ToyTask task = build_toy_task(cfg);
    auto ctx = task.context;
    ProblemSetup setup{unlearn::make_unlearn_problem(ctx), ctx->task().original.params(), {}};
    setup.describe = [ctx](const ParamVector& theta) {
        const auto m = ctx->evaluate(ctx->with_params(theta));
        return json{{"forget_err", m.forget_err},
                    {"retain_err", m.retain_err},
                    {"noise_prox", m.noise_prox},
                    {"retain_degradation", m.retain_degradation}};
    };
    return setup;
}

}  // namespace

void ToyTaskConfig::validate() const {
    if (classes < 2 || classes % 2 != 0) {
        throw InvalidArgument("task.classes must be a positive even number");
    }
    if (per_class < 2) {
        throw InvalidArgument("task.per_class must be >= 2");
    }
    if (batch < 1) {
        throw InvalidArgument("task.batch must be positive");
    }
    if (!(proxy_retain_fraction >= 0.0 && proxy_retain_fraction <= 1.0)) {
        throw InvalidArgument("task.proxy_retain_fraction must lie in [0, 1]");
    }
    if (threads < 1) {
        throw InvalidArgument("threads must be >= 1");
    }
    crop.validate();
}

std::vector<std::string> toy_config_keys() {
    return {"classes",        "per_class",     "data_seed",  "side",          "crop",
            "crop_ratio",     "mask_seed",     "batch",      "noise_mode",    "proxy_retain_fraction",
            "threads",        "pretrain_epochs", "pretrain_lr", "model_seed", "widths",
            "checkpoint",     "eval_seed"};
}

ToyTaskConfig toy_config_from_json(const json& params) {
    const auto keys = toy_config_keys();
    reject_unknown(params, std::set<std::string>(keys.begin(), keys.end()), "unlearn-toy");
    ToyTaskConfig c;
    c.classes = get_or(params, "classes", c.classes);
    c.per_class = get_or(params, "per_class", c.per_class);
    c.data_seed = get_or(params, "data_seed", c.data_seed);
    c.side = get_or(params, "side", c.side);
    c.crop.pattern = unlearn::parse_crop_pattern(get_or<std::string>(params, "crop", "center"));
    c.crop.ratio = get_or(params, "crop_ratio", c.crop.ratio);
    c.crop.mask_seed = get_or(params, "mask_seed", c.crop.mask_seed);
    c.batch = get_or(params, "batch", c.batch);
    c.noise_mode = unlearn::parse_noise_mode(get_or<std::string>(params, "noise_mode", "through-original"));
    c.proxy_retain_fraction = get_or(params, "proxy_retain_fraction", c.proxy_retain_fraction);
    c.threads = get_or(params, "threads", threads_from_env());
    c.pretrain.epochs = get_or(params, "pretrain_epochs", c.pretrain.epochs);
    c.pretrain.learning_rate = get_or(params, "pretrain_lr", c.pretrain.learning_rate);
    c.pretrain.seed = get_or(params, "model_seed", c.pretrain.seed);
    c.pretrain.threads = c.threads;
    const int d = c.side * c.side;
    c.pretrain.widths = get_or(params, "widths", std::vector<int>{d, 64, 16, 64, d});
    if (params.contains("checkpoint") && !params.at("checkpoint").is_null()) {
        c.checkpoint = get_or<std::string>(params, "checkpoint", "");
    }
    c.eval_seed = get_or(params, "eval_seed", c.eval_seed);
    c.validate();
    return c;
}

int threads_from_env() {
    const char* v = std::getenv("CUL_THREADS");
    if (!v || !*v) {
        return 1;
    }
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) {
        throw InvalidArgument(std::string("CUL_THREADS must be a positive integer, got '") + v + "'");
    }
    return static_cast<int>(n);
}

ToyTask build_toy_task(const ToyTaskConfig& config) {
    config.validate();
    if (config.checkpoint) {
        return build_toy_task(config, load_checkpoint(*config.checkpoint));
    }
    const auto ds = unlearn::build_dataset(config.classes, config.per_class, config.data_seed, config.side);
    std::vector<unlearn::ToyImage> all = ds.forget;
    all.insert(all.end(), ds.retain.begin(), ds.retain.end());
    const auto pre = unlearn::pretrain(all, config.crop, config.pretrain);
    ToyTask task = build_toy_task(config, pre.model);
    task.pretrain_loss = pre.final_loss;
    return task;
}

ToyTask build_toy_task(const ToyTaskConfig& config, const unlearn::ToyModel& original) {
    config.validate();
    ToyTask task;
    task.dataset = unlearn::build_dataset(config.classes, config.per_class, config.data_seed, config.side);
    unlearn::UnlearnTask t;
    t.original = original;
    t.forget = task.dataset.forget;
    t.retain = task.dataset.retain;
    if (config.proxy_retain_fraction > 0.0) {
        t.retain = unlearn::proxy_retain(t.retain, config.proxy_retain_fraction, 2, config.classes,
                                         derive_seed(config.data_seed, 0x9801));
    }
    t.crop = config.crop;
    t.batch = config.batch;
    t.noise_mode = config.noise_mode;
    t.threads = config.threads;
    t.eval_seed = config.eval_seed;
    task.context = std::make_shared<const unlearn::TaskContext>(std::move(t));
    return task;
}

ProblemRegistry builtin_problems() {
    ProblemRegistry r;
    r.add("quad", make_quad);
    r.add("unlearn-toy", make_toy);
    return r;
}

}  // namespace cul

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <set>

#include "cul/errors.hpp"
#include "cul/objective.hpp"
#include "cul/problems.hpp"
#include "cul/unlearn/baselines.hpp"
#include "cul/unlearn/crop.hpp"
#include "cul/unlearn/dataset.hpp"
#include "cul/unlearn/model.hpp"
#include "cul/unlearn/task.hpp"

using namespace cul::unlearn;
using cul::EvalKey;
using cul::ParamVector;

namespace {

const std::vector<int> kSmallWidths{16, 8, 4, 8, 16};

UnlearnTask small_task(NoiseMode mode, std::uint64_t seed = 3) {
    const auto ds = build_dataset(2, 4, seed, 4);
    UnlearnTask t;
    t.original = ToyModel::initialized(kSmallWidths, seed);
    t.forget = ds.forget;
    t.retain = ds.retain;
    t.crop = CropSpec{CropPattern::Center, 0.25, 0};
    t.batch = 4;
    t.noise_mode = mode;
    return t;
}

ToyImage image_of(int h, int w, double start = 1.0) {
    ToyImage im;
    im.height = h;
    im.width = w;
    im.pixels.resize(h * w);
    for (int i = 0; i < h * w; ++i) im.pixels[i] = start + i;
    return im;
}

// One pretrained 8-class task shared by the tests that need it.
const cul::ToyTask& shared_toy_task() {
    static const cul::ToyTask task = [] {
        cul::ToyTaskConfig cfg;
        cfg.threads = cul::threads_from_env();
        return cul::build_toy_task(cfg);
    }();
    return task;
}

}  // namespace

TEST(Dataset, SmallExample) {
    const auto ds = build_dataset(2, 4, 11);
    ASSERT_EQ(ds.forget.size(), 4u);
    ASSERT_EQ(ds.retain.size(), 4u);
    for (const auto* split : {&ds.forget, &ds.retain}) {
        for (const auto& im : *split) {
            EXPECT_EQ(im.pixels.size(), 256);
            EXPECT_LT(std::abs(im.pixels.mean()), 1e-9);
            EXPECT_TRUE(im.pixels.allFinite());
            EXPECT_LE(im.pixels.cwiseAbs().maxCoeff(), 1.0);
        }
    }
    for (const auto& im : ds.forget) EXPECT_EQ(im.split, Split::Forget);
    for (const auto& im : ds.retain) EXPECT_EQ(im.split, Split::Retain);
}

TEST(Dataset, Deterministic) {
    const auto a = build_dataset(4, 3, 5), b = build_dataset(4, 3, 5), c = build_dataset(4, 3, 6);
    for (std::size_t i = 0; i < a.forget.size(); ++i) EXPECT_EQ(a.forget[i].pixels, b.forget[i].pixels);
    for (std::size_t i = 0; i < a.retain.size(); ++i) EXPECT_EQ(a.retain[i].pixels, b.retain[i].pixels);
    EXPECT_NE(a.forget[0].pixels, c.forget[0].pixels);
}

TEST(Dataset, DisjointClasses) {
    const auto ds = build_dataset(8, 4, 1);
    std::set<int> f, r;
    for (const auto& im : ds.forget) f.insert(im.class_id);
    for (const auto& im : ds.retain) r.insert(im.class_id);
    EXPECT_EQ(f.size(), 4u);
    EXPECT_EQ(r.size(), 4u);
    for (int c : f) EXPECT_EQ(r.count(c), 0u);
}

TEST(Dataset, NearestTemplateAccuracy) {
    const auto ds = build_dataset(8, 32, 1);
    std::vector<ToyImage> all = ds.forget;
    all.insert(all.end(), ds.retain.begin(), ds.retain.end());
    const auto pred = nearest_template(all, ds.templates);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < all.size(); ++i) correct += pred[i] == all[i].class_id;
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(all.size()), 0.95);
}

TEST(Dataset, Errors) {
    EXPECT_THROW((void)build_dataset(3, 4, 0), cul::InvalidArgument);
    EXPECT_THROW((void)build_dataset(0, 4, 0), cul::InvalidArgument);
    EXPECT_THROW((void)build_dataset(2, 1, 0), cul::InvalidArgument);
}

TEST(Dataset, ProxyRetainSmoke) {
    const auto ds = build_dataset(4, 4, 2);
    const auto proxy = proxy_retain(ds.retain, 0.5, 2, 100, 9);
    ASSERT_EQ(proxy.size(), ds.retain.size());
    std::size_t fresh = 0;
    for (const auto& im : proxy) {
        EXPECT_EQ(im.split, Split::Retain);
        if (im.class_id >= 100) ++fresh;
    }
    EXPECT_EQ(fresh, ds.retain.size() / 2);
}

TEST(Crop, CenterOnFourByFour) {
    const auto im = image_of(4, 4);
    const auto out = crop(im, {CropPattern::Center, 0.25, 0});
    int zeroed = 0, unchanged = 0;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const int i = r * 4 + c;
            const bool central = r >= 1 && r <= 2 && c >= 1 && c <= 2;
            if (central) {
                EXPECT_EQ(out.pixels[i], 0.0) << r << "," << c;
                ++zeroed;
            } else if (out.pixels[i] == im.pixels[i]) {
                ++unchanged;
            }
        }
    }
    EXPECT_EQ(zeroed, 4);
    EXPECT_EQ(unchanged, 12);
}

TEST(Crop, CenterHalfOnSixteen) {
    const ParamVector mask = crop_mask({CropPattern::Center, 0.5, 0}, 16, 16);
    int zero = 0;
    for (int i = 0; i < 256; ++i) zero += mask[i] == 0.0;
    EXPECT_EQ(zero, 128);
    // The centered 8x8 square (64 pixels) is fully inside the removed region.
    for (int r = 4; r < 12; ++r)
        for (int c = 4; c < 12; ++c) EXPECT_EQ(mask[r * 16 + c], 0.0);
}

TEST(Crop, TinyRatioBarelyChangesImage) {
    const auto im = image_of(16, 16);
    for (auto p : {CropPattern::Center, CropPattern::Top, CropPattern::Bottom, CropPattern::Left,
                   CropPattern::Right, CropPattern::RandomMask}) {
        const auto out = crop(im, {p, 1.0 / 1024.0, 7});
        int changed = 0;
        for (int i = 0; i < 256; ++i) changed += out.pixels[i] != im.pixels[i];
        EXPECT_LE(changed, 1) << to_string(p);
    }
}

TEST(Crop, DirectionalPatterns) {
    const auto top = crop_mask({CropPattern::Top, 0.5, 0}, 4, 4);
    const auto left = crop_mask({CropPattern::Left, 0.25, 0}, 4, 4);
    const auto right = crop_mask({CropPattern::Right, 0.25, 0}, 4, 4);
    const auto bottom = crop_mask({CropPattern::Bottom, 0.5, 0}, 4, 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            EXPECT_EQ(top[r * 4 + c], r < 2 ? 0.0 : 1.0);
            EXPECT_EQ(bottom[r * 4 + c], r >= 2 ? 0.0 : 1.0);
            EXPECT_EQ(left[r * 4 + c], c == 0 ? 0.0 : 1.0);
            EXPECT_EQ(right[r * 4 + c], c == 3 ? 0.0 : 1.0);
        }
    }
}

TEST(Crop, KeepCenterIsComplementOfCenter) {
    const auto keep = crop_mask({CropPattern::KeepCenter, 0.25, 0}, 16, 16);
    const auto remove = crop_mask({CropPattern::Center, 0.25, 0}, 16, 16);
    EXPECT_EQ(keep + remove, ParamVector::Ones(256));
}

TEST(Crop, RandomMaskSeeded) {
    const auto a = crop_mask({CropPattern::RandomMask, 0.3, 1}, 16, 16);
    const auto b = crop_mask({CropPattern::RandomMask, 0.3, 1}, 16, 16);
    const auto c = crop_mask({CropPattern::RandomMask, 0.3, 2}, 16, 16);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_EQ(256 - static_cast<int>(a.sum()), static_cast<int>(std::llround(0.3 * 256)));
}

TEST(Crop, InvalidSpec) {
    EXPECT_THROW(CropSpec({CropPattern::Center, 0.0, 0}).validate(), cul::InvalidArgument);
    EXPECT_THROW(CropSpec({CropPattern::Center, 1.0, 0}).validate(), cul::InvalidArgument);
    EXPECT_THROW((void)parse_crop_pattern("diagonal"), cul::InvalidArgument);
    for (auto p : {CropPattern::Center, CropPattern::Top, CropPattern::Bottom, CropPattern::Left,
                   CropPattern::Right, CropPattern::RandomMask, CropPattern::KeepCenter}) {
        EXPECT_EQ(parse_crop_pattern(to_string(p)), p);
    }
}

TEST(Model, ZeroWeightsGiveBiasOutput) {
    ToyModel m(kSmallWidths);
    ParamVector p = m.params();
    // Last layer bias occupies the final 16 entries.
    for (int i = 0; i < 16; ++i) p[p.size() - 16 + i] = 0.1 * i;
    m.set_params(p);
    const auto out = m.forward(image_of(4, 4));
    for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(out.pixels[i], 0.1 * i);
}

TEST(Model, DeterministicAndShapeChecked) {
    const auto m = ToyModel::initialized(kSmallWidths, 4);
    const auto im = image_of(4, 4, -0.5);
    EXPECT_EQ(m.forward(im).pixels, m.forward(im).pixels);
    EXPECT_THROW((void)m.forward(image_of(5, 5)), cul::InvalidArgument);
    ToyModel copy = m;
    EXPECT_THROW(copy.set_params(ParamVector::Zero(3)), cul::InvalidArgument);
}

TEST(Model, ParamRoundTripIsBitwise) {
    const auto m = ToyModel::initialized(kSmallWidths, 12);
    ToyModel other(kSmallWidths);
    other.set_params(m.params());
    EXPECT_EQ(std::memcmp(other.params().data(), m.params().data(), m.param_count() * sizeof(double)), 0);
    EXPECT_EQ(m.param_count(), 16u * 8 + 8 + 8 * 4 + 4 + 4 * 8 + 8 + 8 * 16 + 16);
    EXPECT_EQ(m.latent_dim(), 4);
}

TEST(Model, ThreadedLossMatchesSerial) {
    const auto m = ToyModel::initialized(kSmallWidths, 1);
    const auto ds = build_dataset(4, 8, 1, 4);
    const Batch x = to_batch(ds.forget);
    ParamVector g1, g4;
    const double l1 = squared_error(m, x, x, &g1, 1);
    const double l4 = squared_error(m, x, x, &g4, 4);
    EXPECT_NEAR(l1, l4, 1e-12 * std::abs(l1));
    EXPECT_LT((g1 - g4).norm(), 1e-12 * g1.norm());
}

TEST(Pretrain, MemorizesSingleImage) {
    const auto ds = build_dataset(2, 2, 5);
    const std::vector<ToyImage> one{ds.forget.front()};
    PretrainConfig cfg;
    cfg.epochs = 300;
    const CropSpec spec{CropPattern::Center, 0.5, 0};
    const auto r = pretrain(one, spec, cfg);
    EXPECT_LT(relative_error(r.model, one, spec), 0.05);
}

TEST(Pretrain, ZeroEpochsReturnsInitialization) {
    const auto ds = build_dataset(2, 2, 5);
    PretrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 3;
    const auto r = pretrain(ds.forget, {}, cfg);
    EXPECT_EQ(r.model.params(), ToyModel::initialized(cfg.widths, 3).params());
}

TEST(Pretrain, EightClassesBelowTwentyPercent) {
    const auto& t = shared_toy_task();
    const auto& task = t.context->task();
    EXPECT_LT(relative_error(task.original, task.forget, task.crop), 0.2);
    EXPECT_LT(relative_error(task.original, task.retain, task.crop), 0.2);
    // Retain sanity: the original output stays close to the ground truth.
    const auto out = task.original.forward(crop(task.retain.front(), task.crop));
    EXPECT_LT((out.pixels - task.retain.front().pixels).norm() / task.retain.front().pixels.norm(), 0.2);
}

TEST(Objectives, ZeroRetainTermAtOriginal) {
    for (auto mode : {NoiseMode::ThroughOriginal, NoiseMode::DirectNoise}) {
        const TaskContext ctx(small_task(mode));
        const auto e = unlearn_objectives(ctx, ctx.task().original, {5, 17});
        EXPECT_EQ(e.f2, 0.0) << to_string(mode);
        EXPECT_EQ(e.grad_f2.norm(), 0.0);
        EXPECT_GT(e.f1, 0.0);
        EXPECT_EQ(ctx.full_objectives(ctx.task().original.params()).f2, 0.0);
    }
}

TEST(Objectives, GradientsMatchFiniteDifferences) {
    for (auto mode : {NoiseMode::ThroughOriginal, NoiseMode::DirectNoise}) {
        auto ctx = std::make_shared<const TaskContext>(small_task(mode));
        const auto problem = make_unlearn_problem(ctx);
        cul::Rng rng(6);
        ParamVector theta = ctx->task().original.params();
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
        const EvalKey key{9, 2};
        const auto e = problem.evaluate(theta, key);
        const auto fd = cul::finite_difference_grad(problem, theta, 1e-5, key);
        EXPECT_LT((fd.grad_f1 - e.grad_f1).norm() / e.grad_f1.norm(), 1e-4) << to_string(mode);
        EXPECT_LT((fd.grad_f2 - e.grad_f2).norm() / e.grad_f2.norm(), 1e-4) << to_string(mode);
    }
}

TEST(Objectives, SameKeySameValue) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    const ParamVector theta = ctx.task().original.params() * 1.1;
    const auto a = ctx.objectives(theta, {1, 4});
    const auto b = ctx.objectives(theta, {1, 4});
    const auto c = ctx.objectives(theta, {1, 5});
    EXPECT_EQ(a.f1, b.f1);
    EXPECT_EQ(a.grad_f1, b.grad_f1);
    EXPECT_NE(a.f1, c.f1);
}

TEST(Task, Validation) {
    auto t = small_task(NoiseMode::ThroughOriginal);
    t.batch = 5;
    EXPECT_THROW(TaskContext{t}, cul::InvalidArgument);
    t = small_task(NoiseMode::ThroughOriginal);
    t.retain = t.forget;
    EXPECT_THROW(TaskContext{t}, cul::InvalidArgument);
    t = small_task(NoiseMode::ThroughOriginal);
    t.forget.clear();
    EXPECT_THROW(TaskContext{t}, cul::InvalidArgument);
    EXPECT_THROW((void)parse_noise_mode("pink"), cul::InvalidArgument);
}

TEST(Evaluate, Examples) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    EXPECT_EQ(evaluate(ctx.task().original, ctx).retain_degradation, 0.0);
    const ToyModel zero(kSmallWidths);
    double mean_norm = 0.0;
    for (const auto& im : ctx.task().forget) mean_norm += im.pixels.norm();
    mean_norm /= static_cast<double>(ctx.task().forget.size());
    EXPECT_NEAR(evaluate(zero, ctx).forget_err, mean_norm, 1e-12);
}

TEST(Baselines, MaxLossIncreasesForgetLoss) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    const auto& orig = ctx.task().original;
    const EvalKey key{1, 0};
    const double before = baseline_loss(BaselineKind::MaxLoss, ctx, orig.params(), key, 1.0, 0.5, nullptr);
    const auto next = baseline_step(BaselineKind::MaxLoss, ctx, orig, 1e-3, 1.0, 0.5, key);
    const double after = baseline_loss(BaselineKind::MaxLoss, ctx, next.params(), key, 1.0, 0.5, nullptr);
    EXPECT_GT(after, before);
}

TEST(Baselines, CompositeWithLargeLambdaKeepsRetainLoss) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    const auto& orig = ctx.task().original;
    const EvalKey key{1, 0};
    const double before = squared_error(orig, ctx.retain_inputs(), ctx.retain_clean(), nullptr);
    const auto next = baseline_step(BaselineKind::CompositeLoss, ctx, orig, 1e-6, 1e3, 0.5, key);
    const double after = squared_error(next, ctx.retain_inputs(), ctx.retain_clean(), nullptr);
    EXPECT_LE(after, before);
}

TEST(Baselines, DescentKindsReduceTheirLoss) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    const auto& orig = ctx.task().original;
    const EvalKey key{1, 0};
    for (auto kind : {BaselineKind::RetainLabel, BaselineKind::NoisyLabel, BaselineKind::CompositeLoss}) {
        const double before = baseline_loss(kind, ctx, orig.params(), key, 1.0, 0.5, nullptr);
        const auto next = baseline_step(kind, ctx, orig, 1e-3, 1.0, 0.5, key);
        EXPECT_LT(baseline_loss(kind, ctx, next.params(), key, 1.0, 0.5, nullptr), before) << to_string(kind);
    }
}

TEST(Baselines, ZeroStepLeavesModel) {
    const TaskContext ctx(small_task(NoiseMode::ThroughOriginal));
    for (auto kind : {BaselineKind::MaxLoss, BaselineKind::RetainLabel, BaselineKind::NoisyLabel,
                      BaselineKind::CompositeLoss}) {
        EXPECT_EQ(baseline_step(kind, ctx, ctx.task().original, 0.0, 1.0, 0.5, {}).params(),
                  ctx.task().original.params());
        EXPECT_EQ(parse_baseline(to_string(kind)), kind);
    }
    EXPECT_THROW((void)parse_baseline("gradient-surgery"), cul::InvalidArgument);
}

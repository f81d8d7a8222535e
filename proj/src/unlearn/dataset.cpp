#include "cul/unlearn/dataset.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cul/errors.hpp"

namespace cul::unlearn {

namespace {

enum class Texture { Stripes, Checkers, Blob };

// Generator parameters shared by the two classes of a polarity pair.
struct ClassParams {
    Texture texture = Texture::Stripes;
    double sign = 1.0;
    double kx = 0.0, ky = 0.0;  // stripes
    double k1 = 0.0, k2 = 0.0;  // checkers
    double phase0 = 0.0, phase1 = 0.0;
    double cx = 0.0, cy = 0.0, radius = 0.0;  // blob
};

ClassParams class_params(Texture texture, int pair, int pairs_in_split, double sign, std::uint64_t seed) {
    Rng rng(seed);
    ClassParams p;
    p.texture = texture;
    p.sign = sign;
    const double spread = std::numbers::pi / std::max(1, pairs_in_split);
    const double angle = (pair + rng.uniform()) * spread;
    const double freq = rng.uniform(0.6, 1.3);
    p.kx = freq * std::cos(angle);
    p.ky = freq * std::sin(angle);
    p.k1 = rng.uniform(0.4, 1.1);
    p.k2 = rng.uniform(0.4, 1.1);
    p.phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.cx = rng.uniform(0.3125, 0.6875);  // as a fraction of the side
    p.cy = rng.uniform(0.3125, 0.6875);
    p.radius = rng.uniform(2.0, 3.5);
    return p;
}

ParamVector render(const ClassParams& p, int side, double phase, double amp, double dx, double dy) {
    ParamVector img(side * side);
    const double cx = p.cx * side + dx;
    const double cy = p.cy * side + dy;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            double v = 0.0;
            switch (p.texture) {
                case Texture::Stripes:
                    v = amp * std::cos(p.kx * x + p.ky * y + p.phase0 + phase);
                    break;
                case Texture::Checkers:
                    v = amp * std::cos(p.k1 * x + p.phase0 + phase) * std::cos(p.k2 * y + p.phase1 + phase);
                    break;
                case Texture::Blob: {
                    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    v = 2.0 * amp * std::exp(-r2 / (2.0 * p.radius * p.radius));
                    break;
                }
            }
            img[y * side + x] = p.sign * v;
        }
    }
    return img;
}

void center(ParamVector& v) { v.array() -= v.mean(); }

// Per-image variation: phase jitter, amplitude, blob offset, pixel noise.
ParamVector sample_image(const ClassParams& p, int side, Rng& rng) {
    const double phase = rng.uniform(-0.6, 0.6);
    const double amp = rng.uniform(0.3, 0.5);
    const double dx = rng.uniform(-1.5, 1.5);
    const double dy = rng.uniform(-1.5, 1.5);
    ParamVector img = render(p, side, phase, amp, dx, dy);
    for (Eigen::Index i = 0; i < img.size(); ++i) {
        img[i] += 0.01 * rng.normal();
    }
    center(img);
    return img;
}

ClassParams params_for(int c, int n_classes, std::uint64_t seed) {
    const int half = n_classes / 2;
    const bool forget = c < half;
    const int first = forget ? 0 : half;
    const int pair = (c - first) / 2;
    const double sign = ((c - first) % 2 == 1) ? -1.0 : 1.0;
    const int pairs = std::max(1, half / 2);
    const Texture texture = forget ? Texture::Stripes : (pair % 2 == 0 ? Texture::Checkers : Texture::Blob);
    return class_params(texture, pair, pairs, sign, derive_seed(seed, 0xC1A5, static_cast<std::uint64_t>(first + 2 * pair)));
}

}  // namespace

ToyDataset build_dataset(int n_classes, int per_class, std::uint64_t seed, int side) {
    if (n_classes <= 0 || n_classes % 2 != 0) {
        throw InvalidArgument("build_dataset: n_classes must be a positive even number, got " +
                              std::to_string(n_classes));
    }
    if (per_class < 2) {
        throw InvalidArgument("build_dataset: per_class must be >= 2, got " + std::to_string(per_class));
    }
    if (side < 2) {
        throw InvalidArgument("build_dataset: image side must be >= 2");
    }
    ToyDataset ds;
    Rng rng(derive_seed(seed, 0xDA7A));
    for (int c = 0; c < n_classes; ++c) {
        const ClassParams p = params_for(c, n_classes, seed);
        ParamVector tmpl = render(p, side, 0.0, 0.4, 0.0, 0.0);
        center(tmpl);
        ds.templates.push_back(std::move(tmpl));
        const Split split = c < n_classes / 2 ? Split::Forget : Split::Retain;
        auto& out = split == Split::Forget ? ds.forget : ds.retain;
        for (int i = 0; i < per_class; ++i) {
            out.push_back(ToyImage{sample_image(p, side, rng), side, side, c, split});
        }
    }
    return ds;
}

std::vector<ToyImage> proxy_retain(const std::vector<ToyImage>& retain, double fraction, int n_classes,
                                   int first_class_id, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("proxy_retain: fraction must lie in [0, 1]");
    }
    if (n_classes < 1) {
        throw InvalidArgument("proxy_retain: need at least one held-out class");
    }
    std::vector<ToyImage> out = retain;
    const auto replace = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(retain.size())));
    if (replace == 0) {
        return out;
    }
    const int side = retain.front().height;
    Rng rng(derive_seed(seed, 0x9802));
    std::vector<ClassParams> params;
    for (int k = 0; k < n_classes; ++k) {
        const Texture texture = k % 2 == 0 ? Texture::Checkers : Texture::Blob;
        params.push_back(class_params(texture, k, n_classes, 1.0, derive_seed(seed, 0x9803, static_cast<std::uint64_t>(k))));
    }
    for (std::size_t i = 0; i < replace; ++i) {
        const int k = static_cast<int>(i % static_cast<std::size_t>(n_classes));
        out[i] = ToyImage{sample_image(params[k], side, rng), side, side, first_class_id + k, Split::Retain};
    }
    return out;
}

std::vector<int> nearest_template(const std::vector<ToyImage>& images, const std::vector<ParamVector>& templates) {
    std::vector<int> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < templates.size(); ++k) {
            if (templates[k].size() != img.pixels.size()) {
                throw InvalidArgument("nearest_template: template size differs from image size");
            }
            const double d = (img.pixels - templates[k]).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        out.push_back(best);
    }
    return out;
}

}  // namespace cul::unlearn

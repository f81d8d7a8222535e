#include "cul/unlearn/crop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "cul/errors.hpp"

namespace cul::unlearn {

void CropSpec::validate() const {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw InvalidArgument("crop ratio must lie in (0, 1), got " + std::to_string(ratio));
    }
}

CropPattern parse_crop_pattern(const std::string& name) {
    if (name == "center") return CropPattern::Center;
    if (name == "top") return CropPattern::Top;
    if (name == "bottom") return CropPattern::Bottom;
    if (name == "left") return CropPattern::Left;
    if (name == "right") return CropPattern::Right;
    if (name == "random") return CropPattern::RandomMask;
    if (name == "keep-center") return CropPattern::KeepCenter;
    throw InvalidArgument("unknown crop pattern '" + name +
                          "' (expected center, top, bottom, left, right, random or keep-center)");
}

std::string to_string(CropPattern p) {
    switch (p) {
        case CropPattern::Center: return "center";
        case CropPattern::Top: return "top";
        case CropPattern::Bottom: return "bottom";
        case CropPattern::Left: return "left";
        case CropPattern::Right: return "right";
        case CropPattern::RandomMask: return "random";
        case CropPattern::KeepCenter: return "keep-center";
    }
    return "center";
}

namespace {

// Pixel indices ordered from the image center outwards.
std::vector<std::size_t> center_order(int height, int width) {
    const double cy = (height - 1) / 2.0;
    const double cx = (width - 1) / 2.0;
    std::vector<std::size_t> order(static_cast<std::size_t>(height * width));
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t i) {
        const double dy = std::abs(static_cast<double>(i / width) - cy);
        const double dx = std::abs(static_cast<double>(i % width) - cx);
        return std::make_tuple(std::max(dx, dy), dx * dx + dy * dy, i);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    return order;
}

}  // namespace

ParamVector crop_mask(const CropSpec& spec, int height, int width) {
    spec.validate();
    if (height < 1 || width < 1) {
        throw InvalidArgument("crop_mask: image dimensions must be positive");
    }
    const std::size_t total = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    const auto n = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(total)));
    ParamVector mask = ParamVector::Ones(static_cast<Eigen::Index>(total));

    auto column_major = [&](std::size_t k) { return (k % height) * width + k / height; };
    switch (spec.pattern) {
        case CropPattern::Center: {
            const auto order = center_order(height, width);
            for (std::size_t k = 0; k < n; ++k) mask[order[k]] = 0.0;
            break;
        }
        case CropPattern::KeepCenter: {
            mask.setZero();
            const auto order = center_order(height, width);
            for (std::size_t k = 0; k < n; ++k) mask[order[k]] = 1.0;
            break;
        }
        case CropPattern::Top:
            for (std::size_t k = 0; k < n; ++k) mask[k] = 0.0;
            break;
        case CropPattern::Bottom:
            for (std::size_t k = 0; k < n; ++k) mask[total - 1 - k] = 0.0;
            break;
        case CropPattern::Left:
            for (std::size_t k = 0; k < n; ++k) mask[column_major(k)] = 0.0;
            break;
        case CropPattern::Right:
            for (std::size_t k = 0; k < n; ++k) mask[column_major(total - 1 - k)] = 0.0;
            break;
        case CropPattern::RandomMask: {
            Rng rng(derive_seed(spec.mask_seed, 0x3A5C));
            const auto perm = rng.permutation(total);
            for (std::size_t k = 0; k < n; ++k) mask[perm[k]] = 0.0;
            break;
        }
    }
    return mask;
}

ToyImage crop(const ToyImage& image, const CropSpec& spec) {
    if (image.pixels.size() != static_cast<Eigen::Index>(image.height) * image.width) {
        throw InvalidArgument("crop: pixel count does not match image dimensions");
    }
    ToyImage out = image;
    out.pixels = image.pixels.cwiseProduct(crop_mask(spec, image.height, image.width));
    return out;
}

}  // namespace cul::unlearn

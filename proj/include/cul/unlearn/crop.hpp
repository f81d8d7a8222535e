// The crop operator T: zero-masking of an image region.

#pragma once

#include <cstdint>
#include <string>

#include "cul/numerics.hpp"
#include "cul/unlearn/dataset.hpp"

namespace cul::unlearn {

enum class CropPattern { Center, Top, Bottom, Left, Right, RandomMask, KeepCenter };

struct CropSpec {
    CropPattern pattern = CropPattern::Center;
    /// Fraction of the area removed; for KeepCenter, the fraction kept.
    double ratio = 0.5;
    /// Only used by RandomMask.
    std::uint64_t mask_seed = 0;

    void validate() const;
};

[[nodiscard]] CropPattern parse_crop_pattern(const std::string& name);
[[nodiscard]] std::string to_string(CropPattern p);

/// Keep-mask of an h x w image in row-major order: 1 keeps a pixel, 0 removes
/// it. Exactly llround(ratio * h * w) pixels are affected. Center and
/// KeepCenter rank pixels by Chebyshev then Euclidean distance to the image
/// center, ties broken in raster order.
[[nodiscard]] ParamVector crop_mask(const CropSpec& spec, int height, int width);

[[nodiscard]] ToyImage crop(const ToyImage& image, const CropSpec& spec);

}  // namespace cul::unlearn

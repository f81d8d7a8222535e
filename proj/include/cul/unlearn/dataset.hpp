// Synthetic image classes for the toy unlearning task.

#pragma once

#include <cstdint>
#include <vector>

#include "cul/numerics.hpp"

namespace cul::unlearn {

enum class Split { Forget, Retain };

/// Square grayscale image stored row-major in `pixels`.
struct ToyImage {
    ParamVector pixels;
    int height = 16;
    int width = 16;
    int class_id = 0;
    Split split = Split::Forget;
};

struct ToyDataset {
    std::vector<ToyImage> forget;
    std::vector<ToyImage> retain;
    /// Noise-free, zero-phase template of every class, indexed by class id.
    std::vector<ParamVector> templates;
};

/// Classes 0..n/2-1 form the forget split (oriented stripes), the rest the
/// retain split (alternating checkers and blobs). Consecutive classes share
/// generator parameters with opposite polarity, so each split has pixel
/// mean near zero. Every image is mean-subtracted.
[[nodiscard]] ToyDataset build_dataset(int n_classes, int per_class, std::uint64_t seed, int side = 16);

/// Replace the leading `fraction` of the retain images with images of
/// `n_classes` fresh retain-style classes that the original model never saw.
/// Returned images keep the Retain split and get class ids starting at
/// `first_class_id`.
[[nodiscard]] std::vector<ToyImage> proxy_retain(const std::vector<ToyImage>& retain, double fraction,
                                                 int n_classes, int first_class_id, std::uint64_t seed);

/// Index of the nearest template (Euclidean) for each image.
[[nodiscard]] std::vector<int> nearest_template(const std::vector<ToyImage>& images,
                                                const std::vector<ParamVector>& templates);

}  // namespace cul::unlearn

#pragma once

#include "pvd/geometry.hpp"
#include "pvd/image.hpp"

#include <string>
#include <vector>

namespace pvd {

/// Tunable proposal-generation parameters.
struct ProposerParams {
    double kappa = 0.4;        ///< dynamic-threshold sensitivity
    int window = 19;           ///< side of the square mean window (odd in practice)
    double mad_threshold = 0.01;
    int gap = 4;               ///< max Chebyshev gap merged into one blob
    int blur_kernel = 5;
    double blur_sigma = 1.0;
    double downscale = 0.5;

    // Tuning bounds.
    static constexpr double kKappaMin = 0.25, kKappaMax = 0.75;
    static constexpr int kWindowMin = 5, kWindowMax = 25;
    static constexpr double kMadMin = 0.0, kMadMax = 0.1;
    static constexpr int kGapMin = 1, kGapMax = 9;

    /// Throws InputError when a field leaves the tuning bounds or is degenerate.
    void validate() const;

    bool operator==(const ProposerParams&) const = default;
};

/// "key = value" file holding kappa, window, mad_threshold, gap and optional
/// blur_kernel, blur_sigma, downscale. Missing keys keep their defaults.
ProposerParams read_proposer_params(const std::string& path);
void write_proposer_params(const std::string& path, const ProposerParams& params);

GrayImage downscale_bilinear(const GrayImage& img, double factor);

/// Normalized separable Gaussian, replicated borders.
GrayImage gaussian_blur(const GrayImage& img, int kernel, double sigma);

/// Downscale then blur. Throws InputError if the downscaled image is smaller
/// than the blur kernel.
GrayImage preprocess(const GrayImage& img, const ProposerParams& params);

/// Mean over a w x w window centered on each pixel; out-of-image samples
/// replicate the nearest edge pixel, so every window holds exactly w*w samples.
GrayImage local_mean(const GrayImage& img, int window);

/// Per-pixel threshold mu * (1 + kappa * (1 - delta / (1 - delta))), delta = I - mu.
GrayImage dynamic_threshold(const GrayImage& img, double kappa, int window);

/// 1 where I > T strictly.
Mask binarize(const GrayImage& img, const GrayImage& threshold);

/// Component index per pixel (-1 for unset pixels) under the same
/// connectivity as blobs_to_boxes; indices follow the box order.
struct BlobLabels {
    int count = 0;
    std::vector<int> labels;
};
BlobLabels label_blobs(const Mask& mask, int gap);

/// Tight boxes around components of set pixels, two pixels being connected when
/// their Chebyshev distance is at most `gap`. Boxes are ordered by the raster
/// position of each component's first pixel.
std::vector<BBox> blobs_to_boxes(const Mask& mask, int gap);

/// Mean absolute deviation of the intensities inside the (integer) box.
double box_mad(const GrayImage& img, const BBox& box);

/// Keeps boxes whose MAD is at least `threshold`.
std::vector<BBox> filter_boxes(const GrayImage& img, const std::vector<BBox>& boxes, double threshold);

/// Maps a box from the downscaled frame back to full resolution, rounding
/// outward and clipping to the full frame.
BBox upscale_box(const BBox& box, double downscale, int full_width, int full_height);

/// Full proposal chain; boxes are returned in full-resolution coordinates.
std::vector<BBox> propose(const GrayImage& frame, const ProposerParams& params);

}  // namespace pvd

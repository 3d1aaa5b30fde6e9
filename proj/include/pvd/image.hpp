#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvd {

/// Raised for malformed user input (bad files, out-of-range parameters).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single-channel raster, row-major, intensities normalized to [0,1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    double operator()(int x, int y) const { return data_[index(x, y)]; }
    double& operator()(int x, int y) { return data_[index(x, y)]; }

    /// Edge-replicating accessor.
    double clamped(int x, int y) const;

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    /// Clamps every value into [0,1].
    void saturate();

    bool operator==(const GrayImage&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Per-pixel range image in meters; 0 marks "no measurement".
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> meters;

    double at(int x, int y) const { return meters[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return meters[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary mask produced by thresholding; 1 = above threshold.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> bits;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
};

/// Summed-area table with a one-pixel zero border: entry (x, y) holds the sum of
/// all pixels strictly left of x and strictly above y.
class IntegralImage {
public:
    explicit IntegralImage(const GrayImage& img);

    /// Sum over the inclusive rectangle [x0, x1] x [y0, y1]; coordinates must be in range.
    double sum(int x0, int y0, int x1, int y1) const;

    int width() const { return width_; }
    int height() const { return height_; }

private:
    double at(int x, int y) const { return table_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> table_;
};

// PGM (P5) IO. 8-bit files are divided by 255, 16-bit files by their maxval.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img, int maxval = 255);

/// Depth rasters are stored as 16-bit PGM in centimeters.
DepthImage read_depth_pgm(const std::string& path);
void write_depth_pgm(const std::string& path, const DepthImage& depth);

}  // namespace pvd

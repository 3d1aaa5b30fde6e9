#pragma once

#include "pvd/geometry.hpp"
#include "pvd/image.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pvd {

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  ///< row-major RGB

    void set(int x, int y, Rgb c);
    Rgb get(int x, int y) const;
};

RgbImage to_rgb(const GrayImage& img);
/// One-pixel outline; parts outside the image are skipped.
void draw_box(RgbImage& img, const BBox& box, Rgb color);
void draw_cross(RgbImage& img, int x, int y, int half, Rgb color);
/// Digits in a 3x5 pixel font scaled by `scale`, top-left at (x, y).
void draw_number(RgbImage& img, int x, int y, unsigned long long value, Rgb color, int scale = 2);
/// Binary PPM (P6).
void write_ppm(const std::string& path, const RgbImage& img);

}  // namespace pvd

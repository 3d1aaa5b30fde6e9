#include "pvd/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pvd {

namespace {

// 3x5 glyphs, one row per 3-bit group, most significant bit on the left.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits{{
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
}};

}  // namespace

void RgbImage::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    pixels[i] = c[0];
    pixels[i + 1] = c[1];
    pixels[i + 2] = c[2];
}

Rgb RgbImage::get(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

RgbImage to_rgb(const GrayImage& img) {
    RgbImage out{img.width(), img.height(), std::vector<std::uint8_t>(3 * img.size())};
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(img(x, y), 0.0, 1.0) * 255.0));
            out.set(x, y, {v, v, v});
        }
    return out;
}

void draw_box(RgbImage& img, const BBox& box, Rgb color) {
    const int x0 = static_cast<int>(std::floor(box.x_min)), x1 = static_cast<int>(std::ceil(box.x_max));
    const int y0 = static_cast<int>(std::floor(box.y_min)), y1 = static_cast<int>(std::ceil(box.y_max));
    for (int x = x0; x <= x1; ++x) {
        img.set(x, y0, color);
        img.set(x, y1, color);
    }
    for (int y = y0; y <= y1; ++y) {
        img.set(x0, y, color);
        img.set(x1, y, color);
    }
}

void draw_cross(RgbImage& img, int x, int y, int half, Rgb color) {
    for (int d = -half; d <= half; ++d) {
        img.set(x + d, y, color);
        img.set(x, y + d, color);
    }
}

void draw_number(RgbImage& img, int x, int y, unsigned long long value, Rgb color, int scale) {
    const std::string s = std::to_string(value);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& glyph = kDigits[s[i] - '0'];
        const int ox = x + static_cast<int>(i) * 4 * scale;
        for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 3; ++col)
                if (glyph[row] & (4 >> col))
                    for (int dy = 0; dy < scale; ++dy)
                        for (int dx = 0; dx < scale; ++dx) img.set(ox + col * scale + dx, y + row * scale + dy, color);
    }
}

void write_ppm(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace pvd

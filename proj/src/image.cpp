#include "pvd/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace pvd {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("GrayImage: negative dimensions");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0) throw std::invalid_argument("GrayImage: negative dimensions");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("GrayImage: data length does not match width*height");
}

double GrayImage::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y)];
}

void GrayImage::saturate() {
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()),
      table_(static_cast<std::size_t>(img.width() + 1) * static_cast<std::size_t>(img.height() + 1), 0.0) {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        for (int x = 0; x < width_; ++x) {
            row += img(x, y);
            table_[(y + 1) * stride + (x + 1)] = table_[y * stride + (x + 1)] + row;
        }
    }
}

double IntegralImage::sum(int x0, int y0, int x1, int y1) const {
    return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
}

namespace {

struct RawPgm {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<std::uint16_t> samples;
};

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_header_int(std::istream& in, const std::string& path, const char* what) {
    const std::string tok = next_token(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InputError(path + ": bad PGM " + what + " '" + tok + "'");
    }
}

RawPgm read_raw_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open");
    if (next_token(in) != "P5") throw InputError(path + ": not a binary PGM (P5)");
    RawPgm raw;
    raw.width = parse_header_int(in, path, "width");
    raw.height = parse_header_int(in, path, "height");
    raw.maxval = parse_header_int(in, path, "maxval");
    if (raw.maxval > 65535) throw InputError(path + ": maxval exceeds 65535");
    // next_token consumed exactly one whitespace byte after maxval.
    const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
    raw.samples.resize(n);
    if (raw.maxval < 256) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw InputError(path + ": truncated pixel data");
        std::copy(buf.begin(), buf.end(), raw.samples.begin());
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (static_cast<std::size_t>(in.gcount()) != 2 * n) throw InputError(path + ": truncated pixel data");
        for (std::size_t i = 0; i < n; ++i)
            raw.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);  // big-endian
    }
    return raw;
}

void write_raw_pgm(const std::string& path, int width, int height, int maxval,
                   const std::vector<std::uint16_t>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path + ": cannot open for writing");
    out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
    if (maxval < 256) {
        std::vector<unsigned char> buf(samples.begin(), samples.end());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    } else {
        std::vector<unsigned char> buf(2 * samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            buf[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            buf[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw InputError(path + ": write failed");
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    RawPgm raw = read_raw_pgm(path);
    std::vector<double> data(raw.samples.size());
    const double scale = 1.0 / raw.maxval;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::min(1.0, raw.samples[i] * scale);
    return GrayImage(raw.width, raw.height, std::move(data));
}

void write_pgm(const std::string& path, const GrayImage& img, int maxval) {
    if (maxval <= 0 || maxval > 65535) throw std::invalid_argument("write_pgm: maxval out of range");
    std::vector<std::uint16_t> samples(img.size());
    auto src = img.data();
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(src[i], 0.0, 1.0) * maxval));
    write_raw_pgm(path, img.width(), img.height(), maxval, samples);
}

DepthImage read_depth_pgm(const std::string& path) {
    RawPgm raw = read_raw_pgm(path);
    DepthImage depth{raw.width, raw.height, std::vector<double>(raw.samples.size())};
    for (std::size_t i = 0; i < raw.samples.size(); ++i) depth.meters[i] = raw.samples[i] / 100.0;
    return depth;
}

void write_depth_pgm(const std::string& path, const DepthImage& depth) {
    std::vector<std::uint16_t> samples(depth.meters.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double m = depth.meters[i];
        samples[i] = (std::isfinite(m) && m > 0.0)
                         ? static_cast<std::uint16_t>(std::min<long>(65535, std::lround(m * 100.0)))
                         : 0;
    }
    write_raw_pgm(path, depth.width, depth.height, 65535, samples);
}

}  // namespace pvd

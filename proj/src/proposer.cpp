#include "pvd/proposer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace pvd {

namespace {

constexpr double kMinDenominator = 1e-6;

int to_index(double v) { return static_cast<int>(std::lround(v)); }

std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw InputError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        std::istringstream k(line.substr(0, eq)), v(line.substr(eq + 1));
        std::string key, value;
        k >> key;
        v >> value;
        if (key.empty() || value.empty()) throw InputError(path + ":" + std::to_string(lineno) + ": empty key or value");
        kv[key] = value;
    }
    return kv;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("bad value '" + s + "' for " + what);
    }
}

int parse_int(const std::string& s, const std::string& what) {
    const double v = parse_double(s, what);
    if (v != std::floor(v)) throw InputError("expected an integer for " + what + ", got '" + s + "'");
    return static_cast<int>(v);
}

// Union-find over run indices.
struct DisjointSets {
    std::vector<int> parent;

    int add() {
        parent.push_back(static_cast<int>(parent.size()));
        return parent.back();
    }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Keep the smaller index as root so roots follow raster order.
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

struct Run {
    int x0;
    int x1;
    int id;
};

}  // namespace

void ProposerParams::validate() const {
    std::ostringstream err;
    if (!(kappa >= kKappaMin - 1e-12 && kappa <= kKappaMax + 1e-12)) err << "kappa " << kappa << " outside [0.25, 0.75]; ";
    if (window < kWindowMin || window > kWindowMax) err << "window " << window << " outside {5..25}; ";
    if (!(mad_threshold >= kMadMin - 1e-12 && mad_threshold <= kMadMax + 1e-12))
        err << "mad_threshold " << mad_threshold << " outside [0, 0.1]; ";
    if (gap < kGapMin || gap > kGapMax) err << "gap " << gap << " outside {1..9}; ";
    if (blur_kernel < 1 || blur_kernel % 2 == 0) err << "blur_kernel must be odd and positive; ";
    if (!(blur_sigma > 0.0)) err << "blur_sigma must be positive; ";
    if (!(downscale > 0.0 && downscale <= 1.0)) err << "downscale must lie in (0, 1]; ";
    if (const std::string msg = err.str(); !msg.empty()) throw InputError("invalid proposer params: " + msg);
}

ProposerParams read_proposer_params(const std::string& path) {
    const auto kv = read_key_values(path);
    ProposerParams p;
    for (const auto& [key, value] : kv) {
        if (key == "kappa") p.kappa = parse_double(value, key);
        else if (key == "window") p.window = parse_int(value, key);
        else if (key == "mad_threshold") p.mad_threshold = parse_double(value, key);
        else if (key == "gap") p.gap = parse_int(value, key);
        else if (key == "blur_kernel") p.blur_kernel = parse_int(value, key);
        else if (key == "blur_sigma") p.blur_sigma = parse_double(value, key);
        else if (key == "downscale") p.downscale = parse_double(value, key);
        else throw InputError(path + ": unknown key '" + key + "'");
    }
    p.validate();
    return p;
}

void write_proposer_params(const std::string& path, const ProposerParams& p) {
    std::ofstream out(path);
    if (!out) throw InputError(path + ": cannot open for writing");
    out.precision(17);
    out << "kappa = " << p.kappa << "\nwindow = " << p.window << "\nmad_threshold = " << p.mad_threshold
        << "\ngap = " << p.gap << "\nblur_kernel = " << p.blur_kernel << "\nblur_sigma = " << p.blur_sigma
        << "\ndownscale = " << p.downscale << '\n';
}

GrayImage downscale_bilinear(const GrayImage& img, double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) throw std::invalid_argument("downscale factor must lie in (0, 1]");
    if (factor == 1.0) return img;
    const int w = std::max(1, to_index(img.width() * factor));
    const int h = std::max(1, to_index(img.height() * factor));
    const double sx = static_cast<double>(img.width()) / w;
    const double sy = static_cast<double>(img.height()) / h;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(fy));
        const double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(fx));
            const double tx = fx - x0;
            const double top = (1 - tx) * img.clamped(x0, y0) + tx * img.clamped(x0 + 1, y0);
            const double bot = (1 - tx) * img.clamped(x0, y0 + 1) + tx * img.clamped(x0 + 1, y0 + 1);
            out(x, y) = (1 - ty) * top + ty * bot;
        }
    }
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, int kernel, double sigma) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("blur kernel must be odd and positive");
    if (kernel == 1) return img;
    const int r = kernel / 2;
    std::vector<double> weights(kernel);
    for (int i = 0; i < kernel; ++i) weights[i] = std::exp(-0.5 * (i - r) * (i - r) / (sigma * sigma));
    const double norm = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& wgt : weights) wgt /= norm;

    const int w = img.width(), h = img.height();
    GrayImage tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += weights[k + r] * img.clamped(x + k, y);
            tmp(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += weights[k + r] * tmp.clamped(x, y + k);
            out(x, y) = acc;
        }
    out.saturate();
    return out;
}

GrayImage preprocess(const GrayImage& img, const ProposerParams& params) {
    GrayImage small = downscale_bilinear(img, params.downscale);
    if (small.width() < params.blur_kernel || small.height() < params.blur_kernel) {
        std::ostringstream msg;
        msg << "degenerate input: " << small.width() << "x" << small.height() << " image is smaller than the "
            << params.blur_kernel << "x" << params.blur_kernel << " blur kernel";
        throw InputError(msg.str());
    }
    return gaussian_blur(small, params.blur_kernel, params.blur_sigma);
}

GrayImage local_mean(const GrayImage& img, int window) {
    if (window < 1) throw std::invalid_argument("window must be positive");
    const int lo = window / 2;
    const int w = img.width(), h = img.height();
    // Replicate-pad so every window is full, then sum via the integral image.
    GrayImage padded(w + window - 1, h + window - 1);
    for (int y = 0; y < padded.height(); ++y)
        for (int x = 0; x < padded.width(); ++x) padded(x, y) = img.clamped(x - lo, y - lo);
    const IntegralImage sat(padded);
    const double inv_area = 1.0 / (static_cast<double>(window) * window);
    GrayImage mean(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mean(x, y) = sat.sum(x, y, x + window - 1, y + window - 1) * inv_area;
    return mean;
}

GrayImage dynamic_threshold(const GrayImage& img, double kappa, int window) {
    const GrayImage mean = local_mean(img, window);
    GrayImage t(img.width(), img.height());
    auto src = img.data();
    auto mu = mean.data();
    auto dst = t.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double delta = src[i] - mu[i];
        const double denom = std::max(1.0 - delta, kMinDenominator);
        dst[i] = mu[i] * (1.0 + kappa * (1.0 - delta / denom));
    }
    return t;
}

Mask binarize(const GrayImage& img, const GrayImage& threshold) {
    if (img.width() != threshold.width() || img.height() != threshold.height())
        throw std::invalid_argument("binarize: image and threshold sizes differ");
    Mask mask{img.width(), img.height(), std::vector<unsigned char>(img.size(), 0)};
    auto src = img.data();
    auto thr = threshold.data();
    for (std::size_t i = 0; i < src.size(); ++i) mask.bits[i] = src[i] > thr[i] ? 1 : 0;
    return mask;
}

namespace {

struct RunLabels {
    std::vector<std::vector<Run>> rows;
    DisjointSets sets;
};

RunLabels label_runs(const Mask& mask, int gap) {
    if (gap < 0) throw std::invalid_argument("gap must be non-negative");
    RunLabels out;
    auto& rows = out.rows;
    auto& sets = out.sets;
    rows.resize(static_cast<std::size_t>(mask.height));

    for (int y = 0; y < mask.height; ++y) {
        auto& row = rows[y];
        const unsigned char* bits = mask.bits.data() + static_cast<std::size_t>(y) * mask.width;
        for (int x = 0; x < mask.width;) {
            if (!bits[x]) {
                ++x;
                continue;
            }
            const int x0 = x;
            while (x < mask.width && bits[x]) ++x;
            Run run{x0, x - 1, sets.add()};
            if (!row.empty() && run.x0 - row.back().x1 <= gap) sets.unite(run.id, row.back().id);
            // Runs in the previous `gap` rows whose horizontal distance is <= gap.
            for (int dy = 1; dy <= gap && dy <= y; ++dy) {
                const auto& prev = rows[y - dy];
                auto it = std::lower_bound(prev.begin(), prev.end(), run.x0 - gap,
                                           [](const Run& r, int v) { return r.x1 < v; });
                for (; it != prev.end() && it->x0 <= run.x1 + gap; ++it) sets.unite(run.id, it->id);
            }
            row.push_back(run);
        }
    }

    return out;
}

}  // namespace

BlobLabels label_blobs(const Mask& mask, int gap) {
    RunLabels runs = label_runs(mask, gap);
    BlobLabels out;
    out.labels.assign(mask.bits.size(), -1);
    std::vector<int> label_of_root(runs.sets.parent.size(), -1);
    for (int y = 0; y < mask.height; ++y)
        for (const Run& run : runs.rows[y]) {
            const int root = runs.sets.find(run.id);
            if (label_of_root[root] < 0) label_of_root[root] = out.count++;
            for (int x = run.x0; x <= run.x1; ++x)
                out.labels[static_cast<std::size_t>(y) * mask.width + x] = label_of_root[root];
        }
    return out;
}

std::vector<BBox> blobs_to_boxes(const Mask& mask, int gap) {
    RunLabels runs = label_runs(mask, gap);
    auto& rows = runs.rows;
    auto& sets = runs.sets;

    // Roots are the smallest run id of each component, i.e. its first run in
    // raster order, so boxes come out in first-pixel order.
    std::vector<int> box_of_root(sets.parent.size(), -1);
    std::vector<BBox> boxes;
    for (int y = 0; y < mask.height; ++y) {
        for (const Run& run : rows[y]) {
            const int root = sets.find(run.id);
            if (box_of_root[root] < 0) {
                box_of_root[root] = static_cast<int>(boxes.size());
                boxes.push_back(BBox{static_cast<double>(run.x0), static_cast<double>(y),
                                     static_cast<double>(run.x1), static_cast<double>(y)});
            } else {
                BBox& b = boxes[box_of_root[root]];
                b.x_min = std::min<double>(b.x_min, run.x0);
                b.x_max = std::max<double>(b.x_max, run.x1);
                b.y_max = std::max<double>(b.y_max, y);
            }
        }
    }
    return boxes;
}

double box_mad(const GrayImage& img, const BBox& box) {
    const int x0 = std::max(0, to_index(box.x_min)), x1 = std::min(img.width() - 1, to_index(box.x_max));
    const int y0 = std::max(0, to_index(box.y_min)), y1 = std::min(img.height() - 1, to_index(box.y_max));
    if (x0 > x1 || y0 > y1) return 0.0;
    double sum = 0.0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) sum += img(x, y);
    const double n = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
    const double mean = sum / n;
    double dev = 0.0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) dev += std::abs(img(x, y) - mean);
    return dev / n;
}

std::vector<BBox> filter_boxes(const GrayImage& img, const std::vector<BBox>& boxes, double threshold) {
    std::vector<BBox> kept;
    for (const BBox& b : boxes)
        if (box_mad(img, b) >= threshold) kept.push_back(b);
    return kept;
}

BBox upscale_box(const BBox& box, double downscale, int full_width, int full_height) {
    const double inv = 1.0 / downscale;
    BBox out;
    out.x_min = std::max(0.0, std::floor(box.x_min * inv));
    out.y_min = std::max(0.0, std::floor(box.y_min * inv));
    out.x_max = std::min(full_width - 1.0, std::ceil((box.x_max + 1.0) * inv) - 1.0);
    out.y_max = std::min(full_height - 1.0, std::ceil((box.y_max + 1.0) * inv) - 1.0);
    return out;
}

std::vector<BBox> propose(const GrayImage& frame, const ProposerParams& params) {
    const GrayImage small = preprocess(frame, params);
    const GrayImage threshold = dynamic_threshold(small, params.kappa, params.window);
    const Mask mask = binarize(small, threshold);
    const std::vector<BBox> boxes = filter_boxes(small, blobs_to_boxes(mask, params.gap), params.mad_threshold);
    if (params.downscale == 1.0) return boxes;
    std::vector<BBox> full;
    full.reserve(boxes.size());
    for (const BBox& b : boxes) full.push_back(upscale_box(b, params.downscale, frame.width(), frame.height()));
    return full;
}

}  // namespace pvd

#include "pvd/classifier.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace pvd {

BBox enlarge(const BBox& box, double factor, int width, int height) {
    if (!(factor >= 1.0)) throw std::invalid_argument("enlargement factor must be >= 1");
    const double cx = box.center_x(), cy = box.center_y();
    const double half_w = 0.5 * box.width() * factor, half_h = 0.5 * box.height() * factor;
    // Inclusive edges: a box of width W spans [cx - (W-1)/2, cx + (W-1)/2].
    BBox out{cx - half_w + 0.5, cy - half_h + 0.5, cx + half_w - 0.5, cy + half_h - 0.5};
    out.x_min = std::clamp(out.x_min, 0.0, width - 1.0);
    out.y_min = std::clamp(out.y_min, 0.0, height - 1.0);
    out.x_max = std::clamp(out.x_max, 0.0, width - 1.0);
    out.y_max = std::clamp(out.y_max, 0.0, height - 1.0);
    return out;
}

GrayImage crop(const GrayImage& img, const BBox& box) {
    const int x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, img.width() - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, img.height() - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), x0, img.width() - 1);
    const int y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), y0, img.height() - 1);
    GrayImage out(x1 - x0 + 1, y1 - y0 + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) out(x - x0, y - y0) = img(x, y);
    return out;
}

GrayImage resample(const GrayImage& img, int width, int height) {
    if (img.empty()) throw std::invalid_argument("resample: empty image");
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    GrayImage out(width, height);
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(fy));
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
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

std::vector<ScoredBox> classify_proposals(const GrayImage& img, const std::vector<BBox>& boxes,
                                          const ProposalClassifier& model, double threshold,
                                          double enlargement) {
    std::vector<ScoredBox> out;
    out.reserve(boxes.size());
    for (const BBox& box : boxes) {
        ScoredBox scored;
        scored.box = box;
        try {
            const double s = model.classify(crop(img, enlarge(box, enlargement, img.width(), img.height())));
            if (!(s >= 0.0 && s <= 1.0)) throw std::runtime_error("score outside [0,1]");
            scored.score = s;
            scored.is_artifact = s >= threshold;
        } catch (const std::exception& e) {
            scored.error = e.what();
        }
        out.push_back(std::move(scored));
    }
    return out;
}

CropFeatures extract_features(const GrayImage& native, double enlargement) {
    constexpr int n = CropFeatures::kInputSize;
    const GrayImage c = resample(native, n, n);

    double peak = 0.0, lo = 1.0, sum = 0.0;
    for (double v : c.data()) {
        peak = std::max(peak, v);
        lo = std::min(lo, v);
        sum += v;
    }
    const double mean = sum / (n * n);
    double mad = 0.0;
    for (double v : c.data()) mad += std::abs(v - mean);
    mad /= n * n;

    // Centroid of the intensity above the crop minimum.
    double mass = 0.0, mx = 0.0, my = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double m = c(x, y) - lo;
            mass += m;
            mx += m * x;
            my += m * y;
        }
    const double centre = 0.5 * (n - 1);
    const double offset = mass > 1e-12 ? std::hypot(mx / mass - centre, my / mass - centre) / (0.5 * n) : 0.0;

    const double aspect = std::abs(std::log(static_cast<double>(native.width()) / native.height()));

    // Inner square is the original proposal inside the enlarged crop.
    const int inner = std::clamp(static_cast<int>(std::lround(n / enlargement)), 1, n);
    const int i0 = (n - inner) / 2, i1 = i0 + inner - 1;
    double inner_sum = 0.0, ring_sum = 0.0;
    int inner_n = 0, ring_n = 0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            if (x >= i0 && x <= i1 && y >= i0 && y <= i1) {
                inner_sum += c(x, y);
                ++inner_n;
            } else {
                ring_sum += c(x, y);
                ++ring_n;
            }
        }
    const double inner_mean = inner_sum / inner_n;
    const double ring_mean = ring_n > 0 ? ring_sum / ring_n : inner_mean;

    CropFeatures f;
    f.values = {peak, mad, offset, aspect, inner_mean - ring_mean, peak - ring_mean};
    return f;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex(const std::string& tok, const std::string& path) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw InputError(path + ": bad number '" + tok + "'");
    return v;
}

}  // namespace

BaselineModel BaselineModel::train(const std::vector<LabeledCrop>& examples, const TrainingOptions& options,
                                   double enlargement) {
    const auto positives = std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.positive; });
    if (positives == 0 || positives == static_cast<long>(examples.size()))
        throw InputError("classifier training needs at least one example of each class");

    constexpr int k = CropFeatures::kCount;
    std::vector<std::array<double, k>> x;
    std::vector<double> y;
    x.reserve(examples.size());
    for (const auto& e : examples) {
        x.push_back(extract_features(e.crop, enlargement).values);
        y.push_back(e.positive ? 1.0 : 0.0);
    }

    BaselineModel model;
    model.enlargement_ = enlargement;
    const double count = static_cast<double>(x.size());
    for (int j = 0; j < k; ++j) {
        double s = 0.0, s2 = 0.0;
        for (const auto& row : x) s += row[j];
        const double m = s / count;
        for (const auto& row : x) s2 += (row[j] - m) * (row[j] - m);
        const double sd = std::sqrt(s2 / count);
        model.mean_[j] = m;
        model.scale_[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    for (auto& row : x)
        for (int j = 0; j < k; ++j) row[j] = (row[j] - model.mean_[j]) * model.scale_[j];

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = static_cast<std::size_t>(std::max(1, options.batch_size));
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            std::array<double, k> grad{};
            double grad_b = 0.0;
            for (std::size_t t = start; t < stop; ++t) {
                const auto& row = x[order[t]];
                double z = model.bias_;
                for (int j = 0; j < k; ++j) z += model.weights_[j] * row[j];
                const double err = sigmoid(z) - y[order[t]];
                for (int j = 0; j < k; ++j) grad[j] += err * row[j];
                grad_b += err;
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (int j = 0; j < k; ++j)
                model.weights_[j] -= options.learning_rate * (grad[j] * inv + options.l2 * model.weights_[j]);
            model.bias_ -= options.learning_rate * grad_b * inv;
        }
    }
    return model;
}

double BaselineModel::score_features(const CropFeatures& features) const {
    double z = bias_;
    for (int j = 0; j < CropFeatures::kCount; ++j) z += weights_[j] * (features.values[j] - mean_[j]) * scale_[j];
    return sigmoid(z);
}

double BaselineModel::classify(const GrayImage& crop) const {
    return score_features(extract_features(crop, enlargement_));
}

void BaselineModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError(path + ": cannot open for writing");
    const auto row = [&](const char* name, const std::array<double, CropFeatures::kCount>& v) {
        out << name;
        for (double d : v) out << ' ' << hex(d);
        out << '\n';
    };
    out << "pvd-baseline-classifier v1\n";
    out << "enlargement " << hex(enlargement_) << '\n';
    row("mean", mean_);
    row("scale", scale_);
    row("weights", weights_);
    out << "bias " << hex(bias_) << '\n';
    if (!out) throw InputError(path + ": write failed");
}

BaselineModel BaselineModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != "pvd-baseline-classifier v1")
        throw InputError(path + ": not a pvd-baseline-classifier v1 file");
    BaselineModel m;
    bool seen[5] = {};
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key, tok;
        if (!(ss >> key)) continue;
        std::vector<double> vals;
        while (ss >> tok) vals.push_back(parse_hex(tok, path));
        const auto take = [&](std::array<double, CropFeatures::kCount>& dst, int slot) {
            if (vals.size() != dst.size()) throw InputError(path + ": '" + key + "' needs 6 values");
            std::copy(vals.begin(), vals.end(), dst.begin());
            seen[slot] = true;
        };
        const auto scalar = [&](double& dst, int slot) {
            if (vals.size() != 1) throw InputError(path + ": '" + key + "' needs 1 value");
            dst = vals[0];
            seen[slot] = true;
        };
        if (key == "enlargement") scalar(m.enlargement_, 0);
        else if (key == "mean") take(m.mean_, 1);
        else if (key == "scale") take(m.scale_, 2);
        else if (key == "weights") take(m.weights_, 3);
        else if (key == "bias") scalar(m.bias_, 4);
        else throw InputError(path + ": unknown key '" + key + "'");
    }
    if (!std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; }))
        throw InputError(path + ": incomplete model file");
    return m;
}

double SaturationClassifier::classify(const GrayImage& crop) const {
    const auto data = crop.data();
    return *std::max_element(data.begin(), data.end()) >= level_ ? 1.0 : 0.0;
}

}  // namespace pvd

#include "pvd/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace pvd {

FrameEvents score_frame(std::span<const BBox> boxes, std::span<const Keypoint> keypoints) {
    FrameEvents ev;
    ev.keypoints_per_box.assign(boxes.size(), 0);
    ev.boxes_per_keypoint.assign(keypoints.size(), 0);
    for (std::size_t b = 0; b < boxes.size(); ++b)
        for (std::size_t k = 0; k < keypoints.size(); ++k)
            if (boxes[b].contains(keypoints[k].x, keypoints[k].y)) {
                ++ev.keypoints_per_box[b];
                ++ev.boxes_per_keypoint[k];
            }
    for (int n : ev.boxes_per_keypoint) (n > 0 ? ev.tp_keypoints : ev.fn_keypoints)++;
    ev.fp_boxes = static_cast<int>(std::count(ev.keypoints_per_box.begin(), ev.keypoints_per_box.end(), 0));
    return ev;
}

void EventCounts::add(const FrameEvents& frame) {
    tp_keypoints += frame.tp_keypoints;
    fn_keypoints += frame.fn_keypoints;
    fp_boxes += frame.fp_boxes;
    for (int n : frame.keypoints_per_box) {
        if (n == 0) continue;
        ++tp_boxes;
        sum_inv_nk += 1.0 / n;
        sum_inv_nk_sq += 1.0 / (static_cast<double>(n) * n);
    }
    for (int n : frame.boxes_per_keypoint) {
        if (n == 0) continue;
        ++covered_keypoints;
        sum_inv_nb += 1.0 / n;
        sum_inv_nb_sq += 1.0 / (static_cast<double>(n) * n);
    }
}

EventCounts& EventCounts::operator+=(const EventCounts& o) {
    tp_keypoints += o.tp_keypoints;
    fn_keypoints += o.fn_keypoints;
    fp_boxes += o.fp_boxes;
    tp_boxes += o.tp_boxes;
    sum_inv_nk += o.sum_inv_nk;
    sum_inv_nk_sq += o.sum_inv_nk_sq;
    covered_keypoints += o.covered_keypoints;
    sum_inv_nb += o.sum_inv_nb;
    sum_inv_nb_sq += o.sum_inv_nb_sq;
    return *this;
}

namespace {

std::optional<double> ratio(double num, double den) {
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

std::optional<double> stddev(double sum, double sum_sq, long n) {
    if (n <= 0) return std::nullopt;
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "undef";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

}  // namespace

QualityReport quality(const EventCounts& c) {
    QualityReport r;
    r.precision = ratio(static_cast<double>(c.tp_keypoints), static_cast<double>(c.tp_keypoints + c.fp_boxes));
    r.recall = ratio(static_cast<double>(c.tp_keypoints), static_cast<double>(c.tp_keypoints + c.fn_keypoints));
    if (r.precision && r.recall && *r.precision + *r.recall > 0.0)
        r.f_score = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    r.q_k = ratio(c.sum_inv_nk, static_cast<double>(c.tp_boxes));
    r.q_b = ratio(c.sum_inv_nb, static_cast<double>(c.covered_keypoints));
    if (r.q_k && r.q_b) r.q = *r.q_k * *r.q_b;
    r.q_k_std = stddev(c.sum_inv_nk, c.sum_inv_nk_sq, c.tp_boxes);
    r.q_b_std = stddev(c.sum_inv_nb, c.sum_inv_nb_sq, c.covered_keypoints);
    return r;
}

std::string quality_json(const QualityReport& r, const EventCounts& c) {
    const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["precision"] = opt(r.precision);
    j["recall"] = opt(r.recall);
    j["f_score"] = opt(r.f_score);
    j["q"] = opt(r.q);
    j["q_k"] = opt(r.q_k);
    j["q_k_std"] = opt(r.q_k_std);
    j["q_b"] = opt(r.q_b);
    j["q_b_std"] = opt(r.q_b_std);
    j["counts"] = {{"tp_keypoints", c.tp_keypoints}, {"fn_keypoints", c.fn_keypoints},
                   {"fp_boxes", c.fp_boxes},         {"tp_boxes", c.tp_boxes},
                   {"covered_keypoints", c.covered_keypoints}};
    return j.dump(2);
}

std::string quality_table(const QualityReport& r) {
    std::ostringstream out;
    const auto pm = [](const std::optional<double>& v, const std::optional<double>& sd) {
        return v && sd ? cell(v) + " +- " + cell(sd) : cell(v);
    };
    out << "Prec. | Recall | F-score | q    | q_K          | q_B\n";
    out << cell(r.precision) << "  | " << cell(r.recall) << "   | " << cell(r.f_score) << "    | " << cell(r.q)
        << " | " << pm(r.q_k, r.q_k_std) << " | " << pm(r.q_b, r.q_b_std) << '\n';
    return out.str();
}

double lidar_ground_truth(const DepthImage& depth, const BBox& box) {
    const int x0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
    const int x1 = std::min(depth.width - 1, static_cast<int>(std::ceil(box.x_max)));
    const int y1 = std::min(depth.height - 1, static_cast<int>(std::ceil(box.y_max)));
    std::vector<double> valid;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (const double d = depth.at(x, y); std::isfinite(d) && d > 0.0) valid.push_back(d);
    if (valid.empty()) throw InputError("no valid depth measurements inside the box");
    std::sort(valid.begin(), valid.end());
    const std::size_t mid = valid.size() / 2;
    return valid.size() % 2 ? valid[mid] : 0.5 * (valid[mid - 1] + valid[mid]);
}

double relative_error(double estimate, double truth) {
    if (!(truth > 0.0)) throw std::invalid_argument("relative_error: ground truth must be positive");
    return (estimate - truth) / truth;
}

std::optional<double> detection_delay(const SequenceTags& tags, std::optional<int> detection_frame,
                                      double frame_rate) {
    if (!(frame_rate > 0.0)) throw std::invalid_argument("frame rate must be positive");
    if (!detection_frame || !tags.first_annotation) return std::nullopt;
    return (*detection_frame - *tags.first_annotation) / frame_rate;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
    const double pos = std::clamp(p, 0.0, 1.0) * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

DelaySummary summarize_delays(std::span<const std::optional<double>> delays) {
    DelaySummary s;
    std::vector<double> v;
    for (const auto& d : delays) {
        if (d) v.push_back(*d);
        else ++s.missed;
    }
    s.detected = static_cast<int>(v.size());
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    s.median = quantile_sorted(v, 0.5);
    s.q1 = quantile_sorted(v, 0.25);
    s.q3 = quantile_sorted(v, 0.75);
    return s;
}

}  // namespace pvd

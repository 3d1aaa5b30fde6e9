#pragma once

#include "pvd/geometry.hpp"
#include "pvd/image.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvd {

/// Keypoint/box events of one frame.
struct FrameEvents {
    int tp_keypoints = 0;                 ///< keypoints covered by at least one box
    int fn_keypoints = 0;                 ///< keypoints covered by no box
    int fp_boxes = 0;                     ///< boxes covering no keypoint
    std::vector<int> keypoints_per_box;   ///< n_K(b) for every box, 0 for false positives
    std::vector<int> boxes_per_keypoint;  ///< n_B(k) for every keypoint, 0 for false negatives
};

FrameEvents score_frame(std::span<const BBox> boxes, std::span<const Keypoint> keypoints);

/// Dataset-level accumulation of FrameEvents.
struct EventCounts {
    long tp_keypoints = 0;
    long fn_keypoints = 0;
    long fp_boxes = 0;
    long tp_boxes = 0;          ///< N_B
    double sum_inv_nk = 0.0;    ///< sum over TP boxes of 1/n_K
    double sum_inv_nk_sq = 0.0;
    long covered_keypoints = 0; ///< N_K
    double sum_inv_nb = 0.0;    ///< sum over covered keypoints of 1/n_B
    double sum_inv_nb_sq = 0.0;

    void add(const FrameEvents& frame);
    EventCounts& operator+=(const EventCounts& other);
};

/// Metrics whose denominators vanish are left empty ("undefined").
struct QualityReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_score;
    std::optional<double> q_k;
    std::optional<double> q_b;
    std::optional<double> q;
    std::optional<double> q_k_std;
    std::optional<double> q_b_std;
};

QualityReport quality(const EventCounts& counts);

/// JSON object with every field of the report; undefined metrics are null.
std::string quality_json(const QualityReport& report, const EventCounts& counts);
/// One-row table with the columns Prec. | Recall | F-score | q | q_K | q_B.
std::string quality_table(const QualityReport& report);

/// Median of the valid (finite, > 0) depths inside the box. Throws InputError
/// when none exist.
double lidar_ground_truth(const DepthImage& depth, const BBox& box);

/// (estimate - truth) / truth; negative means the estimate is too short.
double relative_error(double estimate, double truth);

/// Frame indices marking milestones of a sequence; absent tags are empty.
struct SequenceTags {
    std::optional<int> first_annotation;
    std::optional<int> human_reaction;
    std::optional<int> direct_sight;
    std::optional<int> production_detection;

    bool operator==(const SequenceTags&) const = default;
};

inline constexpr double kFrameRate = 18.0;

/// Seconds between the first annotation and a detection. Empty when the system
/// never detected or the sequence lacks a first-annotation tag.
std::optional<double> detection_delay(const SequenceTags& tags, std::optional<int> detection_frame,
                                      double frame_rate = kFrameRate);

struct DelaySummary {
    int detected = 0;
    int missed = 0;
    std::optional<double> mean;
    std::optional<double> median;
    std::optional<double> q1;
    std::optional<double> q3;
};

/// Aggregates per-sequence delays of one system; empty entries count as missed.
DelaySummary summarize_delays(std::span<const std::optional<double>> delays);

/// Linear-interpolated quantile of sorted data, p in [0,1].
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace pvd

#pragma once

#include "pvd/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

namespace pvd {

/// Constant-gain predict/update filter with a per-frame time step.
template <int N>
struct AlphaBetaState {
    using Vector = Eigen::Matrix<double, N, 1>;

    Vector estimate = Vector::Zero();
    Vector rate = Vector::Zero();
    double alpha = 0.5;
    double beta = 0.1;
};

template <int N>
typename AlphaBetaState<N>::Vector ab_predict(const AlphaBetaState<N>& s) {
    return s.estimate + s.rate;
}

template <int N>
AlphaBetaState<N> ab_update(const AlphaBetaState<N>& s, const typename AlphaBetaState<N>::Vector& measurement) {
    AlphaBetaState<N> next = s;
    const auto predicted = ab_predict(s);
    const auto residual = (measurement - predicted).eval();
    next.estimate = predicted + s.alpha * residual;
    next.rate = s.rate + s.beta * residual;
    return next;
}

/// Advances the estimate by its rate without a measurement.
template <int N>
AlphaBetaState<N> ab_coast(const AlphaBetaState<N>& s) {
    AlphaBetaState<N> next = s;
    next.estimate = ab_predict(s);
    return next;
}

struct TrackerConfig {
    double alpha = 0.5;
    double beta = 0.1;
    double inflation = 0.1;          ///< fraction of width/height added per side before matching
    int min_hits = 5;                ///< plausibility: frames detected before output
    double output_confidence = 0.5;  ///< plausibility: smoothed confidence must exceed this
    int max_misses = 3;              ///< coasting frames before removal
    double spawn_confidence = 0.1;   ///< detections must exceed this to open a track
    int confidence_window = 5;

    void validate() const;
};

struct Detection {
    BBox box;
    double score = 0.0;
    std::optional<double> distance;
};

struct Track {
    std::uint64_t id = 0;
    AlphaBetaState<4> box_filter;                  ///< (cx, cy, w, h)
    std::optional<AlphaBetaState<1>> dist_filter;  ///< meters
    std::deque<double> scores;                     ///< recent matched classifier scores
    double confidence = 0.0;
    int age_frames = 0;
    int hit_frames = 0;
    int miss_streak = 0;

    BBox box() const;
    std::optional<double> distance() const;
};

/// Per-frame state of one live track.
struct TrackRecord {
    std::uint64_t id = 0;
    BBox box;
    std::optional<double> distance;
    double confidence = 0.0;
    bool matched = false;
    bool output = false;
};

AlphaBetaState<4>::Vector box_to_state(const BBox& box);
BBox state_to_box(const AlphaBetaState<4>::Vector& state);

/// Grows a box by `fraction` of its width/height on every side.
BBox inflate(const BBox& box, double fraction);

/// Greedy matching: candidate pairs with IoU > 0 (detections inflated first)
/// are taken in descending IoU order, ties by track then detection index, each
/// side used at most once. Returns (track index, detection index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> greedy_match(const std::vector<BBox>& tracks,
                                                              const std::vector<BBox>& detections,
                                                              double inflation);

/// Multi-object tracker with occlusion coasting and a plausibility gate.
/// Frames must be fed in order.
class Tracker {
public:
    explicit Tracker(TrackerConfig config = {});

    /// Consumes one frame of detections and returns every live track after the update.
    std::vector<TrackRecord> step(const std::vector<Detection>& detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const TrackerConfig& config() const { return config_; }

private:
    bool plausible(const Track& t) const;

    TrackerConfig config_;
    std::vector<Track> tracks_;
    std::uint64_t next_id_ = 1;
};

}  // namespace pvd

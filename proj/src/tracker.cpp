#include "pvd/tracker.hpp"

#include "pvd/image.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

namespace pvd {

void TrackerConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("tracker alpha must lie in (0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("tracker beta must lie in [0, 1]");
    if (!(inflation >= 0.0)) throw InputError("tracker inflation must be non-negative");
    if (min_hits < 1 || max_misses < 0 || confidence_window < 1)
        throw InputError("tracker frame counts must be positive");
}

AlphaBetaState<4>::Vector box_to_state(const BBox& box) {
    return AlphaBetaState<4>::Vector(box.center_x(), box.center_y(), box.width(), box.height());
}

BBox state_to_box(const AlphaBetaState<4>::Vector& s) {
    const double hw = 0.5 * (std::max(s[2], 1.0) - 1.0);
    const double hh = 0.5 * (std::max(s[3], 1.0) - 1.0);
    return BBox{s[0] - hw, s[1] - hh, s[0] + hw, s[1] + hh};
}

BBox Track::box() const { return state_to_box(box_filter.estimate); }

std::optional<double> Track::distance() const {
    if (!dist_filter) return std::nullopt;
    return dist_filter->estimate[0];
}

BBox inflate(const BBox& box, double fraction) {
    const double dx = fraction * box.width(), dy = fraction * box.height();
    return BBox{box.x_min - dx, box.y_min - dy, box.x_max + dx, box.y_max + dy};
}

std::vector<std::pair<std::size_t, std::size_t>> greedy_match(const std::vector<BBox>& tracks,
                                                              const std::vector<BBox>& detections,
                                                              double inflation) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        const BBox grown = inflate(detections[d], inflation);
        for (std::size_t t = 0; t < tracks.size(); ++t)
            if (const double v = iou(tracks[t], grown); v > 0.0) candidates.emplace_back(v, t, d);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });
    std::vector<bool> track_used(tracks.size()), det_used(detections.size());
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [v, t, d] : candidates) {
        if (track_used[t] || det_used[d]) continue;
        track_used[t] = det_used[d] = true;
        pairs.emplace_back(t, d);
    }
    return pairs;
}

Tracker::Tracker(TrackerConfig config) : config_(config) { config_.validate(); }

bool Tracker::plausible(const Track& t) const {
    return t.hit_frames >= config_.min_hits && t.confidence > config_.output_confidence;
}

std::vector<TrackRecord> Tracker::step(const std::vector<Detection>& detections) {
    std::vector<BBox> predicted;
    predicted.reserve(tracks_.size());
    for (const Track& t : tracks_) predicted.push_back(state_to_box(ab_predict(t.box_filter)));
    std::vector<BBox> det_boxes;
    det_boxes.reserve(detections.size());
    for (const Detection& d : detections) det_boxes.push_back(d.box);

    const auto pairs = greedy_match(predicted, det_boxes, config_.inflation);
    std::vector<int> det_of_track(tracks_.size(), -1);
    std::vector<bool> det_matched(detections.size(), false);
    for (const auto& [t, d] : pairs) {
        det_of_track[t] = static_cast<int>(d);
        det_matched[d] = true;
    }

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        Track& t = tracks_[i];
        ++t.age_frames;
        if (det_of_track[i] < 0) {
            t.box_filter = ab_coast(t.box_filter);
            if (t.dist_filter) t.dist_filter = ab_coast(*t.dist_filter);
            ++t.miss_streak;
            continue;
        }
        const Detection& det = detections[det_of_track[i]];
        t.box_filter = ab_update(t.box_filter, box_to_state(det.box));
        if (t.dist_filter) {
            t.dist_filter = det.distance ? ab_update(*t.dist_filter, AlphaBetaState<1>::Vector(*det.distance))
                                         : ab_coast(*t.dist_filter);
        } else if (det.distance) {
            t.dist_filter = AlphaBetaState<1>{AlphaBetaState<1>::Vector(*det.distance),
                                              AlphaBetaState<1>::Vector::Zero(), config_.alpha, config_.beta};
        }
        t.scores.push_back(det.score);
        while (static_cast<int>(t.scores.size()) > config_.confidence_window) t.scores.pop_front();
        t.confidence = std::accumulate(t.scores.begin(), t.scores.end(), 0.0) / t.scores.size();
        ++t.hit_frames;
        t.miss_streak = 0;
    }

    std::vector<Track> survivors;
    std::vector<bool> survivor_matched;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        if (tracks_[i].miss_streak > config_.max_misses) continue;
        survivors.push_back(std::move(tracks_[i]));
        survivor_matched.push_back(det_of_track[i] >= 0);
    }
    tracks_ = std::move(survivors);

    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (det_matched[d] || !(detections[d].score > config_.spawn_confidence)) continue;
        Track t;
        t.id = next_id_++;
        t.box_filter = AlphaBetaState<4>{box_to_state(detections[d].box), AlphaBetaState<4>::Vector::Zero(),
                                         config_.alpha, config_.beta};
        if (detections[d].distance)
            t.dist_filter = AlphaBetaState<1>{AlphaBetaState<1>::Vector(*detections[d].distance),
                                              AlphaBetaState<1>::Vector::Zero(), config_.alpha, config_.beta};
        t.scores.push_back(detections[d].score);
        t.confidence = detections[d].score;
        t.age_frames = 1;
        t.hit_frames = 1;
        tracks_.push_back(std::move(t));
        survivor_matched.push_back(true);
    }

    std::vector<TrackRecord> records;
    records.reserve(tracks_.size());
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const Track& t = tracks_[i];
        records.push_back(TrackRecord{t.id, t.box(), t.distance(), t.confidence, survivor_matched[i], plausible(t)});
    }
    return records;
}

}  // namespace pvd

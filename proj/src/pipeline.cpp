#include "pvd/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace pvd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_out(const std::string& path) {
    File f(std::fopen(path.c_str(), "w"));
    if (!f) throw InputError("cannot write " + path);
    return f;
}

bool covers_keypoint(const BBox& box, const FrameAnnotation& ann) {
    return std::any_of(ann.keypoints.begin(), ann.keypoints.end(),
                       [&](const Keypoint& k) { return box.contains(k.x, k.y); });
}

template <class BoxesOf>
std::optional<int> first_covering(std::span<const FrameResult> results, const Sequence& sequence, BoxesOf boxes_of) {
    for (const FrameResult& r : results) {
        if (r.sequence != sequence.id || r.failed) continue;
        const auto pos = sequence.position_of(r.frame);
        if (!pos) continue;
        const FrameAnnotation& ann = sequence.frames[*pos];
        for (const BBox& b : boxes_of(r))
            if (covers_keypoint(b, ann)) return r.frame;
    }
    return std::nullopt;
}

StageStats stats_of(std::vector<double> v) {
    StageStats s;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / v.size());
    s.p50 = quantile_sorted(v, 0.5);
    s.p90 = quantile_sorted(v, 0.9);
    s.p99 = quantile_sorted(v, 0.99);
    s.max = v.back();
    return s;
}

nlohmann::json stats_json(const StageStats& s) {
    return {{"mean_ms", s.mean}, {"std_ms", s.std}, {"p50_ms", s.p50},
            {"p90_ms", s.p90},   {"p99_ms", s.p99}, {"max_ms", s.max}};
}

}  // namespace

void PipelineConfig::validate() const {
    proposer.validate();
    tracker.validate();
    if (!(frame_rate > 0.0)) throw InputError("frame_rate must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw InputError("threshold must lie in [0,1]");
    if (!(enlargement >= 1.0)) throw InputError("enlargement must be at least 1");
    if (localizer.subsample < 1) throw InputError("subsample must be at least 1");
}

Pipeline::Pipeline(PipelineConfig config, const ProposalClassifier& model, CameraModel camera, const RoadPath* road)
    : config_(std::move(config)), model_(&model), camera_(std::move(camera)), road_(road), tracker_(config_.tracker) {
    config_.validate();
    camera_.validate();
}

void Pipeline::reset() { tracker_ = Tracker(config_.tracker); }

FrameResult Pipeline::process(const std::string& sequence, int frame, const GrayImage& image, FrameTiming* timing) {
    FrameResult r;
    r.sequence = sequence;
    r.frame = frame;
    FrameTiming t;
    t.sequence = sequence;
    t.frame = frame;
    const auto start = Clock::now();
    try {
        auto t0 = Clock::now();
        r.proposals = propose(image, config_.proposer);
        t.propose_ms = ms_since(t0);

        t0 = Clock::now();
        r.detections = classify_proposals(image, r.proposals, *model_, config_.threshold, config_.enlargement);
        t.classify_ms = ms_since(t0);

        t0 = Clock::now();
        r.distances.assign(r.detections.size(), std::nullopt);
        for (std::size_t i = 0; i < r.detections.size(); ++i) {
            if (!r.detections[i].is_artifact) continue;
            try {
                r.distances[i] = aggregate_box(r.detections[i].box, camera_, config_.localizer, road_).distance;
            } catch (const LocalizationError&) {
                // above the horizon or off the road: tracked without distance
            }
        }
        t.localize_ms = ms_since(t0);

        t0 = Clock::now();
        std::vector<Detection> dets;
        for (std::size_t i = 0; i < r.detections.size(); ++i)
            if (r.detections[i].is_artifact)
                dets.push_back({r.detections[i].box, r.detections[i].score, r.distances[i]});
        r.tracks = tracker_.step(dets);
        t.track_ms = ms_since(t0);
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    t.total_ms = ms_since(start);
    if (timing) *timing = t;
    return r;
}

FrameSource dataset_source(const Sequence& sequence) {
    FrameSource src;
    src.sequence = sequence.id;
    for (const FrameAnnotation& f : sequence.frames) src.frames.push_back(f.index);
    src.load = [&sequence](std::size_t pos) { return read_pgm(sequence.image_path(sequence.frames[pos]).string()); };
    return src;
}

FrameSource synthetic_source(const SyntheticSceneSpec& spec, std::string id) {
    FrameSource src;
    src.sequence = std::move(id);
    for (int f = 0; f < spec.frames; ++f) src.frames.push_back(f);
    src.load = [spec](std::size_t pos) { return render_frame(spec, static_cast<int>(pos)).image; };
    return src;
}

PipelineRun run_pipeline(std::span<const FrameSource> sources, Pipeline& pipeline, RunMode mode) {
    PipelineRun run;
    const double period_ms = 1000.0 / pipeline.config().frame_rate;
    for (const FrameSource& src : sources) {
        pipeline.reset();
        double busy_until = 0.0;  // virtual clock in ms since the sequence start
        for (std::size_t pos = 0; pos < src.frames.size(); ++pos) {
            const double arrival = pos * period_ms;
            if (mode == RunMode::Live && arrival < busy_until) {
                FrameTiming t;
                t.sequence = src.sequence;
                t.frame = src.frames[pos];
                t.dropped = true;
                run.timings.push_back(t);
                continue;
            }
            FrameTiming t;
            FrameResult r;
            try {
                const GrayImage img = src.load(pos);
                r = pipeline.process(src.sequence, src.frames[pos], img, &t);
            } catch (const std::exception& e) {
                r.sequence = t.sequence = src.sequence;
                r.frame = t.frame = src.frames[pos];
                r.failed = true;
                r.error = e.what();
            }
            busy_until = arrival + t.total_ms;
            run.results.push_back(std::move(r));
            run.timings.push_back(t);
        }
    }
    return run;
}

void write_results(const std::string& path, std::span<const FrameResult> results) {
    File f = open_out(path);
    std::fprintf(f.get(), "sequence\tframe\ttrack_id\tx_min\ty_min\tx_max\ty_max\tscore\tdistance\toutput\n");
    for (const FrameResult& r : results)
        for (const TrackRecord& t : r.tracks) {
            char dist[32] = "nan";
            if (t.distance) std::snprintf(dist, sizeof dist, "%.3f", *t.distance);
            std::fprintf(f.get(), "%s\t%d\t%llu\t%.2f\t%.2f\t%.2f\t%.2f\t%.4f\t%s\t%d\n", r.sequence.c_str(), r.frame,
                         static_cast<unsigned long long>(t.id), t.box.x_min, t.box.y_min, t.box.x_max, t.box.y_max,
                         t.confidence, dist, t.output ? 1 : 0);
        }
}

void write_timings(const std::string& path, std::span<const FrameTiming> timings) {
    File f = open_out(path);
    std::fprintf(f.get(), "sequence\tframe\tpropose_ms\tclassify_ms\tlocalize_ms\ttrack_ms\ttotal_ms\tdropped\n");
    for (const FrameTiming& t : timings)
        std::fprintf(f.get(), "%s\t%d\t%.9f\t%.9f\t%.9f\t%.9f\t%.9f\t%d\n", t.sequence.c_str(), t.frame, t.propose_ms,
                     t.classify_ms, t.localize_ms, t.track_ms, t.total_ms, t.dropped ? 1 : 0);
}

std::vector<FrameTiming> read_timings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path);
    std::vector<FrameTiming> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        std::istringstream ss(line);
        FrameTiming t;
        int dropped = 0;
        if (!(ss >> t.sequence >> t.frame >> t.propose_ms >> t.classify_ms >> t.localize_ms >> t.track_ms >>
              t.total_ms >> dropped))
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed timing record");
        t.dropped = dropped != 0;
        out.push_back(t);
    }
    return out;
}

void write_detections(const std::string& path, std::span<const FrameResult> results, bool artifacts_only) {
    File f = open_out(path);
    std::fprintf(f.get(), "sequence\tframe\tx_min\ty_min\tx_max\ty_max\tscore\tartifact\n");
    for (const FrameResult& r : results)
        for (const ScoredBox& d : r.detections) {
            if (artifacts_only && !d.is_artifact) continue;
            std::fprintf(f.get(), "%s\t%d\t%.0f\t%.0f\t%.0f\t%.0f\t%.4f\t%d\n", r.sequence.c_str(), r.frame, d.box.x_min,
                         d.box.y_min, d.box.x_max, d.box.y_max, d.score, d.is_artifact ? 1 : 0);
        }
}

std::optional<int> first_track_detection(std::span<const FrameResult> results, const Sequence& sequence) {
    return first_covering(results, sequence, [](const FrameResult& r) {
        std::vector<BBox> boxes;
        for (const TrackRecord& t : r.tracks)
            if (t.output) boxes.push_back(t.box);
        return boxes;
    });
}

std::optional<int> first_artifact_detection(std::span<const FrameResult> results, const Sequence& sequence) {
    return first_covering(results, sequence, [](const FrameResult& r) {
        std::vector<BBox> boxes;
        for (const ScoredBox& d : r.detections)
            if (d.is_artifact) boxes.push_back(d.box);
        return boxes;
    });
}

std::optional<int> first_proposal_detection(std::span<const FrameResult> results, const Sequence& sequence) {
    return first_covering(results, sequence, [](const FrameResult& r) { return r.proposals; });
}

BenchReport bench_report(std::span<const FrameTiming> timings, double frame_rate) {
    if (!(frame_rate > 0.0)) throw InputError("frame_rate must be positive");
    BenchReport rep;
    rep.budget_ms = 1000.0 / frame_rate;
    std::vector<double> p, c, l, t, total;
    for (const FrameTiming& x : timings) {
        if (x.dropped) {
            ++rep.dropped;
            continue;
        }
        p.push_back(x.propose_ms);
        c.push_back(x.classify_ms);
        l.push_back(x.localize_ms);
        t.push_back(x.track_ms);
        total.push_back(x.total_ms);
    }
    if (total.empty()) throw InputError("no processed frames to report");
    rep.frames = total.size();
    rep.under_budget =
        static_cast<double>(std::count_if(total.begin(), total.end(), [&](double v) { return v < rep.budget_ms; })) /
        total.size();
    rep.propose = stats_of(p);
    rep.classify = stats_of(c);
    rep.localize = stats_of(l);
    rep.track = stats_of(t);
    rep.total = stats_of(total);
    return rep;
}

std::string bench_json(const BenchReport& r) {
    nlohmann::json j{{"frames", r.frames},
                     {"dropped", r.dropped},
                     {"budget_ms", r.budget_ms},
                     {"under_budget", r.under_budget},
                     {"propose", stats_json(r.propose)},
                     {"classify", stats_json(r.classify)},
                     {"localize", stats_json(r.localize)},
                     {"track", stats_json(r.track)},
                     {"total", stats_json(r.total)}};
    return j.dump(2);
}

std::string bench_table(const BenchReport& r) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %9s %9s %9s %9s %9s %9s\n", "stage", "mean", "std", "p50", "p90", "p99", "max");
    os << buf;
    const std::pair<const char*, const StageStats*> rows[] = {
        {"propose", &r.propose}, {"classify", &r.classify}, {"localize", &r.localize},
        {"track", &r.track},     {"total", &r.total}};
    for (const auto& [name, s] : rows) {
        std::snprintf(buf, sizeof buf, "%-9s %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n", name, s->mean, s->std, s->p50,
                      s->p90, s->p99, s->max);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "frames %zu, dropped %zu, under %.1f ms: %.1f%%\n", r.frames, r.dropped,
                  r.budget_ms, 100.0 * r.under_budget);
    os << buf;
    return os.str();
}

}  // namespace pvd

// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include "oracles.hpp"
#include "pvd/pipeline.hpp"
#include "pvd/tune.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <functional>
#include <numeric>
#include <string>

using namespace pvd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s >= limit_s) {
        o.pass = false;
        o.detail += " [over the time limit]";
    }
    failures += !o.pass;
    std::printf("%s %s: %s (%.1f s, limit %.0f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), s, limit_s);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome thresholding() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> kappa(ProposerParams::kKappaMin, ProposerParams::kKappaMax);
    std::uniform_int_distribution<int> window(ProposerParams::kWindowMin, ProposerParams::kWindowMax);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const GrayImage img = oracle::random_image(64, 64, rng);
        const double k = kappa(rng);
        const int w = window(rng);
        const GrayImage fast = dynamic_threshold(img, k, w), slow = oracle::threshold(img, k, w);
        for (std::size_t j = 0; j < fast.size(); ++j) worst = std::max(worst, std::abs(fast.data()[j] - slow.data()[j]));
    }
    return {worst <= 1e-9, fmt("100 images, max abs diff %.3g", worst)};
}

Outcome blobs() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> density(0.01, 0.25);
    int mismatches = 0, compared = 0;
    for (int i = 0; i < 200; ++i) {
        const Mask m = oracle::random_mask(64, 64, density(rng), rng);
        for (int gap : {1, 4, 9}) {
            const auto expected = oracle::components(m, gap);
            const BlobLabels labels = label_blobs(m, gap);
            std::vector<std::vector<int>> groups(static_cast<std::size_t>(labels.count));
            for (std::size_t p = 0; p < labels.labels.size(); ++p)
                if (labels.labels[p] >= 0) groups[static_cast<std::size_t>(labels.labels[p])].push_back(static_cast<int>(p));
            const std::set<std::vector<int>> got(groups.begin(), groups.end());

            std::set<std::tuple<int, int, int, int>> want_boxes, got_boxes;
            for (const auto& g : expected) {
                int x0 = 64, y0 = 64, x1 = -1, y1 = -1;
                for (int p : g) {
                    x0 = std::min(x0, p % 64), x1 = std::max(x1, p % 64);
                    y0 = std::min(y0, p / 64), y1 = std::max(y1, p / 64);
                }
                want_boxes.emplace(x0, y0, x1, y1);
            }
            const auto boxes = blobs_to_boxes(m, gap);
            for (const BBox& b : boxes)
                got_boxes.emplace(int(b.x_min), int(b.y_min), int(b.x_max), int(b.y_max));
            mismatches += got != expected || got_boxes != want_boxes || boxes.size() != expected.size();
            ++compared;
        }
    }
    return {mismatches == 0, fmt("%d mask/gap cases, %d partition or box mismatches", compared, mismatches)};
}

Outcome geometry() {
    const CameraModel cam = SyntheticSceneSpec::default_camera(1280, 960);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> fwd(5.0, 400.0), lat(-20.0, 20.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 p(fwd(rng), lat(rng), 0.0);
        const auto px = cam.project(p);
        if (!px) return {false, "ground point behind the camera"};
        worst = std::max(worst, (gp_intersect(pixel_to_ray(cam, px->x(), px->y())).point - p).norm());
    }
    int psd_wrong = 0;
    for (int i = 0; i < 100; ++i) {
        const RoadPath road = oracle::random_road(rng, 200 + 8 * i);
        const Ray ray = oracle::random_ray(rng);
        psd_wrong += psd3d_locate(ray, road).point != road.points[oracle::argmin_road(ray, road.points, false)];
        psd_wrong += psd2d_locate(ray, road).point != road.points[oracle::argmin_road(ray, road.points, true)];
    }
    return {worst <= 1e-6 && psd_wrong == 0,
            fmt("GP round trip max error %.3g m over 1000 points to 400 m; PSD argmin mismatches %d/200", worst, psd_wrong)};
}

Outcome metrics() {
    const auto kp = [](int x, int y) { return Keypoint{x, y, 1, LightKind::Indirect}; };
    EventCounts c;
    const std::vector<Keypoint> kps{kp(2, 2), kp(6, 6)};
    const std::vector<BBox> boxes{{0, 0, 8, 8}, {20, 20, 25, 25}};
    c.add(score_frame(boxes, kps));
    const QualityReport r = quality(c);
    const bool fixture = r.q_k && *r.q_k == 0.5 && r.q_b && *r.q_b == 1.0 && r.q && *r.q == 0.5 && r.precision &&
                         *r.precision == 2.0 / 3.0 && r.recall && *r.recall == 1.0 && r.f_score && *r.f_score == 0.8;

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> coord(0, 30), size(0, 15), count(1, 6);
    int bad = 0, defined = 0;
    while (defined < 1000) {
        std::vector<BBox> bs;
        std::vector<Keypoint> ks;
        for (int i = count(rng); i > 0; --i) {
            const int x = coord(rng), y = coord(rng);
            bs.push_back({double(x), double(y), double(x + size(rng)), double(y + size(rng))});
        }
        for (int i = count(rng); i > 0; --i) ks.push_back(kp(coord(rng), coord(rng)));
        EventCounts e;
        e.add(score_frame(bs, ks));
        const QualityReport q = quality(e);
        if (!q.q) continue;
        ++defined;
        bad += !(*q.q >= 0.0 && *q.q <= 1.0 && *q.q == *q.q_k * *q.q_b);
    }
    return {fixture && bad == 0, fmt("fixture %s (q_K %.3f q_B %.3f q %.3f P %.4f R %.3f F %.3f); %d/%d random violations",
                                     fixture ? "exact" : "WRONG", r.q_k.value_or(-1), r.q_b.value_or(-1),
                                     r.q.value_or(-1), r.precision.value_or(-1), r.recall.value_or(-1),
                                     r.f_score.value_or(-1), bad, defined)};
}

Outcome tracker_gating() {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution present(0.7);
    std::uniform_real_distribution<double> score(0.0, 1.0), step(-2.0, 2.0);
    int violations = 0, outputs = 0, removals = 0;
    for (int seq = 0; seq < 500; ++seq) {
        Tracker tracker;
        TrackerConfig identity_cfg;
        identity_cfg.alpha = 1.0;
        identity_cfg.beta = 0.0;
        Tracker identity(identity_cfg);
        bool alive = false;
        int hits = 0, misses = 0;
        std::deque<double> window;
        double x = 50, y = 50;
        for (int f = 0; f < 60; ++f) {
            const bool seen = present(rng);
            const double s = score(rng);
            x += step(rng);
            y += step(rng);
            const BBox box{x, y, x + 11, y + 9};
            const std::vector<Detection> dets =
                seen ? std::vector<Detection>{Detection{box, s, std::nullopt}} : std::vector<Detection>{};
            const auto recs = tracker.step(dets);
            const auto same = identity.step(dets);
            if (seen) {
                if (alive) {
                    ++hits;
                    misses = 0;
                    window.push_back(s);
                    if (window.size() > 5) window.pop_front();
                } else if (s > 0.1) {
                    alive = true;
                    hits = 1;
                    misses = 0;
                    window = {s};
                }
            } else if (alive && ++misses > 3) {
                alive = false;
                ++removals;
            }
            if (recs.size() != (alive ? 1u : 0u)) {
                ++violations;
                break;
            }
            if (!alive) continue;
            const double conf = std::accumulate(window.begin(), window.end(), 0.0) / window.size();
            violations += recs[0].output != (hits >= 5 && conf > 0.5);
            violations += recs[0].output && hits < 5;
            outputs += recs[0].output;
            if (seen && same.size() == 1 && same[0].matched) {
                const BBox& b = same[0].box;
                violations += std::abs(b.x_min - box.x_min) > 1e-9 || std::abs(b.y_min - box.y_min) > 1e-9 ||
                              std::abs(b.x_max - box.x_max) > 1e-9 || std::abs(b.y_max - box.y_max) > 1e-9;
            }
        }
    }
    return {violations == 0, fmt("500 sequences, %d output frames, %d removals, %d violations", outputs, removals, violations)};
}

// Synthetic tuning dataset: the default approach scene with street lamps, noise differs per sequence.
constexpr int kTuneWidth = 320;
constexpr int kTuneSequences = 9;
constexpr int kTuneStride = 3;
constexpr double kTuneVariation = 0.0;
constexpr int kTuneLamps = 2;

Outcome tuner() {
    SyntheticSceneSpec spec;
    spec.camera = SyntheticSceneSpec::default_camera(kTuneWidth, kTuneWidth * 3 / 4);
    spec.variation = kTuneVariation;
    spec.static_lights = kTuneLamps;
    const fs::path root = fs::temp_directory_path() / "pvd_acceptance_tuning";
    fs::remove_all(root);
    write_synthetic_dataset(root, spec, kTuneSequences, false);
    const Dataset ds = load_dataset(root);
    ProposalObjective train(ds, Split::Train, kTuneStride), val(ds, Split::Val, kTuneStride);

    const auto& grid = val.grid();
    const double grid_min = *std::min_element(grid.begin(), grid.end());

    OptimizeOptions o;
    o.budget = 100;
    o.seed = 1;
    const OptimizeResult fixed = optimize(train, val, nullptr, o);
    const double fixed_h = fixed.trials[fixed.best].val_h;

    double tpe_mean = 0.0, random_mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        o.seed = seed;
        o.sampler = Sampler::Tpe;
        const OptimizeResult t = seed == 1 ? fixed : optimize(train, val, nullptr, o);
        tpe_mean += t.trials[t.best].val_h / 5.0;
        o.sampler = Sampler::Random;
        const OptimizeResult r = optimize(train, val, nullptr, o);
        random_mean += r.trials[r.best].val_h / 5.0;
    }
    const bool close = fixed_h <= grid_min + 0.05;
    const bool better = tpe_mean < random_mean;
    return {close && better,
            fmt("val h %.4f vs grid minimum %.4f over %zu points (seed 1); mean best val h over 5 seeds: TPE %.4f, random %.4f",
                fixed_h, grid_min, grid.size(), tpe_mean, random_mean)};
}

Outcome time_benefit() {
    SyntheticSceneSpec spec;  // 120 frames, indirect light from frame 30, direct sight at 60
    const ProposerParams params;
    SyntheticSceneSpec train_scene = spec;
    train_scene.seed = 7;
    auto crops = synthetic_crops(300, 300, 7);
    const auto more = proposal_crops(train_scene, params, 3);
    crops.insert(crops.end(), more.begin(), more.end());
    const BaselineModel model = BaselineModel::train(crops);
    SaturationClassifier saturation;

    spec.seed = 99;
    const Sequence seq = synthetic_sequence(spec, "approach");
    const FrameSource src = synthetic_source(spec, "approach");
    Pipeline full(PipelineConfig{}, model, spec.camera);
    Pipeline direct_only(PipelineConfig{}, saturation, spec.camera);
    const auto a = first_track_detection(run_pipeline(std::span(&src, 1), full).results, seq);
    const auto b = first_track_detection(run_pipeline(std::span(&src, 1), direct_only).results, seq);
    if (!a || !b) return {false, fmt("no detection (full %d, direct-only %d)", a.value_or(-1), b.value_or(-1))};
    const double benefit = (*b - *a) / kFrameRate;
    return {benefit >= 1.0, fmt("first annotation %d, direct sight %d; full pipeline frame %d, direct-only frame %d: %.2f s earlier",
                                *seq.tags.first_annotation, *seq.tags.direct_sight, *a, *b, benefit)};
}

Outcome performance() {
    SyntheticSceneSpec spec;
    spec.camera = SyntheticSceneSpec::default_camera(640, 480);
    spec.frames = 100;
    spec.direct_sight_frame = 50;
    spec.indirect_lead = 25;
    spec.variation = 0.3;
    spec.static_lights = 1;
    std::vector<FrameSource> sources;
    for (int i = 0; i < 5; ++i) sources.push_back(synthetic_source(sequence_variant(spec, i), "perf" + std::to_string(i)));
    const BaselineModel model = BaselineModel::train(synthetic_crops(300, 300, 11));
    Pipeline pipeline(PipelineConfig{}, model, spec.camera);
    const PipelineRun run = run_pipeline(sources, pipeline);
    const BenchReport r = bench_report(run.timings);
    return {r.frames == 500 && r.under_budget >= 0.9,
            fmt("%zu frames at 640x480, %.1f%% under %.1f ms (mean %.2f ms, p90 %.2f ms, max %.2f ms)", r.frames,
                100.0 * r.under_budget, r.budget_ms, r.total.mean, r.total.p90, r.total.max)};
}

// Converted PVDN day data in the documented dataset layout; the published final
// parameters should reproduce the annotation-generation scores.
void pvdn() {
    const char* root = std::getenv("PVD_PVDN_DAY");
    if (!root || !fs::is_directory(root)) {
        std::printf("SKIP pvdn-annotations: set PVD_PVDN_DAY to a converted PVDN day dataset to run\n");
        return;
    }
    criterion("pvdn-annotations", 3600.0, [&] {
        const Dataset ds = load_dataset(root);
        const Split split = ds.split(Split::Test).empty() ? Split::Val : Split::Test;
        ProposerParams p;
        p.kappa = 0.4;
        p.window = 19;
        p.mad_threshold = 0.01;
        p.gap = 4;
        ProposalObjective objective(ds, split, 1, p);
        const QualityReport r = quality(objective.counts(SearchSpace::quantize(p)));
        const double f = r.f_score.value_or(0.0), q = r.q.value_or(0.0);
        return Outcome{std::abs(f - 0.93) <= 0.03 && std::abs(q - 0.70) <= 0.03,
                       fmt("%s split: F %.3f (target 0.93), q %.3f (target 0.70)", to_string(split), f, q)};
    });
}

}  // namespace

int main() {
    criterion("thresholding-oracle", 10.0, thresholding);
    criterion("blob-oracle", 30.0, blobs);
    criterion("geometry", 10.0, geometry);
    criterion("metrics", 10.0, metrics);
    criterion("tracker-gating", 10.0, tracker_gating);
    criterion("tuner", 600.0, tuner);
    criterion("time-benefit", 600.0, time_benefit);
    criterion("performance-budget", 600.0, performance);
    pvdn();
    return failures == 0 ? 0 : 1;
}

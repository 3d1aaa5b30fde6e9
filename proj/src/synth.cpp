#include "pvd/synth.hpp"

#include "pvd/localizer.hpp"
#include "pvd/proposer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace fs = std::filesystem;

namespace pvd {

namespace {

constexpr double kHeadlampHeight = 0.65;
constexpr double kHeadlampHalfSpacing = 0.7;
constexpr double kPoolLead = 25.0;       // light pool this far ahead of the vehicle
constexpr double kGuardrailLead = 12.0;
constexpr double kGuardrailHeight = 0.6;
constexpr double kMinRange = 6.0;
constexpr double kLampHeight = 6.0;

double clampd(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 over the combined value
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CameraModel SyntheticSceneSpec::default_camera(int width, int height) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = 1400.0 * width / 1280.0;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.position = Vec3(0.0, 0.0, 1.3);
    cam.rotation = CameraModel::rotation_from_rpy(0.0, 1.0 * std::numbers::pi / 180.0, 0.0);
    return cam;
}

std::vector<PlantedArtifact> scene_artifacts(const SyntheticSceneSpec& spec, int frame) {
    std::vector<PlantedArtifact> out;
    const CameraModel& cam = spec.camera;
    const double fpx = cam.fx;
    const auto range_of = [&](const Vec3& p) { return (p - cam.position).norm(); };

    for (int i = 0; i < spec.static_lights; ++i) {
        const Vec3 p(40.0 + 55.0 * i, -7.0 - 2.0 * (i % 2), kLampHeight);
        out.push_back({p, 0.95, clampd(fpx * 0.25 / range_of(p), 1.2, 5.0), LightKind::Direct, false});
    }
    if (!spec.vehicle) return out;

    const double vx = spec.start_distance - spec.speed * frame;
    const int first_indirect = spec.direct_sight_frame - spec.indirect_lead;
    if (frame >= first_indirect) {
        const double progress = clampd((frame - first_indirect + 1.0) / std::max(1, spec.indirect_lead), 0.0, 1.0);
        const Vec3 pool(vx - kPoolLead, spec.lane_offset, 0.0);
        if (pool.x() > kMinRange)
            out.push_back({pool, 0.12 + 0.28 * progress, clampd(fpx * 2.5 / range_of(pool), 4.0, 20.0),
                           LightKind::Indirect, true});
        const Vec3 rail(vx - kGuardrailLead, spec.guardrail_offset, kGuardrailHeight);
        if (rail.x() > kMinRange)
            out.push_back({rail, 0.10 + 0.25 * progress, clampd(fpx * 0.8 / range_of(rail), 3.0, 12.0),
                           LightKind::Indirect, true});
    }
    if (frame >= spec.direct_sight_frame && vx > kMinRange) {
        for (double side : {-1.0, 1.0}) {
            const Vec3 lamp(vx, spec.lane_offset + side * kHeadlampHalfSpacing, kHeadlampHeight);
            out.push_back({lamp, 1.2, clampd(fpx * 0.12 / range_of(lamp), 1.2, 4.0), LightKind::Direct, true});
        }
    }
    return out;
}

void add_blob(GrayImage& img, double cx, double cy, double peak, double sigma) {
    const int r = static_cast<int>(std::ceil(3.5 * sigma));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx)) - r);
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(cx)) + r);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy)) - r);
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(cy)) + r);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            img(x, y) = std::min(1.0, img(x, y) + peak * std::exp(-d2 * inv));
        }
}

SyntheticFrame render_frame(const SyntheticSceneSpec& spec, int frame) {
    const CameraModel& cam = spec.camera;
    SyntheticFrame out;
    out.index = frame;
    out.image = GrayImage(cam.width, cam.height);
    out.depth = DepthImage{cam.width, cam.height, std::vector<double>(out.image.size(), 0.0)};

    // Background: dark sky, slightly brighter road surface, faint dashed lane markings.
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const auto ground = try_gp_intersect(pixel_to_ray(cam, x, y));
            double v = 0.5 * spec.background;
            if (ground) {
                const Vec3& p = ground->point;
                out.depth.at(x, y) = p.norm();
                v = spec.background * (1.0 + 0.5 * std::min(1.0, 20.0 / std::max(p.x(), 1.0)));
                const bool dash = std::fmod(p.x(), 12.0) < 6.0;
                if (std::abs(std::abs(p.y()) - 1.75) < 0.08 && dash && p.x() < 80.0) v += 2.0 * spec.background;
            }
            out.image(x, y) = v;
        }
    }

    out.artifacts = scene_artifacts(spec, frame);
    for (const PlantedArtifact& a : out.artifacts) {
        const auto px = cam.project(a.position);
        if (!px) continue;
        add_blob(out.image, px->x(), px->y(), a.peak, a.sigma);
        if (a.kind == LightKind::Direct) add_blob(out.image, px->x(), px->y(), 0.15 * a.peak, 3.0 * a.sigma);
        // Elevated sources occlude the ground behind them in the range image.
        if (a.position.z() > 0.0) {
            const double r = 2.0 * a.sigma;
            for (int y = std::max(0, static_cast<int>(px->y() - r)); y <= std::min(cam.height - 1, static_cast<int>(px->y() + r)); ++y)
                for (int x = std::max(0, static_cast<int>(px->x() - r)); x <= std::min(cam.width - 1, static_cast<int>(px->x() + r)); ++x)
                    if (std::hypot(x - px->x(), y - px->y()) <= r) out.depth.at(x, y) = a.position.norm();
        }
    }

    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(frame)));
    std::normal_distribution<double> noise(0.0, spec.noise);
    if (spec.noise > 0.0)
        for (double& v : out.image.data()) v += noise(rng);
    out.image.saturate();

    out.keypoints = frame_keypoints(spec, frame);
    return out;
}

std::vector<Keypoint> frame_keypoints(const SyntheticSceneSpec& spec, int frame) {
    std::vector<Keypoint> out;
    for (const PlantedArtifact& a : scene_artifacts(spec, frame)) {
        if (!a.annotated) continue;
        const auto px = spec.camera.project(a.position);
        if (!px) continue;
        const Keypoint k{static_cast<int>(std::lround(px->x())), static_cast<int>(std::lround(px->y())), 1, a.kind};
        if (k.x < 0 || k.y < 0 || k.x >= spec.camera.width || k.y >= spec.camera.height) continue;
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Keypoint& o) {
            return o.kind == k.kind && std::abs(o.x - k.x) <= 2 && std::abs(o.y - k.y) <= 2;
        });
        if (!duplicate) out.push_back(k);
    }
    return out;
}

SequenceTags scene_tags(const SyntheticSceneSpec& spec) {
    SequenceTags tags;
    for (int f = 0; f < spec.frames; ++f) {
        for (const Keypoint& k : frame_keypoints(spec, f)) {
            if (!tags.first_annotation) tags.first_annotation = f;
            if (k.kind == LightKind::Direct && !tags.direct_sight) tags.direct_sight = f;
        }
    }
    const auto within = [&](int f) -> std::optional<int> {
        if (f >= 0 && f < spec.frames) return f;
        return std::nullopt;
    };
    if (tags.first_annotation)
        tags.human_reaction = within(*tags.first_annotation + static_cast<int>(std::lround(0.8 * kFrameRate)));
    if (tags.direct_sight) tags.production_detection = within(*tags.direct_sight + 5);
    return tags;
}

Sequence synthetic_sequence(const SyntheticSceneSpec& spec, const std::string& id) {
    Sequence seq;
    seq.id = id;
    for (int f = 0; f < spec.frames; ++f) {
        FrameAnnotation ann;
        ann.index = f;
        char name[32];
        std::snprintf(name, sizeof name, "images/%06d.pgm", f);
        ann.image = name;
        ann.keypoints = frame_keypoints(spec, f);
        seq.frames.push_back(std::move(ann));
    }
    seq.tags = scene_tags(spec);
    return seq;
}

SyntheticSceneSpec sequence_variant(const SyntheticSceneSpec& spec, int index) {
    SyntheticSceneSpec v = spec;
    v.seed = mix_seed(spec.seed, 1000 + static_cast<std::uint64_t>(index));
    if (spec.variation <= 0.0) return v;
    std::mt19937_64 rng(mix_seed(v.seed, 77));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double j = spec.variation;
    v.speed = spec.speed * (1.0 + j * u(rng));
    v.start_distance = spec.start_distance * (1.0 + 0.5 * j * u(rng));
    v.lane_offset = spec.lane_offset * (1.0 + 0.3 * j * u(rng));
    v.guardrail_offset = spec.guardrail_offset * (1.0 + 0.3 * j * u(rng));
    v.noise = spec.noise * (1.0 + j * u(rng));
    v.background = spec.background * (1.0 + j * u(rng));
    v.static_lights = spec.static_lights + static_cast<int>(std::lround(1.5 * j * (u(rng) + 1.0)));
    v.indirect_lead = std::max(1, static_cast<int>(std::lround(spec.indirect_lead * (1.0 + 0.5 * j * u(rng)))));
    return v;
}

Dataset write_synthetic_dataset(const fs::path& root, const SyntheticSceneSpec& spec, int sequences,
                                bool with_depth) {
    Dataset ds;
    ds.root = root;
    ds.camera = spec.camera;
    for (int s = 0; s < sequences; ++s) {
        const SyntheticSceneSpec seq_spec = sequence_variant(spec, s);
        char id[32];
        std::snprintf(id, sizeof id, "seq%03d", s);
        Sequence seq;
        seq.id = id;
        seq.dir = root / "sequences" / id;
        fs::create_directories(seq.dir / "images");
        if (with_depth) fs::create_directories(seq.dir / "depth");
        for (int f = 0; f < spec.frames; ++f) {
            const SyntheticFrame frame = render_frame(seq_spec, f);
            char name[32];
            std::snprintf(name, sizeof name, "%06d.pgm", f);
            FrameAnnotation ann;
            ann.index = f;
            ann.image = std::string("images/") + name;
            write_pgm((seq.dir / ann.image).string(), frame.image);
            if (with_depth) {
                ann.depth = std::string("depth/") + name;
                write_depth_pgm((seq.dir / *ann.depth).string(), frame.depth);
            }
            ann.keypoints = frame.keypoints;
            seq.frames.push_back(std::move(ann));
        }
        seq.tags = scene_tags(seq_spec);
        ds.splits[static_cast<std::size_t>(s % 3)].push_back(seq.id);
        ds.sequences.push_back(std::move(seq));
    }
    save_dataset(ds, root);
    return ds;
}

std::vector<LabeledCrop> synthetic_crops(int positives, int negatives, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    const auto shape = [&]() {
        const int base = static_cast<int>(uni(12, 40));
        const double aspect = uni(0.6, 1.6);
        return std::pair{std::max(6, static_cast<int>(base * aspect)), base};
    };
    const auto add_noise = [&](GrayImage& img, double sigma) {
        std::normal_distribution<double> n(0.0, sigma);
        for (double& v : img.data()) v += n(rng);
        img.saturate();
    };

    std::vector<LabeledCrop> out;
    for (int i = 0; i < positives; ++i) {
        const auto [w, h] = shape();
        GrayImage img(w, h, uni(0.02, 0.10));
        const double cx = 0.5 * (w - 1) + uni(-0.1, 0.1) * w, cy = 0.5 * (h - 1) + uni(-0.1, 0.1) * h;
        const double size = std::min(w, h);
        if (i % 2 == 0) add_blob(img, cx, cy, uni(0.9, 1.3), uni(0.06, 0.12) * size);
        else add_blob(img, cx, cy, uni(0.15, 0.4), uni(0.12, 0.22) * size);
        add_noise(img, uni(0.003, 0.02));
        out.push_back({std::move(img), true});
    }
    for (int i = 0; i < negatives; ++i) {
        const auto [w, h] = shape();
        GrayImage img(w, h);
        switch (i % 4) {
            case 0:
                for (double& v : img.data()) v = u(rng);
                break;
            case 1:
                img = GrayImage(w, h, uni(0.02, 0.5));
                add_noise(img, uni(0.005, 0.05));
                break;
            case 2: {
                const double a = uni(0.0, 0.5), b = uni(0.0, 0.5);
                const bool horizontal = u(rng) < 0.5;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x)
                        img(x, y) = a + (b - a) * (horizontal ? x / (w - 1.0) : y / (h - 1.0));
                add_noise(img, 0.01);
                break;
            }
            default: {
                img = GrayImage(w, h, uni(0.02, 0.1));
                const double level = uni(0.1, 0.5);
                const int thick = std::max(1, static_cast<int>(uni(0.05, 0.2) * std::min(w, h)));
                const int at = static_cast<int>(uni(0.0, 1.0) * (h - thick));
                for (int y = at; y < at + thick; ++y)
                    for (int x = 0; x < w; ++x) img(x, y) = level;
                add_noise(img, 0.01);
                break;
            }
        }
        out.push_back({std::move(img), false});
    }
    return out;
}

std::vector<LabeledCrop> proposal_crops(const SyntheticSceneSpec& spec, const ProposerParams& params, int stride,
                                        double enlargement) {
    std::vector<LabeledCrop> out;
    for (int f = 0; f < spec.frames; f += std::max(1, stride)) {
        const SyntheticFrame frame = render_frame(spec, f);
        for (const BBox& box : propose(frame.image, params)) {
            const bool positive = std::any_of(frame.keypoints.begin(), frame.keypoints.end(),
                                              [&](const Keypoint& k) { return box.contains(k.x, k.y); });
            out.push_back({crop(frame.image, enlarge(box, enlargement, frame.image.width(), frame.image.height())),
                           positive});
        }
    }
    return out;
}

}  // namespace pvd

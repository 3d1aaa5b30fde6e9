#pragma once

#include "pvd/classifier.hpp"
#include "pvd/dataset.hpp"
#include "pvd/geometry.hpp"
#include "pvd/image.hpp"
#include "pvd/proposer.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pvd {

/// Night scene with one oncoming vehicle on a straight two-lane road. The
/// vehicle is hidden (e.g. behind a crest) until `direct_sight_frame`; its
/// light pool on the road and a guardrail reflection show up
/// `indirect_lead` frames earlier.
struct SyntheticSceneSpec {
    CameraModel camera = default_camera(1280, 960);
    int frames = 120;
    int direct_sight_frame = 60;
    int indirect_lead = 30;
    bool vehicle = true;
    double start_distance = 190.0;  ///< vehicle x at frame 0 (m)
    double speed = 1.2;             ///< approach speed (m/frame)
    double lane_offset = 3.5;       ///< oncoming lane center y (m)
    double guardrail_offset = 6.0;  ///< guardrail y (m)
    double noise = 0.01;            ///< Gaussian pixel noise sigma
    double background = 0.04;
    int static_lights = 0;          ///< street lamps; bright but not annotated
    double variation = 0.0;         ///< per-sequence jitter of trajectory, offsets, noise and lamps (0..1)
    std::uint64_t seed = 1;

    /// Level camera 1.3 m above the ground, slightly pitched down.
    static CameraModel default_camera(int width, int height);
};

/// A rendered light source.
struct PlantedArtifact {
    Vec3 position;   ///< world point at the blob's intensity maximum
    double peak;     ///< intensity added at the maximum
    double sigma;    ///< blob spread (pixels)
    LightKind kind;
    bool annotated;  ///< street lamps are not
};

struct SyntheticFrame {
    int index = 0;
    GrayImage image;
    DepthImage depth;
    std::vector<Keypoint> keypoints;
    std::vector<PlantedArtifact> artifacts;
};

/// Artifacts visible in a frame (deterministic, no noise involved).
std::vector<PlantedArtifact> scene_artifacts(const SyntheticSceneSpec& spec, int frame);

/// Renders one frame; the result depends only on (spec, frame).
SyntheticFrame render_frame(const SyntheticSceneSpec& spec, int frame);

/// Keypoints at the projected intensity maxima of annotated artifacts inside
/// the image; sources closer than 2 px are merged.
std::vector<Keypoint> frame_keypoints(const SyntheticSceneSpec& spec, int frame);

/// Annotations and tags of a scene without rendering images (image paths follow
/// write_synthetic_dataset).
Sequence synthetic_sequence(const SyntheticSceneSpec& spec, const std::string& id);

/// Tags implied by the schedule: first annotated frame, human reaction 0.8 s
/// later, direct sight, and a production detection 5 frames after direct sight.
SequenceTags scene_tags(const SyntheticSceneSpec& spec);

/// Adds an isotropic Gaussian blob, clipping at 1.
void add_blob(GrayImage& img, double cx, double cy, double peak, double sigma);

/// Scene of the index-th sequence of a synthetic dataset: its own seed and,
/// with spec.variation > 0, jittered trajectory, offsets, noise, lamps and lead.
SyntheticSceneSpec sequence_variant(const SyntheticSceneSpec& spec, int index);

/// Renders `sequences` scenes (seeds derived from spec.seed) and writes them as
/// a dataset; sequences are dealt to train/val/test round-robin.
Dataset write_synthetic_dataset(const std::filesystem::path& root, const SyntheticSceneSpec& spec,
                                int sequences, bool with_depth = true);

/// Labeled crops for classifier experiments. Positives are headlamp spots and
/// faint wide reflections; negatives are noise patches, flat patches, gradients
/// and bar-shaped structures.
std::vector<LabeledCrop> synthetic_crops(int positives, int negatives, std::uint64_t seed);

/// Crops of proposals on rendered frames, labeled by keypoint coverage.
std::vector<LabeledCrop> proposal_crops(const SyntheticSceneSpec& spec, const ProposerParams& params,
                                        int stride = 1, double enlargement = kDefaultEnlargement);

/// Deterministic 64-bit mixer used to derive per-frame and per-trial seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace pvd

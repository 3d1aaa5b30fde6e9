#pragma once

#include "pvd/classifier.hpp"
#include "pvd/dataset.hpp"
#include "pvd/eval.hpp"
#include "pvd/geometry.hpp"
#include "pvd/localizer.hpp"
#include "pvd/proposer.hpp"
#include "pvd/synth.hpp"
#include "pvd/tracker.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvd {

struct PipelineConfig {
    ProposerParams proposer;
    std::string model_path;  ///< baseline model file; empty means the caller supplies a classifier
    double threshold = kDefaultConfidenceThreshold;
    double enlargement = kDefaultEnlargement;
    LocalizerConfig localizer;
    TrackerConfig tracker;
    double frame_rate = kFrameRate;

    void validate() const;
};

struct FrameResult {
    std::string sequence;
    int frame = 0;
    std::vector<BBox> proposals;
    std::vector<ScoredBox> detections;
    std::vector<std::optional<double>> distances;  ///< per detection, empty when not an artifact or not localizable
    std::vector<TrackRecord> tracks;
    bool failed = false;
    std::string error;
};

/// Wall-clock milliseconds per stage. Dropped frames carry zeros.
struct FrameTiming {
    std::string sequence;
    int frame = 0;
    double propose_ms = 0.0;
    double classify_ms = 0.0;
    double localize_ms = 0.0;
    double track_ms = 0.0;
    double total_ms = 0.0;
    bool dropped = false;
};

/// propose -> classify -> localize -> track for one stream of frames.
class Pipeline {
public:
    Pipeline(PipelineConfig config, const ProposalClassifier& model, CameraModel camera,
             const RoadPath* road = nullptr);

    FrameResult process(const std::string& sequence, int frame, const GrayImage& image, FrameTiming* timing = nullptr);
    /// Forgets all tracks; call between sequences.
    void reset();

    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    const ProposalClassifier* model_;
    CameraModel camera_;
    const RoadPath* road_;
    Tracker tracker_;
};

/// Lazily loaded frames of one sequence.
struct FrameSource {
    std::string sequence;
    std::vector<int> frames;
    std::function<GrayImage(std::size_t position)> load;
};

FrameSource dataset_source(const Sequence& sequence);
FrameSource synthetic_source(const SyntheticSceneSpec& spec, std::string id);

enum class RunMode {
    Batch,  ///< every frame processed
    Live,   ///< frames arrive at the frame rate; a frame arriving while busy is dropped
};

struct PipelineRun {
    std::vector<FrameResult> results;  ///< processed frames only
    std::vector<FrameTiming> timings;  ///< every frame, dropped ones flagged
};

PipelineRun run_pipeline(std::span<const FrameSource> sources, Pipeline& pipeline, RunMode mode = RunMode::Batch);

/// Results file: tab-separated with a header line
///   sequence frame track_id x_min y_min x_max y_max score distance output
/// one row per live track per processed frame; distance is "nan" when unknown,
/// output is 0 or 1.
void write_results(const std::string& path, std::span<const FrameResult> results);
/// Timing log: sequence frame propose_ms classify_ms localize_ms track_ms total_ms dropped
void write_timings(const std::string& path, std::span<const FrameTiming> timings);
std::vector<FrameTiming> read_timings(const std::string& path);

/// Detection file: sequence frame x_min y_min x_max y_max score artifact
void write_detections(const std::string& path, std::span<const FrameResult> results, bool artifacts_only);

/// First frame whose output tracks cover an annotated keypoint.
std::optional<int> first_track_detection(std::span<const FrameResult> results, const Sequence& sequence);
/// Same rule for a per-frame variant without the tracker (classified artifacts).
std::optional<int> first_artifact_detection(std::span<const FrameResult> results, const Sequence& sequence);
/// First frame with a proposal covering a keypoint.
std::optional<int> first_proposal_detection(std::span<const FrameResult> results, const Sequence& sequence);

struct StageStats {
    double mean = 0.0;
    double std = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
};

struct BenchReport {
    std::size_t frames = 0;   ///< processed frames
    std::size_t dropped = 0;
    double budget_ms = 0.0;
    double under_budget = 0.0;  ///< fraction of processed frames with total < budget
    StageStats propose, classify, localize, track, total;
};

/// Statistics over processed frames; throws InputError when there are none.
BenchReport bench_report(std::span<const FrameTiming> timings, double frame_rate = kFrameRate);
std::string bench_json(const BenchReport& report);
std::string bench_table(const BenchReport& report);

}  // namespace pvd

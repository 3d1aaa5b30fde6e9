// pvd command line: proposal generation, classification, localization,
// tracking, evaluation, tuning, synthetic data and benchmarking.

#include "pvd/classifier.hpp"
#include "pvd/dataset.hpp"
#include "pvd/eval.hpp"
#include "pvd/localizer.hpp"
#include "pvd/overlay.hpp"
#include "pvd/pipeline.hpp"
#include "pvd/proposer.hpp"
#include "pvd/synth.hpp"
#include "pvd/tune.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pvd;

namespace {

struct Options {
    // inputs
    std::string data;
    std::string split;
    std::vector<std::string> sequences;
    std::vector<std::string> images;
    std::string camera;
    std::string road;
    std::string out = "-";

    // proposer
    std::string params;
    std::optional<double> kappa;
    std::optional<int> window;
    std::optional<double> mad;
    std::optional<int> gap;

    // classifier
    std::string classifier = "baseline";
    std::string model;
    double threshold = kDefaultConfidenceThreshold;
    double enlargement = kDefaultEnlargement;

    // localizer
    std::string method = "gp";
    std::string aggregation = "center";
    int subsample = 2;

    // tracker
    double alpha = TrackerConfig{}.alpha;
    double beta = TrackerConfig{}.beta;
    int min_hits = TrackerConfig{}.min_hits;
    int max_misses = TrackerConfig{}.max_misses;

    double frame_rate = kFrameRate;
    bool live = false;
};

std::string path_out(const std::string& p) { return p == "-" ? "/dev/stdout" : p; }

ProposerParams proposer_params(const Options& o) {
    ProposerParams p = o.params.empty() ? ProposerParams{} : read_proposer_params(o.params);
    if (o.kappa) p.kappa = *o.kappa;
    if (o.window) p.window = *o.window;
    if (o.mad) p.mad_threshold = *o.mad;
    if (o.gap) p.gap = *o.gap;
    p.validate();
    return p;
}

PipelineConfig pipeline_config(const Options& o) {
    PipelineConfig c;
    c.proposer = proposer_params(o);
    c.model_path = o.model;
    c.threshold = o.threshold;
    c.enlargement = o.enlargement;
    c.localizer.method = parse_method(o.method);
    c.localizer.aggregation = parse_aggregation(o.aggregation);
    c.localizer.subsample = o.subsample;
    c.tracker.alpha = o.alpha;
    c.tracker.beta = o.beta;
    c.tracker.min_hits = o.min_hits;
    c.tracker.max_misses = o.max_misses;
    c.frame_rate = o.frame_rate;
    c.validate();
    return c;
}

std::unique_ptr<ProposalClassifier> make_classifier(const Options& o) {
    if (o.classifier == "saturation") return std::make_unique<SaturationClassifier>();
    if (o.classifier != "baseline") throw InputError("unknown classifier '" + o.classifier + "' (baseline, saturation)");
    if (o.model.empty()) throw InputError("--model is required for the baseline classifier");
    return std::make_unique<BaselineModel>(BaselineModel::load(o.model));
}

// Frames to process: either loose images or (part of) a dataset.
struct Inputs {
    std::optional<Dataset> dataset;
    std::vector<FrameSource> sources;
    std::vector<const Sequence*> sequences;  // parallel to sources when from a dataset
};

Inputs load_inputs(const Options& o) {
    Inputs in;
    if (!o.images.empty()) {
        FrameSource src;
        src.sequence = "images";
        for (std::size_t i = 0; i < o.images.size(); ++i) src.frames.push_back(static_cast<int>(i));
        src.load = [files = o.images](std::size_t pos) { return read_pgm(files[pos]); };
        in.sources.push_back(std::move(src));
        return in;
    }
    if (o.data.empty()) throw InputError("give --data <dataset root> or --image <file.pgm>");
    in.dataset = load_dataset(o.data);
    const Dataset& ds = *in.dataset;
    if (!o.sequences.empty()) {
        for (const auto& id : o.sequences) {
            const Sequence* s = ds.find(id);
            if (!s) throw InputError(o.data + ": no sequence '" + id + "'");
            in.sequences.push_back(s);
        }
    } else if (!o.split.empty()) {
        in.sequences = ds.split(parse_split(o.split));
    } else {
        for (const Sequence& s : ds.sequences) in.sequences.push_back(&s);
    }
    for (const Sequence* s : in.sequences)
        if (!s->frames.empty()) in.sources.push_back(dataset_source(*s));
    std::erase_if(in.sequences, [](const Sequence* s) { return s->frames.empty(); });
    if (in.sources.empty()) throw InputError(o.data + ": no frames selected");
    return in;
}

CameraModel camera_for(const Options& o, const Inputs& in) {
    if (!o.camera.empty()) return read_camera(o.camera);
    if (in.dataset && in.dataset->camera) return *in.dataset->camera;
    const GrayImage first = in.sources.front().load(0);
    return SyntheticSceneSpec::default_camera(first.width(), first.height());
}

std::optional<RoadPath> road_for(const Options& o) {
    if (o.road.empty()) return std::nullopt;
    return read_road_path(o.road);
}

const FrameAnnotation* annotation_of(const Inputs& in, std::size_t source, int frame) {
    if (source >= in.sequences.size()) return nullptr;
    const Sequence* s = in.sequences[source];
    const auto pos = s->position_of(frame);
    return pos ? &s->frames[*pos] : nullptr;
}

void add_input_options(CLI::App* app, Options& o) {
    app->add_option("--data", o.data, "dataset root");
    app->add_option("--split", o.split, "train, val or test");
    app->add_option("--sequence", o.sequences, "sequence id (repeatable)");
    app->add_option("--image", o.images, "PGM frame(s) instead of a dataset");
    app->add_option("--camera", o.camera, "camera calibration file");
    app->add_option("-o,--out", o.out, "output file, - for stdout");
}

void add_proposer_options(CLI::App* app, Options& o) {
    app->add_option("--params", o.params, "proposer parameter file");
    app->add_option("--kappa", o.kappa);
    app->add_option("--window", o.window);
    app->add_option("--mad", o.mad, "MAD filter threshold");
    app->add_option("--gap", o.gap, "blob merge distance (px)");
}

void add_classifier_options(CLI::App* app, Options& o) {
    app->add_option("--classifier", o.classifier, "baseline or saturation")->capture_default_str();
    app->add_option("--model", o.model, "baseline model file");
    app->add_option("--threshold", o.threshold)->capture_default_str();
    app->add_option("--enlargement", o.enlargement)->capture_default_str();
}

void add_localizer_options(CLI::App* app, Options& o) {
    app->add_option("--method", o.method, "gp, psd3d or psd2d")->capture_default_str();
    app->add_option("--aggregation", o.aggregation, "center, max, min, lowest, mean, median")->capture_default_str();
    app->add_option("--subsample", o.subsample)->capture_default_str();
    app->add_option("--road", o.road, "road polyline file for psd3d/psd2d");
}

void add_tracker_options(CLI::App* app, Options& o) {
    app->add_option("--alpha", o.alpha)->capture_default_str();
    app->add_option("--beta", o.beta)->capture_default_str();
    app->add_option("--min-hits", o.min_hits)->capture_default_str();
    app->add_option("--max-misses", o.max_misses)->capture_default_str();
    app->add_option("--frame-rate", o.frame_rate)->capture_default_str();
    app->add_flag("--live", o.live, "drop frames that arrive while busy");
}

PipelineRun run_all(const Options& o, const Inputs& in, const ProposalClassifier& model) {
    const CameraModel cam = camera_for(o, in);
    const auto road = road_for(o);
    Pipeline pipeline(pipeline_config(o), model, cam, road ? &*road : nullptr);
    return run_pipeline(in.sources, pipeline, o.live ? RunMode::Live : RunMode::Batch);
}

void report_failures(const PipelineRun& run) {
    for (const FrameResult& r : run.results)
        if (r.failed) std::fprintf(stderr, "warning: %s frame %d failed: %s\n", r.sequence.c_str(), r.frame, r.error.c_str());
}

int cmd_propose(const Options& o) {
    const ProposerParams params = proposer_params(o);
    const Inputs in = load_inputs(o);
    std::FILE* f = std::fopen(path_out(o.out).c_str(), "w");
    if (!f) throw InputError("cannot write " + o.out);
    std::fprintf(f, "sequence\tframe\tx_min\ty_min\tx_max\ty_max\n");
    for (const FrameSource& src : in.sources)
        for (std::size_t pos = 0; pos < src.frames.size(); ++pos)
            for (const BBox& b : propose(src.load(pos), params))
                std::fprintf(f, "%s\t%d\t%.2f\t%.2f\t%.2f\t%.2f\n", src.sequence.c_str(), src.frames[pos], b.x_min,
                             b.y_min, b.x_max, b.y_max);
    std::fclose(f);
    return 0;
}

int cmd_detect(const Options& o, bool artifacts_only) {
    const Inputs in = load_inputs(o);
    const auto model = make_classifier(o);
    const PipelineRun run = run_all(o, in, *model);
    report_failures(run);
    write_detections(path_out(o.out), run.results, artifacts_only);
    return 0;
}

int cmd_localize(const Options& o) {
    const Inputs in = load_inputs(o);
    const auto model = make_classifier(o);
    const PipelineRun run = run_all(o, in, *model);
    report_failures(run);
    std::FILE* f = std::fopen(path_out(o.out).c_str(), "w");
    if (!f) throw InputError("cannot write " + o.out);
    std::fprintf(f, "sequence\tframe\tx_min\ty_min\tx_max\ty_max\tscore\tdistance\tlidar\n");
    std::size_t source = 0;
    for (const FrameResult& r : run.results) {
        while (source < in.sources.size() && in.sources[source].sequence != r.sequence) ++source;
        std::optional<DepthImage> depth;
        if (const FrameAnnotation* a = annotation_of(in, source, r.frame); a && a->depth)
            depth = read_depth_pgm((in.sequences[source]->dir / *a->depth).string());
        for (std::size_t i = 0; i < r.detections.size(); ++i) {
            if (!r.detections[i].is_artifact) continue;
            const BBox& b = r.detections[i].box;
            char dist[32] = "nan", lidar[32] = "nan";
            if (r.distances[i]) std::snprintf(dist, sizeof dist, "%.3f", *r.distances[i]);
            if (depth) {
                const double gt = lidar_ground_truth(*depth, b);
                if (std::isfinite(gt)) std::snprintf(lidar, sizeof lidar, "%.3f", gt);
            }
            std::fprintf(f, "%s\t%d\t%.2f\t%.2f\t%.2f\t%.2f\t%.4f\t%s\t%s\n", r.sequence.c_str(), r.frame, b.x_min,
                         b.y_min, b.x_max, b.y_max, r.detections[i].score, dist, lidar);
        }
    }
    std::fclose(f);
    return 0;
}

int cmd_track(const Options& o, const std::string& timings) {
    const Inputs in = load_inputs(o);
    const auto model = make_classifier(o);
    const PipelineRun run = run_all(o, in, *model);
    report_failures(run);
    write_results(path_out(o.out), run.results);
    if (!timings.empty()) write_timings(timings, run.timings);
    return 0;
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

int cmd_evaluate(const Options& o, const std::string& what, bool json) {
    if (what == "proposals") {
        const ProposerParams params = proposer_params(o);
        const Inputs in = load_inputs(o);
        if (in.sequences.empty()) throw InputError("evaluate needs --data");
        EventCounts counts;
        for (std::size_t s = 0; s < in.sources.size(); ++s)
            for (std::size_t pos = 0; pos < in.sources[s].frames.size(); ++pos)
                counts.add(score_frame(propose(in.sources[s].load(pos), params), in.sequences[s]->frames[pos].keypoints));
        const QualityReport report = quality(counts);
        std::cout << (json ? quality_json(report, counts) : quality_table(report)) << '\n';
        return 0;
    }
    if (what != "delay") throw InputError("unknown evaluation '" + what + "' (proposals, delay)");
    const Inputs in = load_inputs(o);
    if (in.sequences.empty()) throw InputError("evaluate needs --data");
    const auto model = make_classifier(o);
    const PipelineRun run = run_all(o, in, *model);
    report_failures(run);
    std::vector<std::optional<double>> ours, human, production;
    std::printf("sequence\tdetected\tdelay_s\thuman_s\tproduction_s\n");
    for (const Sequence* seq : in.sequences) {
        std::vector<FrameResult> mine;
        for (const FrameResult& r : run.results)
            if (r.sequence == seq->id) mine.push_back(r);
        const auto frame = first_track_detection(mine, *seq);
        ours.push_back(detection_delay(seq->tags, frame, o.frame_rate));
        human.push_back(detection_delay(seq->tags, seq->tags.human_reaction, o.frame_rate));
        production.push_back(detection_delay(seq->tags, seq->tags.production_detection, o.frame_rate));
        std::printf("%s\t%s\t%s\t%s\t%s\n", seq->id.c_str(), frame ? std::to_string(*frame).c_str() : "-",
                    fmt_opt(ours.back()).c_str(), fmt_opt(human.back()).c_str(), fmt_opt(production.back()).c_str());
    }
    const char* names[] = {"system", "human", "production"};
    const std::vector<std::optional<double>>* all[] = {&ours, &human, &production};
    std::printf("\nsummary\tdetected\tmissed\tmean_s\tmedian_s\tq1_s\tq3_s\n");
    for (int i = 0; i < 3; ++i) {
        const DelaySummary d = summarize_delays(*all[i]);
        std::printf("%s\t%d\t%d\t%s\t%s\t%s\t%s\n", names[i], d.detected, d.missed, fmt_opt(d.mean).c_str(),
                    fmt_opt(d.median).c_str(), fmt_opt(d.q1).c_str(), fmt_opt(d.q3).c_str());
    }
    return 0;
}

int cmd_tune(const Options& o, OptimizeOptions opts, const std::string& sampler, int stride, bool grid) {
    if (o.data.empty()) throw InputError("tune needs --data");
    const Dataset ds = load_dataset(o.data);
    opts.sampler = parse_sampler(sampler);
    const ProposerParams base = proposer_params(o);
    ProposalObjective train(ds, Split::Train, stride, base), val(ds, Split::Val, stride, base);
    std::optional<ProposalObjective> test;
    if (!ds.split(Split::Test).empty()) test.emplace(ds, Split::Test, stride, base);
    const OptimizeResult r = optimize(train, val, test ? &*test : nullptr, opts);
    const Trial& best = r.trials[r.best];
    std::fprintf(stderr, "best trial %d: kappa=%.2f window=%d mad=%.2f gap=%d train_h=%.4f val_h=%.4f", best.number,
                 r.best_params.kappa, r.best_params.window, r.best_params.mad_threshold, r.best_params.gap, best.train_h,
                 best.val_h);
    std::fprintf(stderr, "\n");
    if (r.test) std::fprintf(stderr, "test split:\n%s\n", quality_table(*r.test).c_str());
    if (grid) {
        const auto& g = val.grid();
        const auto it = std::min_element(g.begin(), g.end());
        const ProposerParams p = SearchSpace::params(SearchSpace::at(static_cast<std::size_t>(it - g.begin())), base);
        std::fprintf(stderr, "grid minimum on val: h=%.4f at kappa=%.2f window=%d mad=%.2f gap=%d\n", *it, p.kappa,
                     p.window, p.mad_threshold, p.gap);
    }
    write_proposer_params(path_out(o.out), r.best_params);
    return 0;
}

int cmd_synth(const std::string& out, SyntheticSceneSpec spec, int width, int height, int sequences, bool no_depth) {
    if (out.empty()) throw InputError("synth needs --out <directory>");
    if (width < 16 || height < 16) throw InputError("image size must be at least 16x16");
    if (sequences < 1 || spec.frames < 1) throw InputError("need at least one sequence and one frame");
    spec.camera = SyntheticSceneSpec::default_camera(width, height);
    const Dataset ds = write_synthetic_dataset(out, spec, sequences, !no_depth);
    std::fprintf(stderr, "wrote %zu sequences to %s\n", ds.sequences.size(), out.c_str());
    return 0;
}

int cmd_bench(const Options& o, const std::string& timings_in, const std::string& timings_out, int synthetic_frames,
              int width, int height, bool json) {
    std::vector<FrameTiming> timings;
    if (!timings_in.empty()) {
        timings = read_timings(timings_in);
    } else {
        const auto model = make_classifier(o);
        Inputs in;
        if (synthetic_frames > 0) {
            SyntheticSceneSpec spec;
            spec.camera = SyntheticSceneSpec::default_camera(width, height);
            spec.frames = synthetic_frames;
            spec.direct_sight_frame = std::min(60, synthetic_frames / 2);
            spec.indirect_lead = std::min(30, spec.direct_sight_frame);
            in.sources.push_back(synthetic_source(spec, "synthetic"));
            timings = run_all(o, in, *model).timings;
        } else {
            in = load_inputs(o);
            timings = run_all(o, in, *model).timings;
        }
    }
    if (!timings_out.empty()) write_timings(timings_out, timings);
    const BenchReport report = bench_report(timings, o.frame_rate);
    std::cout << (json ? bench_json(report) : bench_table(report)) << '\n';
    return 0;
}

int cmd_overlay(const Options& o, const std::string& dir) {
    if (dir.empty()) throw InputError("overlay needs --dir <output directory>");
    const Inputs in = load_inputs(o);
    const auto model = make_classifier(o);
    const PipelineRun run = run_all(o, in, *model);
    report_failures(run);
    fs::create_directories(dir);
    const Rgb gray{128, 128, 128}, yellow{255, 220, 0}, red{255, 40, 40}, green{40, 255, 80};
    std::size_t source = 0, pos = 0;
    for (const FrameResult& r : run.results) {
        while (source < in.sources.size() && in.sources[source].sequence != r.sequence) ++source, pos = 0;
        const FrameSource& src = in.sources[source];
        while (pos < src.frames.size() && src.frames[pos] != r.frame) ++pos;
        RgbImage img = to_rgb(src.load(pos));
        for (const BBox& b : r.proposals) draw_box(img, b, gray);
        for (const ScoredBox& d : r.detections)
            if (d.is_artifact) draw_box(img, d.box, yellow);
        for (const TrackRecord& t : r.tracks) {
            if (!t.output) continue;
            draw_box(img, t.box, red);
            draw_number(img, static_cast<int>(t.box.x_min), static_cast<int>(t.box.y_min) - 12, t.id, red);
        }
        if (const FrameAnnotation* a = annotation_of(in, source, r.frame))
            for (const Keypoint& k : a->keypoints) draw_cross(img, k.x, k.y, 3, green);
        char name[64];
        std::snprintf(name, sizeof name, "_%06d.ppm", r.frame);
        write_ppm((fs::path(dir) / (r.sequence + name)).string(), img);
    }
    return 0;
}

int cmd_train(const Options& o, int synthetic, std::uint64_t seed) {
    if (o.model.empty()) throw InputError("train needs --model <output file>");
    const ProposerParams params = proposer_params(o);
    std::vector<LabeledCrop> examples;
    if (!o.data.empty()) {
        const Inputs in = load_inputs(o);
        for (std::size_t s = 0; s < in.sources.size(); ++s)
            for (std::size_t pos = 0; pos < in.sources[s].frames.size(); ++pos) {
                const GrayImage img = in.sources[s].load(pos);
                const auto& kps = in.sequences[s]->frames[pos].keypoints;
                for (const BBox& box : propose(img, params)) {
                    const bool positive =
                        std::any_of(kps.begin(), kps.end(), [&](const Keypoint& k) { return box.contains(k.x, k.y); });
                    examples.push_back({crop(img, enlarge(box, o.enlargement, img.width(), img.height())), positive});
                }
            }
    }
    if (synthetic > 0) {
        auto extra = synthetic_crops(synthetic, synthetic, seed);
        examples.insert(examples.end(), extra.begin(), extra.end());
    }
    TrainingOptions topts;
    topts.seed = seed;
    const BaselineModel model = BaselineModel::train(examples, topts, o.enlargement);
    model.save(o.model);
    int correct = 0;
    for (const LabeledCrop& e : examples) correct += (model.classify(e.crop) > o.threshold) == e.positive;
    std::fprintf(stderr, "trained on %zu crops, training accuracy %.3f\n", examples.size(),
                 static_cast<double>(correct) / examples.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Provident vehicle detection: light-artifact proposals, classification, distance and tracking"};
    app.set_config("--config", "", "TOML/INI file with option values; flags override it");
    app.require_subcommand(1);
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    Options o;

    auto* propose_cmd = app.add_subcommand("propose", "write proposal boxes");
    add_input_options(propose_cmd, o);
    add_proposer_options(propose_cmd, o);

    auto* detect_cmd = app.add_subcommand("detect", "proposals + classification");
    bool artifacts_only = false;
    add_input_options(detect_cmd, o);
    add_proposer_options(detect_cmd, o);
    add_classifier_options(detect_cmd, o);
    detect_cmd->add_flag("--artifacts-only", artifacts_only);

    auto* localize_cmd = app.add_subcommand("localize", "distance of each detected artifact");
    add_input_options(localize_cmd, o);
    add_proposer_options(localize_cmd, o);
    add_classifier_options(localize_cmd, o);
    add_localizer_options(localize_cmd, o);

    auto* track_cmd = app.add_subcommand("track", "full pipeline, writes the results file");
    std::string timings_path;
    add_input_options(track_cmd, o);
    add_proposer_options(track_cmd, o);
    add_classifier_options(track_cmd, o);
    add_localizer_options(track_cmd, o);
    add_tracker_options(track_cmd, o);
    track_cmd->add_option("--timings", timings_path, "also write the per-frame timing log");

    auto* eval_cmd = app.add_subcommand("evaluate", "proposal quality or detection delay");
    std::string what = "proposals";
    bool eval_json = false;
    add_input_options(eval_cmd, o);
    add_proposer_options(eval_cmd, o);
    add_classifier_options(eval_cmd, o);
    add_localizer_options(eval_cmd, o);
    add_tracker_options(eval_cmd, o);
    eval_cmd->add_option("--what", what, "proposals or delay")->capture_default_str();
    eval_cmd->add_flag("--json", eval_json);

    auto* tune_cmd = app.add_subcommand("tune", "search proposer parameters on train/val");
    OptimizeOptions tune_opts;
    std::string sampler = "tpe";
    int stride = 1;
    bool grid = false;
    add_input_options(tune_cmd, o);
    add_proposer_options(tune_cmd, o);
    tune_cmd->add_option("--budget", tune_opts.budget)->capture_default_str();
    tune_cmd->add_option("--seed", tune_opts.seed)->capture_default_str();
    tune_cmd->add_option("--sampler", sampler, "tpe or random")->capture_default_str();
    tune_cmd->add_option("--log", tune_opts.log_path, "trial log (JSON lines)");
    tune_cmd->add_option("--stride", stride, "use every n-th frame")->capture_default_str();
    tune_cmd->add_flag("--grid", grid, "also report the exhaustive grid minimum on val");

    auto* synth_cmd = app.add_subcommand("synth", "render a synthetic dataset");
    SyntheticSceneSpec spec;
    std::string synth_out;
    int width = 640, height = 480, sequences = 3;
    bool no_depth = false, no_vehicle = false;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--sequences", sequences)->capture_default_str();
    synth_cmd->add_option("--frames", spec.frames)->capture_default_str();
    synth_cmd->add_option("--direct-sight", spec.direct_sight_frame)->capture_default_str();
    synth_cmd->add_option("--lead", spec.indirect_lead, "frames of indirect light before direct sight")
        ->capture_default_str();
    synth_cmd->add_option("--width", width)->capture_default_str();
    synth_cmd->add_option("--height", height)->capture_default_str();
    synth_cmd->add_option("--noise", spec.noise)->capture_default_str();
    synth_cmd->add_option("--street-lights", spec.static_lights)->capture_default_str();
    synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
    synth_cmd->add_flag("--no-depth", no_depth);
    synth_cmd->add_flag("--no-vehicle", no_vehicle);

    auto* bench_cmd = app.add_subcommand("bench", "run-time statistics");
    std::string timings_in, timings_out;
    int bench_frames = 0;
    bool bench_json_out = false;
    int bench_w = 640, bench_h = 480;
    add_input_options(bench_cmd, o);
    add_proposer_options(bench_cmd, o);
    add_classifier_options(bench_cmd, o);
    add_localizer_options(bench_cmd, o);
    add_tracker_options(bench_cmd, o);
    bench_cmd->add_option("--timings", timings_in, "report on an existing timing log");
    bench_cmd->add_option("--save-timings", timings_out);
    bench_cmd->add_option("--synthetic", bench_frames, "render this many synthetic frames instead of a dataset");
    bench_cmd->add_option("--width", bench_w)->capture_default_str();
    bench_cmd->add_option("--height", bench_h)->capture_default_str();
    bench_cmd->add_flag("--json", bench_json_out);

    auto* overlay_cmd = app.add_subcommand("overlay", "PPM frames with proposals, detections, tracks and keypoints");
    std::string overlay_dir;
    add_input_options(overlay_cmd, o);
    add_proposer_options(overlay_cmd, o);
    add_classifier_options(overlay_cmd, o);
    add_localizer_options(overlay_cmd, o);
    add_tracker_options(overlay_cmd, o);
    overlay_cmd->add_option("--dir", overlay_dir, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "fit the baseline classifier");
    int synthetic_crops_n = 0;
    std::uint64_t train_seed = 1;
    add_input_options(train_cmd, o);
    add_proposer_options(train_cmd, o);
    train_cmd->add_option("--model", o.model, "output model file")->required();
    train_cmd->add_option("--enlargement", o.enlargement)->capture_default_str();
    train_cmd->add_option("--synthetic-crops", synthetic_crops_n, "add this many synthetic crops per class");
    train_cmd->add_option("--seed", train_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*propose_cmd) return cmd_propose(o);
        if (*detect_cmd) return cmd_detect(o, artifacts_only);
        if (*localize_cmd) return cmd_localize(o);
        if (*track_cmd) return cmd_track(o, timings_path);
        if (*eval_cmd) return cmd_evaluate(o, what, eval_json);
        if (*tune_cmd) return cmd_tune(o, tune_opts, sampler, stride, grid);
        if (*synth_cmd) {
            spec.vehicle = !no_vehicle;
            return cmd_synth(synth_out, spec, width, height, sequences, no_depth);
        }
        if (*bench_cmd) return cmd_bench(o, timings_in, timings_out, bench_frames, bench_w, bench_h, bench_json_out);
        if (*overlay_cmd) return cmd_overlay(o, overlay_dir);
        if (*train_cmd) return cmd_train(o, synthetic_crops_n, train_seed);
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 2;
}

#include "pvd/tune.hpp"

#include "pvd/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace pvd {

namespace {

constexpr int kWindowLevels = SearchSpace::kWindowMax - SearchSpace::kWindowMin + 1;
constexpr int kGapLevels = SearchSpace::kGapMax - SearchSpace::kGapMin + 1;
constexpr std::array<int, 4> kLevels{SearchSpace::kKappaLevels, kWindowLevels, SearchSpace::kMadLevels, kGapLevels};
constexpr std::array<bool, 4> kOrdinal{true, false, true, false};

using Levels = std::array<int, 4>;

Levels to_levels(const GridPoint& p) {
    return {p.kappa, p.window - SearchSpace::kWindowMin, p.mad, p.gap - SearchSpace::kGapMin};
}

GridPoint from_levels(const Levels& l) {
    return {l[0], l[1] + SearchSpace::kWindowMin, l[2], l[3] + SearchSpace::kGapMin};
}

double unit(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

int sample_pmf(const std::vector<double>& pmf, std::mt19937_64& rng) {
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(pmf.size()) - 1;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Level distribution of one dimension given the levels observed in a set.
std::vector<double> parzen_pmf(const std::vector<int>& obs, int levels, bool ordinal, double prior_weight) {
    std::vector<double> pmf(levels, prior_weight / levels);
    if (ordinal && !obs.empty()) {
        const double n = static_cast<double>(obs.size());
        const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / n;
        double var = 0.0;
        for (int o : obs) var += (o - mean) * (o - mean);
        const double sd = std::sqrt(var / n);
        const double sigma = std::clamp(1.06 * sd * std::pow(n, -0.2), 1.0, static_cast<double>(levels));
        for (int o : obs) {
            const double lo = normal_cdf((-0.5 - o) / sigma), hi = normal_cdf((levels - 0.5 - o) / sigma);
            for (int i = 0; i < levels; ++i)
                pmf[i] += (normal_cdf((i + 0.5 - o) / sigma) - normal_cdf((i - 0.5 - o) / sigma)) / (hi - lo);
        }
    } else {
        for (int o : obs) pmf[o] += 1.0;
    }
    const double total = obs.size() + prior_weight;
    for (double& p : pmf) p /= total;
    return pmf;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

bool SearchSpace::contains(const GridPoint& p) {
    return p.kappa >= 0 && p.kappa < kKappaLevels && p.window >= kWindowMin && p.window <= kWindowMax &&
           p.mad >= 0 && p.mad < kMadLevels && p.gap >= kGapMin && p.gap <= kGapMax;
}

std::size_t SearchSpace::size() {
    return static_cast<std::size_t>(kKappaLevels) * kWindowLevels * kMadLevels * kGapLevels;
}

GridPoint SearchSpace::at(std::size_t index) {
    if (index >= size()) throw std::out_of_range("grid index out of range");
    Levels l{};
    for (int d = 3; d >= 0; --d) {
        l[d] = static_cast<int>(index % kLevels[d]);
        index /= kLevels[d];
    }
    return from_levels(l);
}

std::size_t SearchSpace::index_of(const GridPoint& p) {
    if (!contains(p)) throw std::out_of_range("point outside the search space");
    const Levels l = to_levels(p);
    std::size_t index = 0;
    for (int d = 0; d < 4; ++d) index = index * kLevels[d] + l[d];
    return index;
}

GridPoint SearchSpace::quantize(const ProposerParams& params) {
    GridPoint p;
    p.kappa = std::clamp(static_cast<int>(std::lround((params.kappa - 0.25) / 0.05)), 0, kKappaLevels - 1);
    p.window = std::clamp(params.window, kWindowMin, kWindowMax);
    p.mad = std::clamp(static_cast<int>(std::lround(params.mad_threshold / 0.01)), 0, kMadLevels - 1);
    p.gap = std::clamp(params.gap, kGapMin, kGapMax);
    return p;
}

ProposerParams SearchSpace::params(const GridPoint& p, ProposerParams base) {
    if (!contains(p)) throw std::out_of_range("point outside the search space");
    base.kappa = kappa(p.kappa);
    base.window = p.window;
    base.mad_threshold = mad(p.mad);
    base.gap = p.gap;
    return base;
}

GridPoint random_suggest(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Levels l{};
    for (int d = 0; d < 4; ++d) l[d] = std::min(kLevels[d] - 1, static_cast<int>(unit(rng) * kLevels[d]));
    return from_levels(l);
}

GridPoint tpe_suggest(std::span<const Observation> history, std::uint64_t seed, const TpeOptions& options) {
    if (history.size() < static_cast<std::size_t>(std::max(options.startup, 1))) return random_suggest(seed);

    const std::size_t n = history.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return history[a].h < history[b].h; });
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(options.gamma * n)));
    const double tau = k < n ? history[order[k]].h : std::numeric_limits<double>::infinity();

    std::vector<bool> good(n, false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
        if (history[i].h < tau) good[i] = any = true;
    if (!any)
        for (std::size_t i = 0; i < k && i < n; ++i) good[order[i]] = true;

    std::array<std::vector<int>, 4> good_obs, bad_obs;
    for (std::size_t i = 0; i < n; ++i) {
        const Levels l = to_levels(history[i].point);
        for (int d = 0; d < 4; ++d) (good[i] ? good_obs : bad_obs)[d].push_back(l[d]);
    }
    std::array<std::vector<double>, 4> l_pmf, g_pmf;
    for (int d = 0; d < 4; ++d) {
        l_pmf[d] = parzen_pmf(good_obs[d], kLevels[d], kOrdinal[d], options.prior_weight);
        g_pmf[d] = parzen_pmf(bad_obs[d], kLevels[d], kOrdinal[d], options.prior_weight);
    }

    std::mt19937_64 rng(seed);
    Levels best{};
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < std::max(1, options.candidates); ++c) {
        Levels cand{};
        double score = 0.0;
        for (int d = 0; d < 4; ++d) {
            cand[d] = sample_pmf(l_pmf[d], rng);
            score += std::log(l_pmf[d][cand[d]]) - std::log(g_pmf[d][cand[d]]);
        }
        if (score > best_score) {
            best_score = score;
            best = cand;
        }
    }
    return from_levels(best);
}

double objective_from(const QualityReport& report) { return report.q ? 1.0 - *report.q : 1.0; }

ProposalObjective::ProposalObjective(const Dataset& dataset, Split split, int stride, ProposerParams base)
    : base_(base) {
    stride = std::max(1, stride);
    for (const Sequence* seq : dataset.split(split)) {
        for (std::size_t i = 0; i < seq->frames.size(); i += stride) {
            const FrameAnnotation& ann = seq->frames[i];
            const GrayImage img = read_pgm(seq->image_path(ann).string());
            frames_.push_back({preprocess(img, base_), img.width(), img.height(), ann.keypoints});
        }
    }
    if (frames_.empty()) throw InputError(std::string("split '") + to_string(split) + "' holds no frames");
}

EventCounts ProposalObjective::counts(const GridPoint& p) const {
    const ProposerParams params = SearchSpace::params(p, base_);
    EventCounts counts;
    for (const Frame& f : frames_) {
        const Mask mask = binarize(f.small, dynamic_threshold(f.small, params.kappa, params.window));
        std::vector<BBox> boxes = filter_boxes(f.small, blobs_to_boxes(mask, params.gap), params.mad_threshold);
        if (params.downscale != 1.0)
            for (BBox& b : boxes) b = upscale_box(b, params.downscale, f.width, f.height);
        counts.add(score_frame(boxes, f.keypoints));
    }
    return counts;
}

double ProposalObjective::h(const GridPoint& p) {
    if (!grid_.empty()) return grid_[SearchSpace::index_of(p)];
    if (auto it = memo_.find(p); it != memo_.end()) return it->second;
    const double value = objective_from(quality(counts(p)));
    memo_.emplace(p, value);
    return value;
}

const std::vector<double>& ProposalObjective::grid() {
    if (!grid_.empty()) return grid_;
    std::vector<double> out(SearchSpace::size(), 1.0);
    for (int ki = 0; ki < SearchSpace::kKappaLevels; ++ki) {
        for (int w = SearchSpace::kWindowMin; w <= SearchSpace::kWindowMax; ++w) {
            std::array<std::array<EventCounts, SearchSpace::kMadLevels>, kGapLevels> acc{};
            for (const Frame& f : frames_) {
                const Mask mask = binarize(f.small, dynamic_threshold(f.small, SearchSpace::kappa(ki), w));
                for (int gap = SearchSpace::kGapMin; gap <= SearchSpace::kGapMax; ++gap) {
                    const std::vector<BBox> blobs = blobs_to_boxes(mask, gap);
                    std::vector<double> mads;
                    std::vector<BBox> full;
                    for (const BBox& b : blobs) {
                        mads.push_back(box_mad(f.small, b));
                        full.push_back(base_.downscale != 1.0 ? upscale_box(b, base_.downscale, f.width, f.height) : b);
                    }
                    for (int si = 0; si < SearchSpace::kMadLevels; ++si) {
                        std::vector<BBox> kept;
                        for (std::size_t i = 0; i < blobs.size(); ++i)
                            if (mads[i] >= SearchSpace::mad(si)) kept.push_back(full[i]);
                        acc[gap - SearchSpace::kGapMin][si].add(score_frame(kept, f.keypoints));
                    }
                }
            }
            for (int gap = SearchSpace::kGapMin; gap <= SearchSpace::kGapMax; ++gap)
                for (int si = 0; si < SearchSpace::kMadLevels; ++si)
                    out[SearchSpace::index_of({ki, w, si, gap})] =
                        objective_from(quality(acc[gap - SearchSpace::kGapMin][si]));
        }
    }
    grid_ = std::move(out);
    return grid_;
}

const char* to_string(Sampler s) { return s == Sampler::Tpe ? "tpe" : "random"; }

Sampler parse_sampler(const std::string& s) {
    if (s == "tpe") return Sampler::Tpe;
    if (s == "random") return Sampler::Random;
    throw InputError("unknown sampler '" + s + "' (expected tpe or random)");
}

std::string trial_json(const Trial& t, Sampler sampler) {
    const ProposerParams p = SearchSpace::params(t.point);
    nlohmann::json j{{"trial", t.number},       {"sampler", to_string(sampler)}, {"kappa", p.kappa},
                     {"window", p.window},      {"mad_threshold", p.mad_threshold}, {"gap", p.gap},
                     {"train_h", t.train_h},    {"val_h", t.val_h},             {"timestamp", t.timestamp}};
    return j.dump();
}

OptimizeResult optimize(ProposalObjective& train, ProposalObjective& val, ProposalObjective* test,
                        const OptimizeOptions& options) {
    if (options.budget < 1) throw InputError("budget must be at least 1");
    std::ofstream log;
    if (!options.log_path.empty()) {
        log.open(options.log_path, std::ios::app);
        if (!log) throw InputError("cannot append to " + options.log_path);
    }
    OptimizeResult result;
    std::vector<Observation> history;
    for (int i = 0; i < options.budget; ++i) {
        const std::uint64_t seed = mix_seed(options.seed, static_cast<std::uint64_t>(i));
        Trial t;
        t.number = i;
        t.point = options.sampler == Sampler::Tpe ? tpe_suggest(history, seed, options.tpe) : random_suggest(seed);
        t.train_h = train.h(t.point);
        t.val_h = val.h(t.point);
        t.timestamp = utc_timestamp();
        history.push_back({t.point, t.train_h});
        if (result.trials.empty() || t.val_h < result.trials[result.best].val_h) result.best = result.trials.size();
        result.trials.push_back(t);
        result.best_val_so_far.push_back(result.trials[result.best].val_h);
        if (log) log << trial_json(t, options.sampler) << '\n' << std::flush;
    }
    result.best_params = SearchSpace::params(result.trials[result.best].point, train.base());
    if (test) result.test = quality(test->counts(result.trials[result.best].point));
    return result;
}

}  // namespace pvd

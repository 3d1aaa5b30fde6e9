#pragma once

#include "pvd/dataset.hpp"
#include "pvd/eval.hpp"
#include "pvd/proposer.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvd {

/// A point of the quantized search grid, stored as level indices:
/// kappa = 0.25 + 0.05 * kappa, window in 5..25, mad_threshold = 0.01 * mad, gap in 1..9.
struct GridPoint {
    int kappa = 3;
    int window = 19;
    int mad = 1;
    int gap = 4;

    auto operator<=>(const GridPoint&) const = default;
};

struct SearchSpace {
    static constexpr int kKappaLevels = 11;
    static constexpr int kMadLevels = 11;
    static constexpr int kWindowMin = ProposerParams::kWindowMin, kWindowMax = ProposerParams::kWindowMax;
    static constexpr int kGapMin = ProposerParams::kGapMin, kGapMax = ProposerParams::kGapMax;

    static double kappa(int level) { return (25 + 5 * level) / 100.0; }
    static double mad(int level) { return level / 100.0; }

    static bool contains(const GridPoint& p);
    static std::size_t size();
    static GridPoint at(std::size_t index);
    static std::size_t index_of(const GridPoint& p);
    /// Nearest grid point, clamped into the bounds.
    static GridPoint quantize(const ProposerParams& params);
    /// Replaces the four tuned fields of `base`.
    static ProposerParams params(const GridPoint& p, ProposerParams base = {});
};

struct Observation {
    GridPoint point;
    double h = 1.0;
};

struct TpeOptions {
    double gamma = 0.25;   ///< fraction of the history forming the good set
    int startup = 10;      ///< random suggestions before the model is used
    int candidates = 24;   ///< samples drawn from the good model per suggestion
    double prior_weight = 1.0;
};

GridPoint random_suggest(std::uint64_t seed);

/// Tree-structured Parzen estimator over the grid. kappa and mad levels use
/// Gaussian kernels integrated over their level bins, window and gap are
/// categorical. Deterministic in (history, seed).
GridPoint tpe_suggest(std::span<const Observation> history, std::uint64_t seed, const TpeOptions& options = {});

/// h = 1 - q, or 1 when q is undefined.
double objective_from(const QualityReport& report);

/// Proposal quality over one split. Frames are preprocessed once and results
/// are memoized per grid point.
class ProposalObjective {
public:
    /// Throws InputError when the split holds no frames. Every `stride`-th frame is used.
    ProposalObjective(const Dataset& dataset, Split split, int stride = 1, ProposerParams base = {});

    EventCounts counts(const GridPoint& p) const;
    double h(const GridPoint& p);
    /// Evaluates the whole grid (sharing work between points) and returns h by grid index.
    const std::vector<double>& grid();

    std::size_t frames() const { return frames_.size(); }
    const ProposerParams& base() const { return base_; }

private:
    struct Frame {
        GrayImage small;
        int width = 0;
        int height = 0;
        std::vector<Keypoint> keypoints;
    };
    ProposerParams base_;
    std::vector<Frame> frames_;
    std::map<GridPoint, double> memo_;
    std::vector<double> grid_;
};

enum class Sampler { Tpe, Random };
const char* to_string(Sampler s);
Sampler parse_sampler(const std::string& s);

struct Trial {
    int number = 0;
    GridPoint point;
    double train_h = 1.0;
    double val_h = 1.0;
    std::string timestamp;
};

struct OptimizeOptions {
    int budget = 100;
    std::uint64_t seed = 1;
    Sampler sampler = Sampler::Tpe;
    TpeOptions tpe;
    std::string log_path;  ///< JSON-lines trial log, appended; empty disables
};

struct OptimizeResult {
    std::vector<Trial> trials;
    std::size_t best = 0;                  ///< trial with the lowest validation h (first on ties)
    std::vector<double> best_val_so_far;   ///< per trial
    ProposerParams best_params;
    std::optional<QualityReport> test;     ///< test-split metrics of the best params
};

/// The sampler is driven by the training objective; the validation objective
/// selects the result.
OptimizeResult optimize(ProposalObjective& train, ProposalObjective& val, ProposalObjective* test,
                        const OptimizeOptions& options);

std::string trial_json(const Trial& trial, Sampler sampler);

}  // namespace pvd

#pragma once

#include "pvd/geometry.hpp"
#include "pvd/image.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pvd {

inline constexpr double kDefaultConfidenceThreshold = 0.5;
inline constexpr double kDefaultEnlargement = 1.5;

struct ScoredBox {
    BBox box;
    double score = 0.0;
    bool is_artifact = false;
    /// Set when the model failed on this box; score is 0 and the box is not an artifact.
    std::optional<std::string> error;
};

/// Scores a context crop (the enlarged proposal region at native resolution).
/// Implementations must be deterministic and return a value in [0,1].
class ProposalClassifier {
public:
    virtual ~ProposalClassifier() = default;
    virtual double classify(const GrayImage& crop) const = 0;
};

/// Scales a box about its center and clips it to [0, width-1] x [0, height-1].
BBox enlarge(const BBox& box, double factor, int width, int height);

/// Copies the pixels covered by the box (rounded outward) into a new image.
GrayImage crop(const GrayImage& img, const BBox& box);

/// Bilinear resample to a fixed size.
GrayImage resample(const GrayImage& img, int width, int height);

/// One result per box, in input order. A throwing model marks that box failed
/// and the remaining boxes are still classified.
std::vector<ScoredBox> classify_proposals(const GrayImage& img, const std::vector<BBox>& boxes,
                                          const ProposalClassifier& model,
                                          double threshold = kDefaultConfidenceThreshold,
                                          double enlargement = kDefaultEnlargement);

/// Hand-crafted crop descriptors used by the baseline model.
struct CropFeatures {
    static constexpr int kCount = 6;
    static constexpr int kInputSize = 32;
    std::array<double, kCount> values{};
};

/// Features of a crop whose central 1/enlargement portion is the proposal:
/// peak intensity, mean absolute deviation, intensity-centroid offset from the
/// center, |log aspect ratio|, inner-minus-ring contrast, and peak-to-ring ratio.
CropFeatures extract_features(const GrayImage& crop, double enlargement = kDefaultEnlargement);

struct LabeledCrop {
    GrayImage crop;
    bool positive = false;
};

struct TrainingOptions {
    std::uint64_t seed = 1;
    int epochs = 400;
    int batch_size = 32;
    double learning_rate = 0.2;
    double l2 = 1e-4;
};

/// Logistic regression over standardized CropFeatures.
class BaselineModel final : public ProposalClassifier {
public:
    BaselineModel() = default;

    /// Throws InputError unless both classes are present.
    static BaselineModel train(const std::vector<LabeledCrop>& examples, const TrainingOptions& options = {},
                               double enlargement = kDefaultEnlargement);

    double classify(const GrayImage& crop) const override;
    double score_features(const CropFeatures& features) const;

    /// Text format, see save().
    static BaselineModel load(const std::string& path);

    /// Layout:
    ///   pvd-baseline-classifier v1
    ///   enlargement <hex double>
    ///   mean <6 hex doubles>
    ///   scale <6 hex doubles>
    ///   weights <6 hex doubles>
    ///   bias <hex double>
    /// Values are printed as C99 hexadecimal floats so a load restores them bit-exact.
    void save(const std::string& path) const;

    double enlargement() const { return enlargement_; }
    bool operator==(const BaselineModel& o) const {
        return enlargement_ == o.enlargement_ && mean_ == o.mean_ && scale_ == o.scale_ && weights_ == o.weights_ &&
               bias_ == o.bias_;
    }

private:
    double enlargement_ = kDefaultEnlargement;
    std::array<double, CropFeatures::kCount> mean_{};
    std::array<double, CropFeatures::kCount> scale_{1, 1, 1, 1, 1, 1};
    std::array<double, CropFeatures::kCount> weights_{};
    double bias_ = 0.0;
};

/// Scores 1 when the crop holds a saturated pixel, else 0. Stands in for a
/// detector that only reacts to direct light sources.
class SaturationClassifier final : public ProposalClassifier {
public:
    explicit SaturationClassifier(double level = 0.9) : level_(level) {}
    double classify(const GrayImage& crop) const override;

private:
    double level_;
};

}  // namespace pvd

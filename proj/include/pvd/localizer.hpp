#pragma once

#include "pvd/geometry.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace pvd {

/// No usable 3-D position (ray misses the ground, empty road, ...).
class LocalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LocalizationMethod { GroundPlane, Road3D, Road2D };
enum class Aggregation { Center, Max, Min, Lowest, Mean, Median };

const char* to_string(LocalizationMethod m);
const char* to_string(Aggregation a);
LocalizationMethod parse_method(const std::string& s);   // "gp", "psd3d", "psd2d"
Aggregation parse_aggregation(const std::string& s);     // "center", "max", "min", "lowest", "mean", "median"

struct DistanceEstimate {
    Vec3 point = Vec3::Zero();
    double distance = 0.0;  ///< Euclidean norm of point
    LocalizationMethod method = LocalizationMethod::GroundPlane;
};

/// Intersection with z = 0, i.e. x(-a_z / n_z). Empty when the ray does not
/// descend or meets the ground behind its origin.
std::optional<DistanceEstimate> try_gp_intersect(const Ray& ray);
/// Throwing variant of try_gp_intersect.
DistanceEstimate gp_intersect(const Ray& ray);

/// |(p - a) x n| / |n|
double ray_point_distance(const Ray& ray, const Vec3& p);

/// Road point nearest to the ray; ties go to the lower index.
DistanceEstimate psd3d_locate(const Ray& ray, const RoadPath& road);
/// As psd3d_locate but ignoring elevation; the returned point keeps its z.
DistanceEstimate psd2d_locate(const Ray& ray, const RoadPath& road);

struct LocalizerConfig {
    LocalizationMethod method = LocalizationMethod::GroundPlane;
    Aggregation aggregation = Aggregation::Center;
    int subsample = 2;  ///< pixel stride inside a box for per-pixel heuristics
};

/// Single-ray estimate with the configured method.
std::optional<DistanceEstimate> try_locate_pixel(const CameraModel& cam, double x, double y,
                                                 LocalizationMethod method, const RoadPath* road);

/// Reduces per-pixel estimates inside a box. Center uses the box center pixel,
/// Lowest the bottom-center pixel; the others scan the box on a `subsample`
/// grid that always includes the last row and column. Throws
/// LocalizationError when no pixel yields an estimate.
DistanceEstimate aggregate_box(const BBox& box, const CameraModel& cam, const LocalizerConfig& config,
                               const RoadPath* road = nullptr);

/// Plain reductions used by aggregate_box; `values` must be non-empty.
double reduce(std::span<const double> values, Aggregation how);

enum class SeriesMode { Mean, Median };

inline constexpr std::size_t kMaxSeriesLength = 5;

/// Mean or median of up to five consecutive estimates; throws on an empty series.
double smooth_series(std::span<const double> estimates, SeriesMode mode);

}  // namespace pvd

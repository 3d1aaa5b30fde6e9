#include "pvd/localizer.hpp"

#include "pvd/image.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace pvd {

const char* to_string(LocalizationMethod m) {
    switch (m) {
        case LocalizationMethod::GroundPlane: return "gp";
        case LocalizationMethod::Road3D: return "psd3d";
        case LocalizationMethod::Road2D: return "psd2d";
    }
    return "?";
}

const char* to_string(Aggregation a) {
    switch (a) {
        case Aggregation::Center: return "center";
        case Aggregation::Max: return "max";
        case Aggregation::Min: return "min";
        case Aggregation::Lowest: return "lowest";
        case Aggregation::Mean: return "mean";
        case Aggregation::Median: return "median";
    }
    return "?";
}

LocalizationMethod parse_method(const std::string& s) {
    if (s == "gp") return LocalizationMethod::GroundPlane;
    if (s == "psd3d") return LocalizationMethod::Road3D;
    if (s == "psd2d") return LocalizationMethod::Road2D;
    throw InputError("unknown localization method '" + s + "' (gp, psd3d, psd2d)");
}

Aggregation parse_aggregation(const std::string& s) {
    for (Aggregation a : {Aggregation::Center, Aggregation::Max, Aggregation::Min, Aggregation::Lowest,
                          Aggregation::Mean, Aggregation::Median})
        if (s == to_string(a)) return a;
    throw InputError("unknown aggregation '" + s + "' (center, max, min, lowest, mean, median)");
}

std::optional<DistanceEstimate> try_gp_intersect(const Ray& ray) {
    const double nz = ray.direction.z();
    if (!(nz < 0.0)) return std::nullopt;
    const double t = -ray.origin.z() / nz;
    if (!(t > 0.0) || !std::isfinite(t)) return std::nullopt;
    Vec3 p = ray.at(t);
    p.z() = 0.0;
    return DistanceEstimate{p, p.norm(), LocalizationMethod::GroundPlane};
}

DistanceEstimate gp_intersect(const Ray& ray) {
    if (auto est = try_gp_intersect(ray)) return *est;
    throw LocalizationError("camera ray does not intersect the ground plane in front of the camera");
}

double ray_point_distance(const Ray& ray, const Vec3& p) {
    return (p - ray.origin).cross(ray.direction).norm() / ray.direction.norm();
}

namespace {

DistanceEstimate road_argmin(const Ray& ray, const RoadPath& road, bool flatten, LocalizationMethod method) {
    if (road.points.empty()) throw LocalizationError("road path is empty");
    Ray r = ray;
    if (flatten) {
        r.origin.z() = 0.0;
        r.direction.z() = 0.0;
        if (r.direction.norm() == 0.0) throw LocalizationError("vertical ray has no planar direction");
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < road.points.size(); ++i) {
        Vec3 p = road.points[i];
        if (flatten) p.z() = 0.0;
        const double d = ray_point_distance(r, p);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    const Vec3& p = road.points[best];
    return DistanceEstimate{p, p.norm(), method};
}

}  // namespace

DistanceEstimate psd3d_locate(const Ray& ray, const RoadPath& road) {
    return road_argmin(ray, road, false, LocalizationMethod::Road3D);
}

DistanceEstimate psd2d_locate(const Ray& ray, const RoadPath& road) {
    return road_argmin(ray, road, true, LocalizationMethod::Road2D);
}

std::optional<DistanceEstimate> try_locate_pixel(const CameraModel& cam, double x, double y,
                                                 LocalizationMethod method, const RoadPath* road) {
    const Ray ray = pixel_to_ray(cam, x, y);
    switch (method) {
        case LocalizationMethod::GroundPlane: return try_gp_intersect(ray);
        case LocalizationMethod::Road3D:
        case LocalizationMethod::Road2D:
            if (road == nullptr || road->points.empty()) return std::nullopt;
            return method == LocalizationMethod::Road3D ? psd3d_locate(ray, *road) : psd2d_locate(ray, *road);
    }
    return std::nullopt;
}

double reduce(std::span<const double> values, Aggregation how) {
    if (values.empty()) throw std::invalid_argument("reduce: no values");
    switch (how) {
        case Aggregation::Max: return *std::max_element(values.begin(), values.end());
        case Aggregation::Min: return *std::min_element(values.begin(), values.end());
        case Aggregation::Mean: return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
        case Aggregation::Median: {
            std::vector<double> v(values.begin(), values.end());
            std::sort(v.begin(), v.end());
            const std::size_t mid = v.size() / 2;
            return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
        }
        case Aggregation::Center:
        case Aggregation::Lowest: return values.front();
    }
    return values.front();
}

DistanceEstimate aggregate_box(const BBox& box, const CameraModel& cam, const LocalizerConfig& config,
                               const RoadPath* road) {
    const auto single = [&](double x, double y) {
        if (auto est = try_locate_pixel(cam, x, y, config.method, road)) return *est;
        throw LocalizationError("box reference pixel has no distance estimate");
    };
    const double cx = std::round(box.center_x());
    switch (config.aggregation) {
        case Aggregation::Center: return single(cx, std::round(box.center_y()));
        case Aggregation::Lowest: return single(cx, std::round(box.y_max));
        default: break;
    }

    const int x0 = static_cast<int>(std::round(box.x_min)), x1 = static_cast<int>(std::round(box.x_max));
    const int y0 = static_cast<int>(std::round(box.y_min)), y1 = static_cast<int>(std::round(box.y_max));
    const int step = std::max(1, config.subsample);
    const auto grid = [step](int lo, int hi) {
        std::vector<int> v;
        for (int i = lo; i <= hi; i += step) v.push_back(i);
        if (v.back() != hi) v.push_back(hi);
        return v;
    };
    std::vector<DistanceEstimate> estimates;
    for (int y : grid(y0, y1))
        for (int x : grid(x0, x1))
            if (auto est = try_locate_pixel(cam, x, y, config.method, road)) estimates.push_back(*est);
    if (estimates.empty()) throw LocalizationError("no pixel in the box yields a distance estimate");

    std::vector<double> d(estimates.size());
    std::transform(estimates.begin(), estimates.end(), d.begin(), [](const auto& e) { return e.distance; });
    const double value = reduce(d, config.aggregation);
    // Report the point of the pixel whose distance is closest to the reduced value,
    // rescaled so its norm equals that value.
    const auto nearest = std::min_element(estimates.begin(), estimates.end(), [value](const auto& a, const auto& b) {
        return std::abs(a.distance - value) < std::abs(b.distance - value);
    });
    DistanceEstimate out = *nearest;
    if (out.distance > 0.0) out.point *= value / out.distance;
    out.distance = value;
    return out;
}

double smooth_series(std::span<const double> estimates, SeriesMode mode) {
    if (estimates.empty()) throw std::invalid_argument("smooth_series: empty series");
    if (estimates.size() > kMaxSeriesLength) throw std::invalid_argument("smooth_series: more than five estimates");
    return reduce(estimates, mode == SeriesMode::Mean ? Aggregation::Mean : Aggregation::Median);
}

}  // namespace pvd

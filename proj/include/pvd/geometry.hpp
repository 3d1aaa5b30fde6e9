#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace pvd {

// Vehicle frame: x forward, y left, z up, origin on the ground below the
// reference point; the ground plane is z = 0. Every 3-D quantity in this
// library is expressed in that frame, in meters.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pixel-space rectangle with inclusive edges. The box covers the pixel cells
/// x_min..x_max and y_min..y_max, so a single-pixel box has area 1. Coordinates
/// are real-valued because tracked boxes are filtered estimates.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min + 1.0; }
    double height() const { return y_max - y_min + 1.0; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x_min + x_max); }
    double center_y() const { return 0.5 * (y_min + y_max); }

    bool valid() const { return x_min <= x_max && y_min <= y_max; }
    /// Border points count as covered.
    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }

    bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

enum class LightKind { Direct, Indirect };

struct Keypoint {
    int x = 0;
    int y = 0;
    int vehicle_id = 0;
    LightKind kind = LightKind::Indirect;

    bool operator==(const Keypoint&) const = default;
};

const char* to_string(LightKind kind);
LightKind parse_light_kind(const std::string& s);

/// x(t) = origin + t * direction.
struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitX();

    Vec3 at(double t) const { return origin + t * direction; }
};

/// Ordered polyline of the road ahead, sampled every meter.
struct RoadPath {
    std::vector<Vec3> points;

    static constexpr double kSpacing = 1.0;
    static constexpr double kSpacingTolerance = 0.01;

    /// Throws InputError when consecutive spacing leaves 1 m +- 1 cm.
    void validate() const;
};

/// Reads "x y z" triples, one per line; '#' starts a comment.
RoadPath read_road_path(const std::string& path);
void write_road_path(const std::string& path, const RoadPath& road);

/// Resamples an arbitrary polyline at 1 m arc-length steps.
RoadPath resample_road(const std::vector<Vec3>& polyline);

/// Pinhole camera without distortion.
///
/// The extrinsic rotation maps the camera body frame into the vehicle frame;
/// the body frame shares the vehicle axes when the rotation is identity, so an
/// identity pose looks straight ahead along +x. Optical axes (x right, y down,
/// z forward) are mapped onto the body frame by a fixed permutation.
struct CameraModel {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 640.0;
    double cy = 480.0;
    int width = 1280;
    int height = 960;
    Mat3 rotation = Mat3::Identity();
    Vec3 position = Vec3::Zero();

    /// Rotation from roll/pitch/yaw in radians, R = Rz(yaw) Ry(pitch) Rx(roll).
    /// Positive pitch tilts the optical axis towards the ground.
    static Mat3 rotation_from_rpy(double roll, double pitch, double yaw);

    void validate() const;

    /// Camera-to-vehicle rotation for optical-frame vectors.
    Mat3 optical_to_vehicle() const;

    /// Pixel coordinates of a vehicle-frame point; empty when behind the camera.
    std::optional<Eigen::Vector2d> project(const Vec3& point) const;
};

/// Back-projects a pixel (integer coordinates address pixel centers) into a
/// unit-direction ray starting at the camera center.
Ray pixel_to_ray(const CameraModel& cam, double x, double y);

/// Plain-text calibration: "key = value" lines with keys fx, fy, cx, cy,
/// width, height (pixels), x, y, z (camera position, m), roll, pitch, yaw (deg).
CameraModel read_camera(const std::string& path);
void write_camera(const std::string& path, const CameraModel& cam);

}  // namespace pvd

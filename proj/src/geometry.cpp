#include "pvd/geometry.hpp"

#include "pvd/image.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace pvd {

double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x_max + 1.0, b.x_max + 1.0) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max + 1.0, b.y_max + 1.0) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

const char* to_string(LightKind kind) { return kind == LightKind::Direct ? "direct" : "indirect"; }

LightKind parse_light_kind(const std::string& s) {
    if (s == "direct") return LightKind::Direct;
    if (s == "indirect") return LightKind::Indirect;
    throw InputError("unknown light kind '" + s + "'");
}

void RoadPath::validate() const {
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double step = (points[i] - points[i - 1]).norm();
        if (std::abs(step - kSpacing) > kSpacingTolerance) {
            std::ostringstream msg;
            msg << "road point " << i << " is " << step << " m from its predecessor (expected 1 m)";
            throw InputError(msg.str());
        }
    }
}

RoadPath read_road_path(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open");
    RoadPath road;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double x, y, z;
        if (!(ss >> x)) continue;
        if (!(ss >> y >> z)) throw InputError(path + ":" + std::to_string(lineno) + ": expected 'x y z'");
        road.points.emplace_back(x, y, z);
    }
    road.validate();
    return road;
}

void write_road_path(const std::string& path, const RoadPath& road) {
    std::ofstream out(path);
    if (!out) throw InputError(path + ": cannot open for writing");
    out.precision(17);
    for (const Vec3& p : road.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

RoadPath resample_road(const std::vector<Vec3>& polyline) {
    RoadPath road;
    if (polyline.empty()) return road;
    road.points.push_back(polyline.front());
    // Walk the polyline, emitting a point whenever the chord from the last
    // emitted point reaches 1 m (chord, not arc, so spacing is exact).
    std::size_t seg = 0;
    double t = 0.0;
    while (seg + 1 < polyline.size()) {
        const Vec3 last = road.points.back();
        const Vec3 a = polyline[seg];
        const Vec3 b = polyline[seg + 1];
        const Vec3 ab = b - a;
        // Solve |a + u*ab - last| = 1 for the smallest u >= t.
        const Vec3 d = a - last;
        const double qa = ab.squaredNorm();
        const double qb = 2.0 * d.dot(ab);
        const double qc = d.squaredNorm() - RoadPath::kSpacing * RoadPath::kSpacing;
        const double disc = qb * qb - 4.0 * qa * qc;
        bool emitted = false;
        if (qa > 0.0 && disc >= 0.0) {
            const double u = (-qb + std::sqrt(disc)) / (2.0 * qa);
            if (u >= t && u <= 1.0) {
                road.points.push_back(a + u * ab);
                t = u;
                emitted = true;
            }
        }
        if (!emitted) {
            ++seg;
            t = 0.0;
        }
    }
    return road;
}

Mat3 CameraModel::rotation_from_rpy(double roll, double pitch, double yaw) {
    return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
            Eigen::AngleAxisd(roll, Vec3::UnitX()))
        .toRotationMatrix();
}

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InputError("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InputError("camera image size must be positive");
    if ((rotation.transpose() * rotation - Mat3::Identity()).norm() >= 1e-9)
        throw InputError("camera rotation is not orthonormal");
}

Mat3 CameraModel::optical_to_vehicle() const {
    // optical x (right) -> -y, optical y (down) -> -z, optical z (forward) -> +x
    Mat3 perm;
    perm << 0, 0, 1,
           -1, 0, 0,
            0, -1, 0;
    return rotation * perm;
}

std::optional<Eigen::Vector2d> CameraModel::project(const Vec3& point) const {
    const Vec3 optical = optical_to_vehicle().transpose() * (point - position);
    if (optical.z() <= 0.0) return std::nullopt;
    return Eigen::Vector2d(cx + fx * optical.x() / optical.z(), cy + fy * optical.y() / optical.z());
}

Ray pixel_to_ray(const CameraModel& cam, double x, double y) {
    const Vec3 optical((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
    return Ray{cam.position, (cam.optical_to_vehicle() * optical).normalized()};
}

CameraModel read_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open");
    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw InputError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        std::istringstream key_ss(line.substr(0, eq)), val_ss(line.substr(eq + 1));
        std::string key;
        double value;
        if (!(key_ss >> key) || !(val_ss >> value))
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed entry");
        kv[key] = value;
    }
    static const char* kRequired[] = {"fx", "fy", "cx", "cy", "width", "height", "x", "y", "z"};
    for (const char* key : kRequired)
        if (!kv.count(key)) throw InputError(path + ": missing key '" + key + "'");
    const auto get = [&](const char* key) { return kv.count(key) ? kv.at(key) : 0.0; };
    constexpr double deg = std::numbers::pi / 180.0;
    CameraModel cam;
    cam.fx = get("fx");
    cam.fy = get("fy");
    cam.cx = get("cx");
    cam.cy = get("cy");
    cam.width = static_cast<int>(get("width"));
    cam.height = static_cast<int>(get("height"));
    cam.position = Vec3(get("x"), get("y"), get("z"));
    cam.rotation = CameraModel::rotation_from_rpy(get("roll") * deg, get("pitch") * deg, get("yaw") * deg);
    cam.validate();
    return cam;
}

void write_camera(const std::string& path, const CameraModel& cam) {
    std::ofstream out(path);
    if (!out) throw InputError(path + ": cannot open for writing");
    // Recover roll/pitch/yaw from R = Rz Ry Rx.
    const Mat3& r = cam.rotation;
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    constexpr double rad = 180.0 / std::numbers::pi;
    out.precision(17);
    out << "fx = " << cam.fx << "\nfy = " << cam.fy << "\ncx = " << cam.cx << "\ncy = " << cam.cy
        << "\nwidth = " << cam.width << "\nheight = " << cam.height << "\nx = " << cam.position.x()
        << "\ny = " << cam.position.y() << "\nz = " << cam.position.z() << "\nroll = " << roll * rad
        << "\npitch = " << pitch * rad << "\nyaw = " << yaw * rad << '\n';
}

}  // namespace pvd

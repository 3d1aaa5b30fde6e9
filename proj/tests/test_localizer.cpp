#include <doctest.h>

#include "oracles.hpp"
#include "pvd/localizer.hpp"
#include "pvd/proposer.hpp"
#include "pvd/synth.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace pvd;

namespace {

RoadPath straight_road(int n, double z = 0.0) {
    RoadPath r;
    for (int i = 0; i < n; ++i) r.points.emplace_back(i, 0.0, z);
    return r;
}

}  // namespace

TEST_CASE("gp_intersect") {
    SUBCASE("similar triangles") {
        const DistanceEstimate e = gp_intersect(Ray{Vec3(0, 0, 1.5), Vec3(1, 0, -0.015)});
        CHECK((e.point - Vec3(100, 0, 0)).norm() < 1e-9);
        CHECK(e.distance == doctest::Approx(100.0));
        CHECK(e.method == LocalizationMethod::GroundPlane);
    }
    SUBCASE("horizontal, upward and backward rays miss") {
        CHECK_THROWS_AS(gp_intersect(Ray{Vec3(0, 0, 1.5), Vec3(1, 0, 0)}), LocalizationError);
        CHECK_THROWS_AS(gp_intersect(Ray{Vec3(0, 0, 1.5), Vec3(1, 0, 0.1)}), LocalizationError);
        CHECK_THROWS_AS(gp_intersect(Ray{Vec3(0, 0, -1.0), Vec3(1, 0, -0.1)}), LocalizationError);
    }
    SUBCASE("result lies on the ray at z = 0") {
        std::mt19937_64 rng(8);
        for (int i = 0; i < 500; ++i) {
            const Ray r = oracle::random_ray(rng);
            if (auto e = try_gp_intersect(r)) {
                CHECK(e->point.z() == 0.0);
                CHECK(oracle::point_line(r.origin, r.direction, e->point) < 1e-9);
                CHECK(e->distance == doctest::Approx(e->point.norm()));
            }
        }
    }
    SUBCASE("projection round trip through the camera") {
        const CameraModel cam = SyntheticSceneSpec::default_camera(1280, 960);
        std::mt19937_64 rng(12);
        std::uniform_real_distribution<double> fwd(5, 400), lat(-20, 20);
        int checked = 0;
        for (int i = 0; i < 1000; ++i) {
            const Vec3 p(fwd(rng), lat(rng), 0.0);
            const auto px = cam.project(p);
            REQUIRE(px.has_value());
            const auto e = try_gp_intersect(pixel_to_ray(cam, px->x(), px->y()));
            REQUIRE(e.has_value());
            CHECK((e->point - p).norm() < 1e-6);
            ++checked;
        }
        CHECK(checked == 1000);
    }
}

TEST_CASE("ray_point_distance") {
    const Ray r{Vec3::Zero(), Vec3(1, 0, 0)};
    CHECK(ray_point_distance(r, Vec3(0, 3, 4)) == doctest::Approx(5.0));
    CHECK(ray_point_distance(r, Vec3(17, 0, 0)) == 0.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 500; ++i) {
        const Ray q{Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng) + 0.1)};
        const Vec3 p(u(rng), u(rng), u(rng));
        CHECK(ray_point_distance(q, p) == doctest::Approx(oracle::point_line(q.origin, q.direction, p)).epsilon(1e-9));
    }
}

TEST_CASE("road localization") {
    SUBCASE("ray through the 50 m sample") {
        const RoadPath road = straight_road(200);
        const Vec3 cam(0, 0, 1.3);
        const DistanceEstimate e = psd3d_locate(Ray{cam, Vec3(50, 0, 0) - cam}, road);
        CHECK(e.point == Vec3(50, 0, 0));
        CHECK(e.distance == 50.0);
        CHECK(e.method == LocalizationMethod::Road3D);
    }
    SUBCASE("single point road") {
        const RoadPath road{{Vec3(12, 3, 0.5)}};
        CHECK(psd3d_locate(Ray{Vec3(0, 0, 1), Vec3(0, 1, 0)}, road).point == road.points[0]);
        CHECK(psd2d_locate(Ray{Vec3(0, 0, 1), Vec3(1, -1, 0)}, road).point == road.points[0]);
    }
    SUBCASE("empty road") {
        CHECK_THROWS_AS(psd3d_locate(Ray{}, RoadPath{}), LocalizationError);
        CHECK_THROWS_AS(psd2d_locate(Ray{}, RoadPath{}), LocalizationError);
    }
    SUBCASE("ties go to the nearer point") {
        const RoadPath road{{Vec3(10, 1, 0), Vec3(20, 1, 0), Vec3(30, -1, 0)}};
        CHECK(psd3d_locate(Ray{Vec3::Zero(), Vec3(1, 0, 0)}, road).point == road.points[0]);
    }
    SUBCASE("exhaustive oracle on random roads") {
        std::mt19937_64 rng(200);
        for (int i = 0; i < 100; ++i) {
            const RoadPath road = oracle::random_road(rng, 200 + 8 * i);
            const Ray ray = oracle::random_ray(rng);
            CHECK(psd3d_locate(ray, road).point == road.points[oracle::argmin_road(ray, road.points, false)]);
            CHECK(psd2d_locate(ray, road).point == road.points[oracle::argmin_road(ray, road.points, true)]);
        }
    }
    SUBCASE("flat road: 2-D and 3-D agree") {
        std::mt19937_64 rng(201);
        RoadPath road = oracle::random_road(rng, 300);
        for (Vec3& p : road.points) p.z() = 0.0;
        for (int i = 0; i < 50; ++i) {
            const Ray ray = oracle::random_ray(rng);
            Ray flat = ray;
            flat.origin.z() = 0.0;
            flat.direction.z() = 0.0;
            CHECK(psd2d_locate(flat, road).point == psd3d_locate(flat, road).point);
        }
    }
    SUBCASE("elevated contrast case") {
        // A sits right above the ray's ground track but 5 m up; B is closer in 3-D.
        const RoadPath road{{Vec3(10, 0.5, 5), Vec3(20, 2, 1)}};
        const Ray ray{Vec3(0, 0, 1), Vec3(1, 0, 0)};
        CHECK(psd3d_locate(ray, road).point == road.points[1]);
        CHECK(psd2d_locate(ray, road).point == road.points[0]);
        CHECK(psd2d_locate(ray, road).point.z() == 5.0);
    }
    SUBCASE("flat road agrees with the ground plane within the sampling step") {
        const CameraModel cam = SyntheticSceneSpec::default_camera(1280, 960);
        const RoadPath road = straight_road(400);
        for (double x : {20.0, 55.5, 120.0, 260.3}) {
            const auto px = cam.project(Vec3(x, 0, 0));
            const Ray ray = pixel_to_ray(cam, px->x(), px->y());
            CHECK(std::abs(psd3d_locate(ray, road).distance - gp_intersect(ray).distance) <= 1.0);
        }
    }
}

TEST_CASE("aggregation heuristics") {
    SUBCASE("reductions") {
        const std::vector<double> v{10, 20, 90};
        CHECK(reduce(v, Aggregation::Max) == 90);
        CHECK(reduce(v, Aggregation::Min) == 10);
        CHECK(reduce(v, Aggregation::Mean) == 40);
        CHECK(reduce(v, Aggregation::Median) == 20);
        const std::vector<double> even{4, 1, 3, 2};
        CHECK(reduce(even, Aggregation::Median) == 2.5);
    }
    const CameraModel cam = SyntheticSceneSpec::default_camera(1280, 960);
    SUBCASE("one-pixel box: every heuristic equals the pixel estimate") {
        const BBox b{640, 700, 640, 700};
        const double d = gp_intersect(pixel_to_ray(cam, 640, 700)).distance;
        for (Aggregation a : {Aggregation::Center, Aggregation::Max, Aggregation::Min, Aggregation::Lowest,
                              Aggregation::Mean, Aggregation::Median})
            CHECK(aggregate_box(b, cam, {LocalizationMethod::GroundPlane, a, 2}).distance == doctest::Approx(d));
    }
    SUBCASE("per-pixel grid includes the last row and column") {
        const BBox b{600, 600, 611, 611};
        const double far = gp_intersect(pixel_to_ray(cam, 600, 600)).distance;
        const double near = gp_intersect(pixel_to_ray(cam, 611, 611)).distance;
        CHECK(aggregate_box(b, cam, {LocalizationMethod::GroundPlane, Aggregation::Min, 5}).distance ==
              doctest::Approx(near));
        CHECK(aggregate_box(b, cam, {LocalizationMethod::GroundPlane, Aggregation::Max, 5}).distance >=
              aggregate_box(b, cam, {LocalizationMethod::GroundPlane, Aggregation::Max, 1}).distance - 1e-9);
        CHECK(far > near);
    }
    SUBCASE("lowest uses the bottom-center pixel") {
        const BBox b{600, 500, 620, 540};
        const double d = gp_intersect(pixel_to_ray(cam, 610, 540)).distance;
        CHECK(aggregate_box(b, cam, {LocalizationMethod::GroundPlane, Aggregation::Lowest, 2}).distance ==
              doctest::Approx(d));
    }
    SUBCASE("box entirely above the horizon") {
        CHECK_THROWS_AS(aggregate_box(BBox{600, 10, 620, 30}, cam, {}), LocalizationError);
    }
    SUBCASE("a box straddling the horizon uses the pixels that hit the ground") {
        const auto horizon = cam.project(Vec3(1e6, 0, 0));
        const double hy = std::round(horizon->y());
        const BBox b{600, hy - 10, 620, hy + 10};
        CHECK_NOTHROW(aggregate_box(b, cam, {LocalizationMethod::GroundPlane, Aggregation::Max, 2}));
    }
    SUBCASE("road methods without a road fail") {
        CHECK_THROWS_AS(aggregate_box(BBox{600, 600, 610, 610}, cam, {LocalizationMethod::Road3D, Aggregation::Center, 2}),
                        LocalizationError);
    }
}

TEST_CASE("planted ground artifact at 100 m") {
    SyntheticSceneSpec spec;
    spec.vehicle = false;
    const Vec3 truth(std::sqrt(100.0 * 100.0 - 3.5 * 3.5), 3.5, 0.0);
    const auto px = spec.camera.project(truth);
    REQUIRE(px.has_value());
    const DistanceEstimate e = gp_intersect(pixel_to_ray(spec.camera, px->x(), px->y()));
    CHECK(std::abs(e.distance - 100.0) <= 1.0);
}

TEST_CASE("reflection below the ground plane: center undershoots, max does not go lower") {
    // Guardrail reflection 0.6 m above a road that has dropped 2 m by 60 m ahead.
    SyntheticSceneSpec spec;
    spec.vehicle = false;
    const CameraModel& cam = spec.camera;
    const Vec3 artifact(60.0, 6.0, -2.0 + 0.6);
    const auto px = cam.project(artifact);
    REQUIRE(px.has_value());
    GrayImage img(cam.width, cam.height, 0.03);
    add_blob(img, px->x(), px->y(), 0.35, 6.0);
    const auto boxes = propose(img, ProposerParams{});
    const BBox* hit = nullptr;
    for (const BBox& b : boxes)
        if (b.contains(std::round(px->x()), std::round(px->y()))) hit = &b;
    REQUIRE(hit != nullptr);
    const double center = aggregate_box(*hit, cam, {LocalizationMethod::GroundPlane, Aggregation::Center, 2}).distance;
    const double max = aggregate_box(*hit, cam, {LocalizationMethod::GroundPlane, Aggregation::Max, 2}).distance;
    CHECK(center < artifact.norm());
    CHECK(max >= center);
}

TEST_CASE("smooth_series") {
    const std::vector<double> constant{42, 42, 42};
    CHECK(smooth_series(constant, SeriesMode::Mean) == 42);
    CHECK(smooth_series(constant, SeriesMode::Median) == 42);
    const std::vector<double> ramp{100, 95, 90, 85, 80};
    CHECK(smooth_series(ramp, SeriesMode::Mean) == 90);
    CHECK(smooth_series(ramp, SeriesMode::Median) == 90);
    CHECK_THROWS_AS(smooth_series(std::vector<double>{}, SeriesMode::Mean), std::invalid_argument);
    CHECK_THROWS_AS(smooth_series(std::vector<double>(6, 1.0), SeriesMode::Mean), std::invalid_argument);

    SUBCASE("approaching headlamp: smoothed value stays at or above the latest estimate") {
        const SyntheticSceneSpec spec;
        std::vector<double> series;
        for (int f = spec.direct_sight_frame; f < spec.direct_sight_frame + 10; ++f) {
            const double x = spec.start_distance - spec.speed * f;
            const auto px = spec.camera.project(Vec3(x, spec.lane_offset, 0.0));
            series.push_back(gp_intersect(pixel_to_ray(spec.camera, px->x(), px->y())).distance);
            if (series.size() > kMaxSeriesLength) series.erase(series.begin());
            for (SeriesMode m : {SeriesMode::Mean, SeriesMode::Median}) CHECK(smooth_series(series, m) >= series.back());
        }
    }
}

TEST_CASE("method and heuristic names") {
    CHECK(parse_method("psd2d") == LocalizationMethod::Road2D);
    CHECK(parse_aggregation("lowest") == Aggregation::Lowest);
    CHECK_THROWS_AS(parse_method("lidar"), InputError);
    CHECK_THROWS_AS(parse_aggregation("mode"), InputError);
}
